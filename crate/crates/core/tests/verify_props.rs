use lattice_reach::oracle::random_network;
use lattice_reach::reach::lineage_key;
use lattice_reach::verify::map_back_halfspace;
use lattice_reach::{
    box_lattice, check_property, extract_unsafe_inputs, reach, Halfspace, Network, ReachConfig, ReachResult, Status,
    UnsafeSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-9;

fn setup(seed: u64) -> (Network, ReachResult) {
    let net = random_network(2, &[5, 4], 3, seed).unwrap();
    let input = box_lattice(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
    let result = reach(&net, &input, &ReachConfig::default()).unwrap();
    (net, result)
}

/// Output 0 at least as large as the others, plus a threshold on output 1.
fn sample_unsafe_set(result: &ReachResult) -> UnsafeSet {
    let t = &result.tuples[0];
    let y = t.apply(&t.region.centroid());
    UnsafeSet::new(vec![
        vec![
            Halfspace::new(vec![-1.0, 1.0, 0.0], 0.0),
            Halfspace::new(vec![-1.0, 0.0, 1.0], 0.0),
        ],
        vec![Halfspace::new(vec![0.0, 1.0, 0.0], -y[1])],
    ])
    .unwrap()
}

#[test]
fn mapped_halfspace_agrees_with_outputs() {
    let (_, result) = setup(1);
    let h = Halfspace::new(vec![0.3, -1.2, 2.0], 0.4);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for t in &result.tuples {
        let m = map_back_halfspace(t, &h).unwrap();
        for _ in 0..5 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let direct = h.value(&t.apply(&x));
            assert!((direct - m.value(&x)).abs() < 1e-12);
        }
    }
}

#[test]
fn witnesses_are_sound() {
    for seed in 0..10 {
        let (net, result) = setup(seed);
        let unsafe_set = sample_unsafe_set(&result);
        let verdict = check_property(&net, &result, &unsafe_set, EPS).unwrap();
        if verdict.status == Status::Sat {
            let w = verdict.witness.unwrap();
            assert!(w.iter().all(|v| (-1.0 - EPS..=1.0 + EPS).contains(v)));
            let y = net.forward(&w).unwrap();
            assert!(unsafe_set.contains(&y, 1e-7), "seed {seed}: {y:?}");
            assert_eq!(verdict.witness_output.unwrap(), y);
        } else {
            assert!(verdict.unsafe_regions.is_empty());
        }
    }
}

#[test]
fn extraction_matches_sampling() {
    for seed in 0..6 {
        let (net, result) = setup(seed);
        let unsafe_set = sample_unsafe_set(&result);
        let regions = extract_unsafe_inputs(&net, &result, &unsafe_set, EPS).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..300 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = net.forward(&x).unwrap();
            let margin = unsafe_set
                .disjuncts
                .iter()
                .flatten()
                .map(|h| h.value(&y).abs())
                .chain(net.pre_activations(&x).unwrap().into_iter().flatten().map(f64::abs))
                .fold(f64::INFINITY, f64::min);
            if margin < 1e-6 {
                continue;
            }
            let inside = regions.iter().any(|r| r.contains_point(&x, 1e-9).unwrap());
            assert_eq!(inside, unsafe_set.contains(&y, 0.0), "seed {seed} x {x:?}");
        }
    }
}

#[test]
fn extracted_pieces_stay_in_their_region() {
    let (net, result) = setup(3);
    let unsafe_set = sample_unsafe_set(&result);
    let verdict = check_property(&net, &result, &unsafe_set, EPS).unwrap();
    assert_eq!(verdict.unsafe_regions.len(), verdict.unsafe_sources.len());
    for (piece, &src) in verdict.unsafe_regions.iter().zip(&verdict.unsafe_sources) {
        piece.validate().unwrap();
        let parent = &result.tuples[src].region;
        for v in piece.vertices() {
            assert!(parent.contains_point(v, 1e-9).unwrap());
        }
    }
    let mut sources = verdict.unsafe_sources.clone();
    sources.dedup();
    assert!(sources.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn one_reach_result_serves_many_properties() {
    let (net, shared) = setup(5);
    let a = sample_unsafe_set(&shared);
    let b = UnsafeSet::new(vec![vec![Halfspace::new(vec![1.0, 0.0, 0.0], -0.5)]]).unwrap();
    let first = (
        check_property(&net, &shared, &a, EPS).unwrap(),
        check_property(&net, &shared, &b, EPS).unwrap(),
    );
    let (_, fresh_a) = setup(5);
    let (_, fresh_b) = setup(5);
    assert_eq!(first.0, check_property(&net, &fresh_a, &a, EPS).unwrap());
    assert_eq!(first.1, check_property(&net, &fresh_b, &b, EPS).unwrap());
}

#[test]
fn unreachable_threshold_is_safe() {
    let (net, result) = setup(7);
    let max_y0 = result
        .tuples
        .iter()
        .flat_map(lattice_reach::reach::output_vertices)
        .map(|y| y[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let beyond = UnsafeSet::new(vec![vec![Halfspace::new(vec![-1.0, 0.0, 0.0], max_y0 + 1.0)]]).unwrap();
    let verdict = check_property(&net, &result, &beyond, EPS).unwrap();
    assert_eq!(verdict.status, Status::Unsat);
    assert!(verdict.witness.is_none() && verdict.unsafe_regions.is_empty());
    let just_below = UnsafeSet::new(vec![vec![Halfspace::new(vec![-1.0, 0.0, 0.0], max_y0 - 1e-3)]]).unwrap();
    assert_eq!(
        check_property(&net, &result, &just_below, EPS).unwrap().status,
        Status::Sat
    );
}

#[test]
fn witness_is_first_in_lineage_order() {
    let (net, result) = setup(2);
    let unsafe_set = sample_unsafe_set(&result);
    let verdict = check_property(&net, &result, &unsafe_set, EPS).unwrap();
    let Some(first) = verdict.unsafe_sources.first() else {
        return;
    };
    let keys: Vec<String> = result.tuples.iter().map(|t| lineage_key(&t.lineage)).collect();
    let mut sorted = keys.clone();
    sorted.sort_by_key(|k| k.replace('+', "0").replace('-', "1"));
    assert_eq!(keys, sorted);
    assert_eq!(verdict.witness.as_deref(), Some(verdict.unsafe_regions[0].vertex(0)));
    assert!(*first < result.tuples.len());
}
