use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TINY: &str = "\
// 2-2-1 test network
2,2,1,2,
2,2,1,
0,
-5.0,-5.0,
5.0,5.0,
0.0,0.0,0.0,
1.0,1.0,1.0,
1.0,1.0,
1.0,-1.0,
0.0,
0.0,
1.0,1.0,
0.0,
";

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        std::fs::write(dir.path().join("tiny.nnet"), TINY).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Property over [-1, 1]^2 that is unsafe when the output reaches `threshold`.
    fn property(&self, threshold: f64) -> PathBuf {
        let path = self.path(&format!("prop_{threshold}.json"));
        let json = format!(
            r#"{{"name":"above_{threshold}","input_lower":[-1,-1],"input_upper":[1,1],"unsafe":[[{{"a":[-1],"c":{threshold}}}]],"normalized":true}}"#
        );
        std::fs::write(&path, json).unwrap();
        path
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_lattice-reach"))
            .args(args)
            .env_remove("LATTICE_REACH_JOBS")
            .output()
            .unwrap()
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn reach_writes_four_regions() {
    let f = Fixture::new();
    let (net, prop, out) = (f.path("tiny.nnet"), f.property(3.0), f.path("regions.json"));
    let o = f.run(&["reach", "--net", s(&net), "--property", s(&prop), "--out", s(&out)]);
    assert!(o.status.success(), "{o:?}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["regions"].as_array().unwrap().len(), 4);
    assert_eq!(json["stats"]["region_count"], 4);
    assert!(stdout(&o).contains("regions: 4"));
}

#[test]
fn verify_exit_codes() {
    let f = Fixture::new();
    let net = f.path("tiny.nnet");
    let safe = f.run(&["verify", "--net", s(&net), "--property", s(&f.property(3.0))]);
    assert_eq!(safe.status.code(), Some(0), "{safe:?}");
    assert!(stdout(&safe).contains("UNSAT"));

    let verdict = f.path("verdict.json");
    let regions = f.path("unsafe.json");
    let unsafe_run = f.run(&[
        "verify",
        "--net",
        s(&net),
        "--property",
        s(&f.property(1.5)),
        "--out",
        s(&verdict),
        "--regions-out",
        s(&regions),
    ]);
    assert_eq!(unsafe_run.status.code(), Some(1), "{unsafe_run:?}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&verdict).unwrap()).unwrap();
    assert_eq!(v["status"], "SAT");
    assert_eq!(v["witness"].as_array().unwrap().len(), 2);
    assert!(v["unsafe_region_count"].as_u64().unwrap() > 0);
    assert_eq!(v["unsafe_regions_file"], s(&regions));
    assert!(regions.exists());
}

#[test]
fn errors_exit_with_two() {
    let f = Fixture::new();
    let net = f.path("tiny.nnet");
    let bad = f.path("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let o = f.run(&["verify", "--net", s(&net), "--property", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let o = f.run(&[
        "verify",
        "--net",
        s(&f.path("missing.nnet")),
        "--property",
        s(&f.property(3.0)),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = f.run(&["verify", "--net", s(&net), "--property", "phi99"]);
    assert_eq!(o.status.code(), Some(2));

    // phi1 has five inputs, the fixture two.
    let o = f.run(&["verify", "--net", s(&net), "--property", "phi1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = f.run(&[
        "reach",
        "--net",
        s(&net),
        "--property",
        s(&f.property(3.0)),
        "--strategy",
        "sideways",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn extract_unsafe_writes_polytopes() {
    let f = Fixture::new();
    let out = f.path("pieces.json");
    let o = f.run(&[
        "extract-unsafe",
        "--net",
        s(&f.path("tiny.nnet")),
        "--property",
        s(&f.property(1.5)),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{o:?}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let n = json["regions"].as_array().unwrap().len();
    assert!(n > 0);
    assert!(stdout(&o).contains(&format!("unsafe polytopes: {n}")));
}

#[test]
fn sample_check_passes() {
    let f = Fixture::new();
    let report = f.path("report.json");
    let o = f.run(&[
        "sample-check",
        "--net",
        s(&f.path("tiny.nnet")),
        "--property",
        s(&f.property(3.0)),
        "--samples",
        "300",
        "--seed",
        "4",
        "--out",
        s(&report),
    ]);
    assert!(o.status.success(), "{o:?}");
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["covered"], 300);
    assert_eq!(r["uncovered"], 0);
}

#[test]
fn csv_with_plot_dims() {
    let f = Fixture::new();
    let csv = f.path("v.csv");
    let o = f.run(&[
        "reach",
        "--net",
        s(&f.path("tiny.nnet")),
        "--property",
        s(&f.property(3.0)),
        "--csv",
        s(&csv),
        "--plot-dims",
        "0,0",
    ]);
    assert!(o.status.success(), "{o:?}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("region,y0,y0"));
    assert!(lines.all(|l| l.split(',').count() == 3));
}

#[test]
fn jobs_from_environment_and_identical_output() {
    let f = Fixture::new();
    let (net, prop) = (f.path("tiny.nnet"), f.property(3.0));
    let (a, b) = (f.path("a.json"), f.path("b.json"));
    let o = Command::new(env!("CARGO_BIN_EXE_lattice-reach"))
        .args(["reach", "--net", s(&net), "--property", s(&prop), "--out", s(&a)])
        .env("LATTICE_REACH_JOBS", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    let o = f.run(&[
        "reach",
        "--net",
        s(&net),
        "--property",
        s(&prop),
        "--out",
        s(&b),
        "--jobs",
        "8",
        "--strategy",
        "per-layer",
    ]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn info_describes_network() {
    let f = Fixture::new();
    let o = f.run(&["info", "--net", s(&f.path("tiny.nnet"))]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("inputs: 2"));
    assert!(text.contains("layers: 2, 1 (linear)"));
    assert!(text.contains("relu neurons: 2"));
}
