//! Python bindings: networks, face lattices, reachability, verification and
//! the region oracle.

use lattice_reach::oracle::{enumerate_regions_lp, random_network, sample_check};
use lattice_reach::reach::output_vertices;
use lattice_reach::{
    box_lattice, builtin_property, check_property, reach as run_reach, Error, FaceLattice, Hyperplane, Network,
    Property, ReachConfig, ReachResult, SplitOutcome, Strategy,
};
use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn column(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

#[pyclass(name = "Network", module = "lattice_reach", frozen)]
struct PyNetwork(Network);

#[pymethods]
impl PyNetwork {
    /// Loads `.nnet` text or network JSON.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Network::load(path).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Network::from_json(text).map(Self).map_err(err)
    }

    /// Dense net with standard normal weights: ReLU hidden layers, then a
    /// linear layer of width `outputs` unless it is zero.
    #[staticmethod]
    #[pyo3(signature = (inputs, hidden, outputs=0, seed=0))]
    fn random(inputs: usize, hidden: Vec<usize>, outputs: usize, seed: u64) -> PyResult<Self> {
        random_network(inputs, &hidden, outputs, seed).map(Self).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.0.input_dim()
    }

    #[getter]
    fn output_dim(&self) -> usize {
        self.0.output_dim()
    }

    #[getter]
    fn layer_widths(&self) -> Vec<usize> {
        self.0.layers().iter().map(|l| l.width()).collect()
    }

    fn forward(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.forward(&x).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(inputs={}, widths={:?})",
            self.0.input_dim(),
            self.layer_widths()
        )
    }
}

#[pyclass(name = "FaceLattice", module = "lattice_reach", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFaceLattice(FaceLattice);

#[pymethods]
impl PyFaceLattice {
    #[staticmethod]
    #[pyo3(name = "box")]
    fn from_box(lower: Vec<f64>, upper: Vec<f64>) -> PyResult<Self> {
        box_lattice(&lower, &upper).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let lattice: FaceLattice = serde_json::from_str(text).map_err(|e| err(e.into()))?;
        lattice.validate().map_err(err)?;
        Ok(Self(lattice))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| err(e.into()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn ambient_dim(&self) -> usize {
        self.0.ambient_dim()
    }

    #[getter]
    fn vertices(&self) -> Vec<Vec<f64>> {
        self.0.vertices().map(<[f64]>::to_vec).collect()
    }

    fn face_counts(&self) -> Vec<usize> {
        self.0.face_counts()
    }

    fn centroid(&self) -> Vec<f64> {
        self.0.centroid()
    }

    #[pyo3(signature = (x, tol=1e-9))]
    fn contains(&self, x: Vec<f64>, tol: f64) -> PyResult<bool> {
        self.0.contains_point(&x, tol).map_err(err)
    }

    fn validate(&self) -> PyResult<()> {
        self.0.validate().map_err(err)
    }

    /// Splits by `normal·x + offset = 0`; returns `(positive, negative)`
    /// with `None` for an empty side.
    #[pyo3(signature = (normal, offset, eps=1e-9))]
    fn split(&self, normal: Vec<f64>, offset: f64, eps: f64) -> PyResult<(Option<Self>, Option<Self>)> {
        let h = Hyperplane::new(normal, offset).map_err(err)?;
        Ok(match self.0.split_outcome(&h, eps).map_err(err)? {
            SplitOutcome::Positive => (Some(self.clone()), None),
            SplitOutcome::Negative => (None, Some(self.clone())),
            SplitOutcome::Divided { positive, negative } => (Some(Self(positive)), Some(Self(negative))),
        })
    }

    fn __repr__(&self) -> String {
        format!("FaceLattice(dim={}, faces={:?})", self.0.dim(), self.0.face_counts())
    }
}

#[pyclass(name = "Property", module = "lattice_reach", frozen)]
struct PyProperty(Property);

#[pymethods]
impl PyProperty {
    /// `phi1`..`phi4` or `phi4b`, in raw units.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        builtin_property(name).map(Self).map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Property::load(path).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Property::from_json(text).map(Self).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    /// The same property in the network's units.
    fn to_network_space(&self, net: &PyNetwork) -> PyResult<Self> {
        self.0.to_network_space(&net.0).map(Self).map_err(err)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }

    #[getter]
    fn input_lower(&self) -> Vec<f64> {
        self.0.input_lower.clone()
    }

    #[getter]
    fn input_upper(&self) -> Vec<f64> {
        self.0.input_upper.clone()
    }

    fn input_lattice(&self) -> PyResult<PyFaceLattice> {
        self.0.input_lattice().map(PyFaceLattice).map_err(err)
    }
}

#[pyclass(name = "ReachResult", module = "lattice_reach", frozen)]
struct PyReachResult(ReachResult);

#[pymethods]
impl PyReachResult {
    #[getter]
    fn region_count(&self) -> usize {
        self.0.tuples.len()
    }

    #[getter]
    fn splits_performed(&self) -> u64 {
        self.0.stats.splits_performed
    }

    #[getter]
    fn per_layer_counts(&self) -> Vec<usize> {
        self.0.stats.per_layer_counts.clone()
    }

    #[getter]
    fn wall_time(&self) -> f64 {
        self.0.stats.wall_time.as_secs_f64()
    }

    /// One dict per region: `lineage`, `region`, `map`, `shift`,
    /// `output_vertices`.
    fn regions<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.0
            .tuples
            .iter()
            .map(|t| {
                let d = PyDict::new(py);
                d.set_item("lineage", t.lineage_key())?;
                d.set_item("region", PyFaceLattice(t.region.clone()))?;
                d.set_item("map", rows(&t.map))?;
                d.set_item("shift", column(&t.shift))?;
                d.set_item("output_vertices", output_vertices(t))?;
                Ok(d)
            })
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.tuples.len()
    }
}

fn config(eps: f64, workers: Option<usize>, strategy: &str) -> PyResult<ReachConfig> {
    let mut cfg = ReachConfig {
        eps,
        strategy: strategy.parse::<Strategy>().map_err(PyValueError::new_err)?,
        ..ReachConfig::default()
    };
    if let Some(w) = workers {
        cfg.workers = w.max(1);
    }
    Ok(cfg)
}

/// Every linear region of `net` over `input`.
#[pyfunction]
#[pyo3(signature = (net, input, eps=1e-9, workers=None, strategy="split-at:1"))]
fn reach(
    py: Python<'_>,
    net: &PyNetwork,
    input: &PyFaceLattice,
    eps: f64,
    workers: Option<usize>,
    strategy: &str,
) -> PyResult<PyReachResult> {
    let cfg = config(eps, workers, strategy)?;
    py.detach(|| run_reach(&net.0, &input.0, &cfg))
        .map(PyReachResult)
        .map_err(err)
}

/// Reach over the property's box (converted to network units) and check it.
/// Returns a dict with `status`, `witness`, `witness_output`,
/// `region_count` and `unsafe_regions`.
#[pyfunction]
#[pyo3(signature = (net, prop, eps=1e-9, workers=None, strategy="split-at:1"))]
fn verify<'py>(
    py: Python<'py>,
    net: &PyNetwork,
    prop: &PyProperty,
    eps: f64,
    workers: Option<usize>,
    strategy: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(eps, workers, strategy)?;
    let (result, verdict) = py
        .detach(|| {
            let p = prop.0.to_network_space(&net.0)?;
            let result = run_reach(&net.0, &p.input_lattice()?, &cfg)?;
            let verdict = check_property(&net.0, &result, &p.unsafe_set, eps)?;
            Ok::<_, Error>((result, verdict))
        })
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("status", verdict.status.to_string())?;
    d.set_item("witness", verdict.witness)?;
    d.set_item("witness_output", verdict.witness_output)?;
    d.set_item("region_count", result.tuples.len())?;
    let regions: Vec<PyFaceLattice> = verdict.unsafe_regions.into_iter().map(PyFaceLattice).collect();
    d.set_item("unsafe_regions", regions)?;
    Ok(d)
}

type RegionTriple = (String, Vec<Vec<f64>>, Vec<f64>);

/// Activation patterns with a full-dimensional region in the box, as
/// `(pattern, map, shift)` with `pattern` in the same `+`/`-` format as
/// region lineages.
#[pyfunction]
#[pyo3(signature = (net, lower, upper, cap=100_000))]
fn enumerate_regions(net: &PyNetwork, lower: Vec<f64>, upper: Vec<f64>, cap: usize) -> PyResult<Vec<RegionTriple>> {
    let regions = enumerate_regions_lp(&net.0, &lower, &upper, cap).map_err(err)?;
    Ok(regions
        .iter()
        .map(|r| (r.pattern.key(), rows(&r.map), column(&r.shift)))
        .collect())
}

/// Sampling report as a JSON string.
#[pyfunction(name = "sample_check")]
#[pyo3(signature = (net, result, samples=2000, seed=0, tol=1e-7))]
fn py_sample_check(net: &PyNetwork, result: &PyReachResult, samples: usize, seed: u64, tol: f64) -> PyResult<String> {
    let report = sample_check(&net.0, &result.0, samples, seed, tol).map_err(err)?;
    serde_json::to_string(&report).map_err(|e| err(e.into()))
}

#[pymodule]
#[pyo3(name = "lattice_reach")]
fn lattice_reach_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyFaceLattice>()?;
    m.add_class::<PyProperty>()?;
    m.add_class::<PyReachResult>()?;
    m.add_function(wrap_pyfunction!(reach, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_regions, m)?)?;
    m.add_function(wrap_pyfunction!(py_sample_check, m)?)?;
    Ok(())
}
