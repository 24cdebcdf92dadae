//! Python bindings: instances, the three schedulers, validation and the
//! energy metrics.

use std::time::Duration;

use carrier_sched as cs;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

create_exception!(carrier_sched, ScheduleFailure, PyRuntimeError);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn schedule_err(e: cs::ScheduleError) -> PyErr {
    ScheduleFailure::new_err((e.kind(), e.to_string()))
}

#[pyclass(name = "Instance", frozen)]
pub struct PyInstance {
    inner: cs::ProblemInstance,
}

#[pymethods]
impl PyInstance {
    #[new]
    fn new(nodes: usize, edges: Vec<(usize, usize)>, tags: Vec<(u32, usize)>) -> PyResult<Self> {
        let topology = cs::Topology::new(nodes, &edges).map_err(value_err)?;
        let tags = tags.into_iter().map(|(id, host)| cs::Tag { id, host }).collect();
        let inner = cs::ProblemInstance::new(topology, tags).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = cs::parse_instance(text).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        cs::emit_instance(&self.inner)
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn tag_count(&self) -> usize {
        self.inner.tag_count()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.topology().edges().to_vec()
    }

    #[getter]
    fn tags(&self) -> Vec<(u32, usize)> {
        self.inner.tags().iter().map(|t| (t.id, t.host)).collect()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Instance(nodes={}, tags={})", self.inner.node_count(), self.inner.tag_count())
    }
}

#[pyclass(name = "Schedule", frozen)]
pub struct PySchedule {
    inner: cs::Schedule,
}

#[pymethods]
impl PySchedule {
    #[staticmethod]
    fn from_json(instance: &PyInstance, text: &str) -> PyResult<Self> {
        let inner = cs::parse_schedule(&instance.inner, text).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self, instance: &PyInstance) -> String {
        cs::emit_schedule(&instance.inner, &self.inner)
    }

    /// Schedule length `L`.
    #[getter]
    fn length(&self) -> usize {
        self.inner.len()
    }

    /// Total carrier assignments `C`.
    #[getter]
    fn carriers(&self) -> usize {
        self.inner.carrier_count()
    }

    /// Per slot, `(host, tag, carrier)` records.
    #[getter]
    fn slots(&self) -> Vec<Vec<(usize, u32, usize)>> {
        self.inner
            .slots
            .iter()
            .map(|s| s.interrogations.iter().map(|i| (i.host, i.tag, i.carrier)).collect())
            .collect()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

fn repair_policy(name: &str) -> PyResult<cs::RepairPolicy> {
    match name {
        "strict_fail" => Ok(cs::RepairPolicy::StrictFail),
        "greedy_repair" => Ok(cs::RepairPolicy::GreedyRepair),
        "heuristic_fallback" => Ok(cs::RepairPolicy::HeuristicFallback),
        other => Err(PyValueError::new_err(format!("unknown policy `{other}`"))),
    }
}

fn pe_mode(name: &str) -> PyResult<cs::PeMode> {
    match name {
        "none" => Ok(cs::PeMode::None),
        "degree" => Ok(cs::PeMode::Degree),
        "laplacian_eigenvalues" => Ok(cs::PeMode::LaplacianEigenvalues),
        other => Err(PyValueError::new_err(format!("unknown pe_mode `{other}`"))),
    }
}

#[pyclass(name = "GnnModel", frozen)]
pub struct PyGnnModel {
    inner: cs::GnnModel,
}

#[pymethods]
impl PyGnnModel {
    #[staticmethod]
    #[pyo3(signature = (num_blocks=12, num_heads=12, hidden_dim=72, pe_mode="degree", seed=0))]
    fn random(num_blocks: usize, num_heads: usize, hidden_dim: usize, pe_mode: &str, seed: u64) -> PyResult<Self> {
        let config = cs::GnnConfig {
            num_blocks,
            num_heads,
            hidden_dim,
            pe_mode: self::pe_mode(pe_mode)?,
        };
        let inner = cs::GnnModel::random(config, seed).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = cs::GnnModel::load_weights_file(path).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        let inner = cs::GnnModel::load_weights(data).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_weight_bytes())
    }

    #[getter]
    fn parameter_count(&self) -> usize {
        self.inner.parameter_count()
    }

    /// Logits `[carrier, tag_query, idle]` per node with every tag pending.
    fn forward(&self, instance: &PyInstance) -> PyResult<Vec<[f64; 3]>> {
        let inst = &instance.inner;
        let x = cs::build_feature_matrix(inst, &inst.tag_ids(), self.inner.config().pe_mode).map_err(value_err)?;
        Ok(self.inner.forward(&x, inst.topology()))
    }

    #[pyo3(signature = (instance, policy="greedy_repair", max_slots=None))]
    fn schedule(&self, py: Python<'_>, instance: &PyInstance, policy: &str, max_slots: Option<usize>) -> PyResult<PySchedule> {
        let policy = cs::InferencePolicy {
            repair: repair_policy(policy)?,
            max_slots,
        };
        let inner = py
            .detach(|| cs::schedule_with_gnn(&self.inner, &instance.inner, &policy))
            .map_err(schedule_err)?;
        Ok(PySchedule { inner })
    }
}

#[pyfunction]
fn solve_heuristic(instance: &PyInstance) -> PyResult<PySchedule> {
    let inner = cs::solve_heuristic(&instance.inner).map_err(schedule_err)?;
    Ok(PySchedule { inner })
}

#[pyfunction]
#[pyo3(signature = (instance, max_nodes=10, time_limit=Some(60.0), pruning=true))]
fn solve_optimal(
    py: Python<'_>,
    instance: &PyInstance,
    max_nodes: usize,
    time_limit: Option<f64>,
    pruning: bool,
) -> PyResult<PySchedule> {
    let time_limit = time_limit
        .map(Duration::try_from_secs_f64)
        .transpose()
        .map_err(value_err)?;
    let budget = cs::SolverBudget {
        max_nodes,
        time_limit,
        node_expansion_limit: None,
        pruning,
    };
    let inner = py
        .detach(|| cs::solve_optimal(&instance.inner, &budget))
        .map_err(schedule_err)?;
    Ok(PySchedule { inner })
}

/// Validation report as a JSON string.
#[pyfunction]
fn validate(instance: &PyInstance, schedule: &PySchedule) -> PyResult<String> {
    let report = cs::validate_schedule(&instance.inner, &schedule.inner).map_err(value_err)?;
    serde_json::to_string(&report).map_err(value_err)
}

/// `(C, L, objective)`.
#[pyfunction]
fn schedule_cost(instance: &PyInstance, schedule: &PySchedule) -> (u64, u64, u64) {
    let c = cs::schedule_cost(&instance.inner, &schedule.inner);
    (c.carriers, c.slots, c.objective)
}

#[pyfunction]
#[pyo3(signature = (count, node_range=(2, 10), tag_range=(1, 14), radius=0.5, seed=0))]
fn generate(
    count: usize,
    node_range: (usize, usize),
    tag_range: (usize, usize),
    radius: f64,
    seed: u64,
) -> PyResult<Vec<PyInstance>> {
    let config = cs::GeneratorConfig {
        node_range,
        tag_range,
        graph_model: cs::GraphModel::RandomGeometric { radius },
        seed,
        ..Default::default()
    };
    let corpus = cs::generate_corpus(&config, count).map_err(value_err)?;
    Ok(corpus.into_iter().map(|inner| PyInstance { inner }).collect())
}

#[pyfunction]
fn avg_energy_per_tag(carriers: u64, tags: u64) -> PyResult<f64> {
    if tags == 0 {
        return Err(PyValueError::new_err("tags must be at least 1"));
    }
    Ok(cs::avg_energy_per_tag(carriers, tags, &cs::RadioParams::default()))
}

#[pyfunction]
fn energy_saved_pct(c_reference: u64, c_candidate: u64, tags: u64) -> PyResult<f64> {
    if tags == 0 {
        return Err(PyValueError::new_err("tags must be at least 1"));
    }
    Ok(cs::metrics::energy_saved_pct(c_reference, c_candidate, tags, &cs::RadioParams::default()))
}

#[pymodule]
#[pyo3(name = "carrier_sched")]
fn carrier_sched_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PySchedule>()?;
    m.add_class::<PyGnnModel>()?;
    m.add("ScheduleFailure", m.py().get_type::<ScheduleFailure>())?;
    m.add_function(wrap_pyfunction!(solve_heuristic, m)?)?;
    m.add_function(wrap_pyfunction!(solve_optimal, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(schedule_cost, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(avg_energy_per_tag, m)?)?;
    m.add_function(wrap_pyfunction!(energy_saved_pct, m)?)?;
    Ok(())
}
