//! Energy model, savings metrics and the batch benchmark harness.
//!
//! All savings metrics use one sign convention: positive means the
//! candidate scheduler saves relative to the reference.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ProblemInstance;
use crate::scheduler::Scheduler;
use crate::validate::{schedule_cost, validate_schedule, ViolationKind};

pub const SIGN_CONVENTION: &str = "delta = reference - candidate; positive values are savings by the candidate";

/// Radio power draw (watts) and timing (seconds) of one tag interrogation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub p_tx: f64,
    pub p_rx: f64,
    pub t_tx: f64,
    pub t_rx: f64,
    pub t_req: f64,
    pub t_cg: f64,
}

impl Default for RadioParams {
    /// Zolertia Firefly reference values.
    fn default() -> Self {
        Self {
            p_tx: 0.102,
            p_rx: 0.072,
            t_tx: 128e-6,
            t_rx: 256e-6,
            t_req: 128e-6,
            t_cg: 15.75e-3,
        }
    }
}

impl RadioParams {
    pub fn is_valid(&self) -> bool {
        [self.p_tx, self.p_rx, self.t_tx, self.t_rx, self.t_req, self.t_cg]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("reference value is zero, ratio undefined")]
    ZeroReference,
    #[error("no outcomes to aggregate")]
    Empty,
}

/// Average energy (joules) to query one tag when a schedule uses `carriers`
/// carrier slots for `tags` tags:
/// `P_tx·t_tx + P_rx·((C/T)·t_req + t_rx) + P_tx·(t_req + (C/T)·t_cg)`.
pub fn avg_energy_per_tag(carriers: u64, tags: u64, radio: &RadioParams) -> f64 {
    assert!(tags >= 1, "energy per tag needs at least one tag");
    let ratio = carriers as f64 / tags as f64;
    radio.p_tx * radio.t_tx
        + radio.p_rx * (ratio * radio.t_req + radio.t_rx)
        + radio.p_tx * (radio.t_req + ratio * radio.t_cg)
}

pub fn carriers_saved(c_reference: u64, c_candidate: u64) -> i64 {
    c_reference as i64 - c_candidate as i64
}

pub fn carriers_saved_pct(c_reference: u64, c_candidate: u64) -> Result<f64, MetricError> {
    pct(c_reference, c_candidate)
}

pub fn timeslots_saved(l_reference: u64, l_candidate: u64) -> i64 {
    l_reference as i64 - l_candidate as i64
}

pub fn timeslots_saved_pct(l_reference: u64, l_candidate: u64) -> Result<f64, MetricError> {
    pct(l_reference, l_candidate)
}

fn pct(reference: u64, candidate: u64) -> Result<f64, MetricError> {
    if reference == 0 {
        return Err(MetricError::ZeroReference);
    }
    Ok((reference as f64 - candidate as f64) / reference as f64 * 100.0)
}

/// Relative energy saving of the candidate in percent of the reference's
/// per-tag energy.
pub fn energy_saved_pct(c_reference: u64, c_candidate: u64, tags: u64, radio: &RadioParams) -> f64 {
    let e_ref = avg_energy_per_tag(c_reference, tags, radio);
    let e_cand = avg_energy_per_tag(c_candidate, tags, radio);
    (e_ref - e_cand) / e_ref * 100.0
}

/// Percentage of successful runs.
pub fn completion_rate(outcomes: &[bool]) -> Result<f64, MetricError> {
    if outcomes.is_empty() {
        return Err(MetricError::Empty);
    }
    let ok = outcomes.iter().filter(|&&s| s).count();
    Ok(100.0 * ok as f64 / outcomes.len() as f64)
}

pub const PERCENTILES: [f64; 6] = [1.0, 25.0, 50.0, 75.0, 95.0, 99.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std_err: f64,
    /// Values at [`PERCENTILES`], linear interpolation between ranks.
    pub percentiles: [f64; 6],
}

/// Order-independent summary: values are sorted before any reduction.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let std_err = if n > 1 {
        let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    let percentiles = PERCENTILES.map(|p| {
        let pos = p / 100.0 * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    });
    Some(Summary {
        count: n,
        mean,
        std_err,
        percentiles,
    })
}

/// One (instance, scheduler) run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub instance_id: usize,
    pub nodes: usize,
    pub tags: usize,
    pub scheduler: String,
    pub success: bool,
    pub carriers: Option<u64>,
    pub slots: Option<u64>,
    pub objective: Option<u64>,
    pub runtime_ms: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchedulerSummary {
    pub scheduler: String,
    pub runs: usize,
    pub successes: usize,
    /// Π, percent of instances with a complete schedule.
    pub completion_pct: f64,
}

/// Statistics for one scheduler over the instances of one `(N, T)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub nodes: usize,
    pub tags: usize,
    pub scheduler: String,
    pub runs: usize,
    pub completion_pct: f64,
    /// Paired against the reference on instances where both succeeded.
    pub paired: usize,
    pub carriers_saved: Option<Summary>,
    pub timeslots_saved: Option<Summary>,
    pub energy_saved_pct: Option<Summary>,
    pub runtime_ms: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub reference: String,
    pub sign_convention: String,
    pub radio: RadioParams,
    pub schedulers: Vec<SchedulerSummary>,
    pub cells: Vec<CellSummary>,
    pub records: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("benchmark corpus is empty")]
    EmptyCorpus,
    #[error("reference scheduler `{0}` is not in the scheduler list")]
    UnknownReference(String),
    #[error("scheduler name `{0}` appears twice")]
    DuplicateScheduler(String),
    #[error("radio parameters must be strictly positive")]
    InvalidRadio,
    #[error("scheduler `{scheduler}` emitted an invalid schedule for instance {instance_id}: {kinds:?}")]
    InvalidSchedule {
        scheduler: String,
        instance_id: usize,
        kinds: Vec<ViolationKind>,
    },
}

pub const CSV_HEADER: &str = "instance_id,N,T,scheduler,success,C,L,objective,runtime_ms";

impl BenchmarkReport {
    /// One row per (instance, scheduler); empty C/L/objective on failure.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{:.3}",
                r.instance_id,
                r.nodes,
                r.tags,
                r.scheduler,
                r.success,
                opt(r.carriers),
                opt(r.slots),
                opt(r.objective),
                r.runtime_ms
            );
        }
        out
    }

    pub fn scheduler(&self, name: &str) -> Option<&SchedulerSummary> {
        self.schedulers.iter().find(|s| s.scheduler == name)
    }
}

/// Runs every scheduler on every instance, validates each schedule and
/// aggregates completion rate and paired savings against `reference`.
pub fn run_benchmark(
    corpus: &[ProblemInstance],
    schedulers: &[&dyn Scheduler],
    reference: &str,
    radio: &RadioParams,
) -> Result<BenchmarkReport, BenchError> {
    if corpus.is_empty() {
        return Err(BenchError::EmptyCorpus);
    }
    if !radio.is_valid() {
        return Err(BenchError::InvalidRadio);
    }
    let mut names = BTreeSet::new();
    for s in schedulers {
        if !names.insert(s.name()) {
            return Err(BenchError::DuplicateScheduler(s.name().to_string()));
        }
    }
    if !names.contains(reference) {
        return Err(BenchError::UnknownReference(reference.to_string()));
    }

    let mut records = Vec::with_capacity(corpus.len() * schedulers.len());
    for (id, instance) in corpus.iter().enumerate() {
        for scheduler in schedulers {
            let started = Instant::now();
            let outcome = scheduler.schedule(instance);
            let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
            let mut record = RunRecord {
                instance_id: id,
                nodes: instance.node_count(),
                tags: instance.tag_count(),
                scheduler: scheduler.name().to_string(),
                success: false,
                carriers: None,
                slots: None,
                objective: None,
                runtime_ms,
                failure: None,
            };
            match outcome {
                Ok(schedule) => {
                    let invalid = |kinds| BenchError::InvalidSchedule {
                        scheduler: scheduler.name().to_string(),
                        instance_id: id,
                        kinds,
                    };
                    let report = validate_schedule(instance, &schedule).map_err(|_| invalid(vec![]))?;
                    if !report.valid {
                        return Err(invalid(report.violations.iter().map(|v| v.kind).collect()));
                    }
                    let cost = schedule_cost(instance, &schedule);
                    record.success = true;
                    record.carriers = Some(cost.carriers);
                    record.slots = Some(cost.slots);
                    record.objective = Some(cost.objective);
                }
                Err(e) => record.failure = Some(e.kind().to_string()),
            }
            records.push(record);
        }
    }

    let summaries = schedulers
        .iter()
        .map(|s| {
            let outcomes: Vec<bool> = records
                .iter()
                .filter(|r| r.scheduler == s.name())
                .map(|r| r.success)
                .collect();
            SchedulerSummary {
                scheduler: s.name().to_string(),
                runs: outcomes.len(),
                successes: outcomes.iter().filter(|&&x| x).count(),
                completion_pct: completion_rate(&outcomes).expect("corpus is non-empty"),
            }
        })
        .collect();

    // (N, T) -> scheduler -> records
    let mut cells: BTreeMap<(usize, usize), BTreeMap<&str, Vec<&RunRecord>>> = BTreeMap::new();
    for r in &records {
        cells
            .entry((r.nodes, r.tags))
            .or_default()
            .entry(r.scheduler.as_str())
            .or_default()
            .push(r);
    }
    let mut cell_summaries = Vec::new();
    for ((nodes, tags), by_scheduler) in &cells {
        let reference_runs: BTreeMap<usize, &RunRecord> = by_scheduler[reference]
            .iter()
            .map(|r| (r.instance_id, *r))
            .collect();
        for (name, runs) in by_scheduler {
            let outcomes: Vec<bool> = runs.iter().map(|r| r.success).collect();
            let (mut dc, mut dl, mut de) = (vec![], vec![], vec![]);
            for r in runs.iter().filter(|r| r.success) {
                let Some(reference) = reference_runs.get(&r.instance_id).filter(|x| x.success) else {
                    continue;
                };
                let (c_ref, c) = (reference.carriers.unwrap(), r.carriers.unwrap());
                dc.push(carriers_saved(c_ref, c) as f64);
                dl.push(timeslots_saved(reference.slots.unwrap(), r.slots.unwrap()) as f64);
                de.push(energy_saved_pct(c_ref, c, r.tags as u64, radio));
            }
            let runtimes: Vec<f64> = runs.iter().map(|r| r.runtime_ms).collect();
            cell_summaries.push(CellSummary {
                nodes: *nodes,
                tags: *tags,
                scheduler: name.to_string(),
                runs: runs.len(),
                completion_pct: completion_rate(&outcomes).expect("cell is non-empty"),
                paired: dc.len(),
                carriers_saved: summarize(&dc),
                timeslots_saved: summarize(&dl),
                energy_saved_pct: summarize(&de),
                runtime_ms: summarize(&runtimes),
            });
        }
    }

    Ok(BenchmarkReport {
        reference: reference.to_string(),
        sign_convention: SIGN_CONVENTION.to_string(),
        radio: *radio,
        schedulers: summaries,
        cells: cell_summaries,
        records,
    })
}
