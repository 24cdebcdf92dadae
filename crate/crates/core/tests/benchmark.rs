use carrier_sched::metrics::{run_benchmark, BenchError, CellSummary};
use carrier_sched::{
    generate_corpus, ExactScheduler, GeneratorConfig, HeuristicScheduler, ProblemInstance, RadioParams,
    Schedule, ScheduleError, Scheduler, Timeslot, ViolationKind,
};

/// Succeeds only on instances with an even tag count.
struct EvenOnly;

impl Scheduler for EvenOnly {
    fn name(&self) -> &str {
        "even"
    }

    fn schedule(&self, instance: &ProblemInstance) -> Result<Schedule, ScheduleError> {
        if instance.tag_count() % 2 == 0 {
            carrier_sched::solve_heuristic(instance)
        } else {
            Err(ScheduleError::InvalidPolicy("odd".into()))
        }
    }
}

/// Emits an empty slot.
struct Broken;

impl Scheduler for Broken {
    fn name(&self) -> &str {
        "broken"
    }

    fn schedule(&self, instance: &ProblemInstance) -> Result<Schedule, ScheduleError> {
        Ok(Schedule::new(vec![Timeslot::from_interrogations(instance.node_count(), vec![])]))
    }
}

fn corpus() -> Vec<ProblemInstance> {
    let config = GeneratorConfig {
        node_range: (3, 6),
        tag_range: (2, 3),
        seed: 21,
        ..Default::default()
    };
    generate_corpus(&config, 60).unwrap()
}

fn without_runtime(cells: &[CellSummary]) -> Vec<CellSummary> {
    cells
        .iter()
        .cloned()
        .map(|mut c| {
            c.runtime_ms = None;
            c
        })
        .collect()
}

#[test]
fn aggregates_ignore_corpus_order() {
    let corpus = corpus();
    let mut reversed = corpus.clone();
    reversed.reverse();
    let exact = ExactScheduler::default();
    let schedulers: [&dyn Scheduler; 3] = [&HeuristicScheduler, &exact, &EvenOnly];
    let radio = RadioParams::default();
    let a = run_benchmark(&corpus, &schedulers, "heuristic", &radio).unwrap();
    let b = run_benchmark(&reversed, &schedulers, "heuristic", &radio).unwrap();
    assert_eq!(a.schedulers, b.schedulers);
    assert_eq!(without_runtime(&a.cells), without_runtime(&b.cells));
    assert_eq!(a.records.len(), 180);
}

#[test]
fn deltas_only_where_both_succeed() {
    let corpus = corpus();
    let schedulers: [&dyn Scheduler; 2] = [&HeuristicScheduler, &EvenOnly];
    let report = run_benchmark(&corpus, &schedulers, "heuristic", &RadioParams::default()).unwrap();
    let even = corpus.iter().filter(|i| i.tag_count() % 2 == 0).count();
    let summary = report.scheduler("even").unwrap();
    assert_eq!(summary.successes, even);
    assert!((summary.completion_pct - 100.0 * even as f64 / 60.0).abs() < 1e-12);
    for cell in report.cells.iter().filter(|c| c.scheduler == "even") {
        if cell.tags % 2 == 1 {
            assert_eq!(cell.paired, 0);
            assert!(cell.carriers_saved.is_none());
        } else {
            assert_eq!(cell.paired, cell.runs);
            // identical to the reference, so zero savings everywhere
            let s = cell.energy_saved_pct.as_ref().unwrap();
            assert_eq!(s.mean, 0.0);
            assert_eq!(s.percentiles, [0.0; 6]);
        }
    }
    let csv = report.to_csv();
    let failed = csv.lines().filter(|l| l.contains(",even,false,,,,")).count();
    assert_eq!(failed, 60 - even);
}

#[test]
fn invalid_schedule_is_a_hard_error() {
    let schedulers: [&dyn Scheduler; 2] = [&HeuristicScheduler, &Broken];
    match run_benchmark(&corpus(), &schedulers, "heuristic", &RadioParams::default()) {
        Err(BenchError::InvalidSchedule { scheduler, kinds, .. }) => {
            assert_eq!(scheduler, "broken");
            assert!(kinds.contains(&ViolationKind::EmptySlot));
        }
        other => panic!("expected invalid schedule error, got {other:?}"),
    }
}

#[test]
fn argument_errors() {
    let radio = RadioParams::default();
    let one: [&dyn Scheduler; 1] = [&HeuristicScheduler];
    assert_eq!(run_benchmark(&[], &one, "heuristic", &radio).unwrap_err(), BenchError::EmptyCorpus);
    assert!(matches!(
        run_benchmark(&corpus(), &one, "optimal", &radio),
        Err(BenchError::UnknownReference(_))
    ));
    let twice: [&dyn Scheduler; 2] = [&HeuristicScheduler, &HeuristicScheduler];
    assert!(matches!(
        run_benchmark(&corpus(), &twice, "heuristic", &radio),
        Err(BenchError::DuplicateScheduler(_))
    ));
    let bad = RadioParams { t_cg: 0.0, ..radio };
    assert_eq!(run_benchmark(&corpus(), &one, "heuristic", &bad).unwrap_err(), BenchError::InvalidRadio);
}
