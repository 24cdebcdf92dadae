mod common;

use carrier_sched::{
    schedule_cost, solve_heuristic, solve_optimal, validate_schedule, ScheduleError, SolverBudget,
};
use common::{brute_force, exhaustive_corpus, random_corpus, tie_break_vectors};

#[test]
fn matches_enumeration_on_all_small_instances() {
    let corpus = exhaustive_corpus(4, 3);
    assert_eq!(corpus.len(), 3 + 14 + 156 + 3192);
    let budget = SolverBudget::unlimited();
    for inst in &corpus {
        match (solve_optimal(inst, &budget), brute_force(inst)) {
            (Ok(sched), Some(reference)) => {
                assert!(validate_schedule(inst, &sched).unwrap().valid);
                let cost = schedule_cost(inst, &sched);
                assert_eq!(
                    (cost.carriers, cost.slots, cost.objective),
                    (reference.carriers, reference.slots, reference.objective),
                    "{inst:?}"
                );
                let (slot_of, carrier_of) = tie_break_vectors(inst, &sched);
                assert_eq!(slot_of, reference.slot_of, "{inst:?}");
                assert_eq!(carrier_of, reference.carrier_of, "{inst:?}");
            }
            (Err(ScheduleError::Infeasible { .. }), None) => assert_eq!(inst.node_count(), 1),
            (got, want) => panic!("{inst:?}: solver {got:?}, enumeration {want:?}"),
        }
    }
}

#[test]
fn matches_enumeration_on_random_five_node_instances() {
    for inst in random_corpus(5, 4, 40, 5) {
        let sched = solve_optimal(&inst, &SolverBudget::unlimited()).unwrap();
        let reference = brute_force(&inst).unwrap();
        assert_eq!(schedule_cost(&inst, &sched).objective, reference.objective);
        assert_eq!(tie_break_vectors(&inst, &sched), (reference.slot_of, reference.carrier_of));
    }
}

#[test]
fn pruning_never_changes_the_result() {
    let off = SolverBudget {
        pruning: false,
        ..SolverBudget::unlimited()
    };
    let corpus = random_corpus(6, 7, 60, 17);
    for inst in corpus.iter().chain(exhaustive_corpus(3, 3).iter()) {
        let with = solve_optimal(inst, &SolverBudget::unlimited());
        let without = solve_optimal(inst, &off);
        assert_eq!(with, without, "{inst:?}");
    }
}

#[test]
fn deterministic_and_no_worse_than_heuristic() {
    for inst in random_corpus(7, 8, 40, 3) {
        let a = solve_optimal(&inst, &SolverBudget::unlimited()).unwrap();
        let b = solve_optimal(&inst, &SolverBudget::unlimited()).unwrap();
        assert_eq!(a, b);
        let h = solve_heuristic(&inst).unwrap();
        assert!(schedule_cost(&inst, &h).objective >= schedule_cost(&inst, &a).objective);
    }
}
