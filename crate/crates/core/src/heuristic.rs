//! Greedy conflict-aware carrier selection.
//!
//! Each slot is built by repeatedly activating the carrier that can power
//! the most pending hosts without disturbing interrogations already placed
//! in the slot. Ties go to the lowest node id. Hosts with several pending
//! tags query their lowest-id tag and come back in later slots.

use std::collections::BTreeSet;

use crate::model::{Interrogation, NodeId, ProblemInstance, Schedule, TagId, Timeslot};
use crate::scheduler::{check_feasible, ScheduleError, Scheduler};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SlotRole {
    Idle,
    Carrier,
    Query,
}

/// Greedy schedule in `O(T · N · (N + E))` worst case.
pub fn solve_heuristic(instance: &ProblemInstance) -> Result<Schedule, ScheduleError> {
    check_feasible(instance)?;
    let mut pending = instance.tag_ids();
    let mut slots = Vec::new();
    while !pending.is_empty() {
        let slot = greedy_slot(instance, &pending);
        debug_assert!(!slot.interrogations.is_empty());
        for rec in &slot.interrogations {
            pending.remove(&rec.tag);
        }
        slots.push(slot);
    }
    Ok(Schedule::new(slots))
}

/// One greedy timeslot over the `pending` tags. Empty only if no pending
/// tag has a host with a neighbor.
pub fn greedy_slot(instance: &ProblemInstance, pending: &BTreeSet<TagId>) -> Timeslot {
    let topology = instance.topology();
    let n = instance.node_count();
    let mut next_tag: Vec<Option<TagId>> = vec![None; n];
    for tag in instance.tags().iter().filter(|t| pending.contains(&t.id)) {
        let slot = &mut next_tag[tag.host];
        if slot.is_none() {
            // tags() is sorted, so the first hit is the minimum
            *slot = Some(tag.id);
        }
    }

    let mut roles = vec![SlotRole::Idle; n];
    let mut carrier_neighbors = vec![0u32; n];
    let mut records = Vec::new();
    let coverable = |h: NodeId, roles: &[SlotRole], carrier_neighbors: &[u32]| {
        roles[h] == SlotRole::Idle && next_tag[h].is_some() && carrier_neighbors[h] == 0
    };

    loop {
        let mut best: Option<(usize, NodeId)> = None;
        for c in 0..n {
            if roles[c] != SlotRole::Idle {
                continue;
            }
            let neighbors = topology.neighbors(c);
            if neighbors.iter().any(|&h| roles[h] == SlotRole::Query) {
                continue;
            }
            let covered = neighbors
                .iter()
                .filter(|&&h| coverable(h, &roles, &carrier_neighbors))
                .count();
            if covered > best.map_or(0, |b| b.0) {
                best = Some((covered, c));
            }
        }
        let Some((_, carrier)) = best else { break };
        let covered: Vec<NodeId> = topology
            .neighbors(carrier)
            .iter()
            .copied()
            .filter(|&h| coverable(h, &roles, &carrier_neighbors))
            .collect();
        roles[carrier] = SlotRole::Carrier;
        for &x in topology.neighbors(carrier) {
            carrier_neighbors[x] += 1;
        }
        for h in covered {
            roles[h] = SlotRole::Query;
            records.push(Interrogation {
                host: h,
                tag: next_tag[h].expect("coverable hosts have a pending tag"),
                carrier,
            });
        }
    }
    Timeslot::from_interrogations(n, records)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicScheduler;

impl Scheduler for HeuristicScheduler {
    fn name(&self) -> &str {
        "heuristic"
    }

    fn schedule(&self, instance: &ProblemInstance) -> Result<Schedule, ScheduleError> {
        solve_heuristic(instance)
    }
}
