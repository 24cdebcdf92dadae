//! Schedule validation and cost accounting.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::model::{NodeId, ProblemInstance, Role, Schedule, TagId};

/// The schedule does not even have the shape of a schedule for this
/// instance. Distinct from a constraint violation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructuralError {
    #[error("slot {slot}: role vector has length {found}, instance has {expected} nodes")]
    RoleVectorLength {
        slot: usize,
        expected: usize,
        found: usize,
    },
    #[error("slot {slot}: interrogation references node {node}, instance has {node_count} nodes")]
    NodeOutOfRange {
        slot: usize,
        node: NodeId,
        node_count: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Slot without any interrogation.
    EmptySlot,
    /// Recorded host is not in TAG_QUERY role or recorded carrier is not in
    /// CARRIER role.
    RoleMismatch,
    /// A TAG_QUERY node without an interrogation record.
    OrphanQuery,
    /// A CARRIER node that no interrogation record names as its carrier.
    OrphanCarrier,
    /// Interrogated tag's host has no CARRIER-role neighbor.
    NoCarrier,
    /// Interrogated tag's host has two or more CARRIER-role neighbors.
    CarrierInterference,
    /// A host queries more than one tag in the same slot.
    HostMultipleQueries,
    /// Recorded carrier is not a topology neighbor of the host.
    CarrierNotNeighbor,
    /// Recorded tag does not exist or is hosted by another node.
    UnknownTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub slot: usize,
    pub kind: ViolationKind,
    pub nodes: Vec<NodeId>,
    pub tags: Vec<TagId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    /// Tags never interrogated.
    pub missing_tags: BTreeSet<TagId>,
    /// Tags interrogated more than once.
    pub repeated_tags: BTreeSet<TagId>,
}

impl ValidationReport {
    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// Checks a schedule against the interrogation constraints: every tag
/// interrogated exactly once, exactly one carrier-providing neighbor per
/// interrogated tag, one query per host per slot, roles consistent with the
/// records and no empty slots. A carrier may serve several hosts in the same slot.
pub fn validate_schedule(
    instance: &ProblemInstance,
    schedule: &Schedule,
) -> Result<ValidationReport, StructuralError> {
    let n = instance.node_count();
    let topology = instance.topology();
    for (s, slot) in schedule.slots.iter().enumerate() {
        if slot.roles.len() != n {
            return Err(StructuralError::RoleVectorLength {
                slot: s,
                expected: n,
                found: slot.roles.len(),
            });
        }
        for rec in &slot.interrogations {
            for node in [rec.host, rec.carrier] {
                if node >= n {
                    return Err(StructuralError::NodeOutOfRange {
                        slot: s,
                        node,
                        node_count: n,
                    });
                }
            }
        }
    }

    let mut violations = Vec::new();
    let mut push = |slot, kind, nodes: Vec<NodeId>, tags: Vec<TagId>| {
        violations.push(Violation {
            slot,
            kind,
            nodes,
            tags,
        })
    };
    let mut counts: BTreeMap<TagId, usize> = BTreeMap::new();

    for (s, slot) in schedule.slots.iter().enumerate() {
        if slot.interrogations.is_empty() {
            push(s, ViolationKind::EmptySlot, vec![], vec![]);
        }
        let mut per_host: BTreeMap<NodeId, Vec<TagId>> = BTreeMap::new();
        for rec in &slot.interrogations {
            *counts.entry(rec.tag).or_default() += 1;
            per_host.entry(rec.host).or_default().push(rec.tag);

            if instance.host_of(rec.tag) != Some(rec.host) {
                push(s, ViolationKind::UnknownTag, vec![rec.host], vec![rec.tag]);
            }
            if slot.roles[rec.host] != Role::TagQuery || slot.roles[rec.carrier] != Role::Carrier {
                push(
                    s,
                    ViolationKind::RoleMismatch,
                    vec![rec.host, rec.carrier],
                    vec![rec.tag],
                );
            }
            if !topology.are_adjacent(rec.host, rec.carrier) {
                push(
                    s,
                    ViolationKind::CarrierNotNeighbor,
                    vec![rec.host, rec.carrier],
                    vec![rec.tag],
                );
            }
            let carriers: Vec<NodeId> = topology
                .neighbors(rec.host)
                .iter()
                .copied()
                .filter(|&v| slot.roles[v] == Role::Carrier)
                .collect();
            match carriers.len() {
                0 => push(s, ViolationKind::NoCarrier, vec![rec.host], vec![rec.tag]),
                1 => {}
                _ => {
                    let mut nodes = vec![rec.host];
                    nodes.extend(carriers);
                    push(s, ViolationKind::CarrierInterference, nodes, vec![rec.tag]);
                }
            }
        }
        for (&host, tags) in &per_host {
            if tags.len() > 1 {
                push(s, ViolationKind::HostMultipleQueries, vec![host], tags.clone());
            }
        }
        for u in slot.nodes_with_role(Role::TagQuery) {
            if !per_host.contains_key(&u) {
                push(s, ViolationKind::OrphanQuery, vec![u], vec![]);
            }
        }
        for u in slot.nodes_with_role(Role::Carrier) {
            if !slot.interrogations.iter().any(|rec| rec.carrier == u) {
                push(s, ViolationKind::OrphanCarrier, vec![u], vec![]);
            }
        }
    }

    let missing_tags: BTreeSet<TagId> = instance
        .tags()
        .iter()
        .map(|t| t.id)
        .filter(|id| !counts.contains_key(id))
        .collect();
    let repeated_tags: BTreeSet<TagId> = counts
        .iter()
        .filter(|(_, &c)| c > 1)
        .map(|(&id, _)| id)
        .collect();
    let valid = violations.is_empty() && missing_tags.is_empty() && repeated_tags.is_empty();
    Ok(ValidationReport {
        valid,
        violations,
        missing_tags,
        repeated_tags,
    })
}

/// `(C, L, T·C + L)` of a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ScheduleCost {
    pub carriers: u64,
    pub slots: u64,
    pub objective: u64,
}

impl ScheduleCost {
    pub fn new(tag_count: usize, carriers: usize, slots: usize) -> Self {
        let (t, c, l) = (tag_count as u64, carriers as u64, slots as u64);
        Self {
            carriers: c,
            slots: l,
            objective: t * c + l,
        }
    }
}

/// Pure accounting; the objective weights carriers by the tag count so that
/// saving a single carrier always beats any reduction in length.
pub fn schedule_cost(instance: &ProblemInstance, schedule: &Schedule) -> ScheduleCost {
    ScheduleCost::new(
        instance.tag_count(),
        schedule.carrier_count(),
        schedule.len(),
    )
}
