//! Test support shared by the integration suites: an exhaustive reference
//! enumerator for small instances and single-fault schedule mutations.
#![allow(dead_code)]

use std::collections::BTreeSet;

use carrier_sched::{
    build_feature_matrix, node_degrees, FeatureMatrix, GeneratorConfig, GnnModel, Interrogation, NodeId,
    PeMode, ProblemInstance, Role, Schedule, Tag, TagId, Timeslot, Topology, ValidationReport,
    ViolationKind,
};
use rand::seq::IndexedRandom;
use rand::Rng;

/// Every labeled connected simple graph on `n` nodes, as edge lists.
pub fn connected_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let edges: Vec<_> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &(a, b) in &edges {
                for (x, y) in [(a, b), (b, a)] {
                    if x == u && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        if seen.iter().all(|&s| s) {
            out.push(edges);
        }
    }
    out
}

/// All connected topologies with `N <= max_nodes` and all host placements of
/// tags `1..=T` for `T <= max_tags`.
pub fn exhaustive_corpus(max_nodes: usize, max_tags: usize) -> Vec<ProblemInstance> {
    let mut corpus = Vec::new();
    for n in 1..=max_nodes {
        for edges in connected_graphs(n) {
            for t in 1..=max_tags {
                for code in 0..n.pow(t as u32) {
                    let tags = (0..t)
                        .map(|i| Tag {
                            id: i as TagId + 1,
                            host: code / n.pow(i as u32) % n,
                        })
                        .collect();
                    let topology = Topology::new(n, &edges).unwrap();
                    corpus.push(ProblemInstance::new(topology, tags).unwrap());
                }
            }
        }
    }
    corpus
}

pub fn random_corpus(nodes: usize, max_tags: usize, count: usize, seed: u64) -> Vec<ProblemInstance> {
    let config = GeneratorConfig {
        node_range: (nodes, nodes),
        tag_range: (1, max_tags),
        seed,
        ..Default::default()
    };
    carrier_sched::generate_corpus(&config, count).unwrap()
}

/// Optimum found by exhaustive enumeration. `slot_of` and `carrier_of` are
/// indexed by tag position in id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reference {
    pub carriers: u64,
    pub slots: u64,
    pub objective: u64,
    pub slot_of: Vec<usize>,
    pub carrier_of: Vec<NodeId>,
}

fn adjacent(edges: &[(usize, usize)], u: usize, v: usize) -> bool {
    edges.iter().any(|&(a, b)| (a, b) == (u, v) || (a, b) == (v, u))
}

/// Carrier count of the assignment if it is feasible, straight from the
/// problem statement: per slot, hosts distinct, no node both querying and
/// carrying, every host adjacent to exactly one active carrier, which is
/// the one it names.
fn feasible_carriers(
    n: usize,
    edges: &[(usize, usize)],
    hosts: &[NodeId],
    slot_of: &[usize],
    carrier_of: &[NodeId],
    slots: usize,
) -> Option<u64> {
    let mut total = 0;
    for s in 0..slots {
        let members: Vec<usize> = (0..hosts.len()).filter(|&i| slot_of[i] == s).collect();
        let slot_hosts: BTreeSet<NodeId> = members.iter().map(|&i| hosts[i]).collect();
        if slot_hosts.len() != members.len() {
            return None;
        }
        let active: BTreeSet<NodeId> = members.iter().map(|&i| carrier_of[i]).collect();
        if !slot_hosts.is_disjoint(&active) {
            return None;
        }
        for &i in &members {
            let h = hosts[i];
            if !adjacent(edges, h, carrier_of[i]) {
                return None;
            }
            if (0..n).filter(|&v| active.contains(&v) && adjacent(edges, h, v)).count() != 1 {
                return None;
            }
        }
        total += active.len() as u64;
    }
    Some(total)
}

/// Exhaustive minimum of `T·C + L`, ties broken by the slot-index vector
/// then the carrier vector. `None` if no feasible schedule exists.
pub fn brute_force(instance: &ProblemInstance) -> Option<Reference> {
    let n = instance.node_count();
    let edges = instance.topology().edges().to_vec();
    let hosts: Vec<NodeId> = instance.tags().iter().map(|t| t.host).collect();
    let t = hosts.len();
    let mut best: Option<Reference> = None;
    for slots in 1..=t {
        for code in 0..slots.pow(t as u32) {
            let slot_of: Vec<usize> = (0..t).map(|i| code / slots.pow(i as u32) % slots).collect();
            if (0..slots).any(|s| !slot_of.contains(&s)) {
                continue;
            }
            for ccode in 0..n.pow(t as u32) {
                let carrier_of: Vec<NodeId> = (0..t).map(|i| ccode / n.pow(i as u32) % n).collect();
                let Some(carriers) = feasible_carriers(n, &edges, &hosts, &slot_of, &carrier_of, slots)
                else {
                    continue;
                };
                let candidate = Reference {
                    carriers,
                    slots: slots as u64,
                    objective: t as u64 * carriers + slots as u64,
                    slot_of: slot_of.clone(),
                    carrier_of,
                };
                let better = match &best {
                    None => true,
                    Some(b) => {
                        (candidate.objective, &candidate.slot_of, &candidate.carrier_of)
                            < (b.objective, &b.slot_of, &b.carrier_of)
                    }
                };
                if better {
                    best = Some(candidate);
                }
            }
        }
    }
    best
}

/// Slot index and carrier per tag, tags in id order.
pub fn tie_break_vectors(instance: &ProblemInstance, schedule: &Schedule) -> (Vec<usize>, Vec<NodeId>) {
    let mut slot_of = vec![usize::MAX; instance.tag_count()];
    let mut carrier_of = vec![usize::MAX; instance.tag_count()];
    for (s, rec) in schedule.interrogations() {
        let i = instance.tags().iter().position(|t| t.id == rec.tag).unwrap();
        slot_of[i] = s;
        carrier_of[i] = rec.carrier;
    }
    (slot_of, carrier_of)
}

/// What a mutation must make the validator report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Kind(ViolationKind),
    Missing(TagId),
    Repeated(TagId),
}

impl Expect {
    pub fn holds(&self, report: &ValidationReport) -> bool {
        !report.valid
            && match *self {
                Expect::Kind(kind) => report.has(kind),
                Expect::Missing(tag) => report.missing_tags.contains(&tag),
                Expect::Repeated(tag) => report.repeated_tags.contains(&tag),
            }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    FlipRole,
    DuplicateRecord,
    RetargetCarrier,
    DropRecord,
    Retag,
}

pub const MUTATIONS: [Mutation; 5] = [
    Mutation::FlipRole,
    Mutation::DuplicateRecord,
    Mutation::RetargetCarrier,
    Mutation::DropRecord,
    Mutation::Retag,
];

/// Applies one fault to a valid schedule. `None` when the mutation has no
/// applicable site (e.g. no non-neighbor to retarget to).
pub fn mutate<R: Rng>(
    instance: &ProblemInstance,
    schedule: &Schedule,
    mutation: Mutation,
    rng: &mut R,
) -> Option<(Schedule, Expect)> {
    let n = instance.node_count();
    let mut out = schedule.clone();
    let s = rng.random_range(0..out.slots.len());
    let slot = &mut out.slots[s];
    let r = rng.random_range(0..slot.interrogations.len());
    let expect = match mutation {
        Mutation::FlipRole => {
            let u = rng.random_range(0..n);
            let old = slot.roles[u];
            let new = **Role::ALL.iter().filter(|&&x| x != old).collect::<Vec<_>>().choose(rng)?;
            slot.roles[u] = new;
            match (old, new) {
                (Role::Idle, Role::TagQuery) => Expect::Kind(ViolationKind::OrphanQuery),
                (Role::Idle, Role::Carrier) => Expect::Kind(ViolationKind::OrphanCarrier),
                _ => Expect::Kind(ViolationKind::RoleMismatch),
            }
        }
        Mutation::DuplicateRecord => {
            let rec = slot.interrogations[r];
            let target = rng.random_range(0..out.slots.len());
            out.slots[target].interrogations.push(rec);
            Expect::Repeated(rec.tag)
        }
        Mutation::RetargetCarrier => {
            let rec = &mut slot.interrogations[r];
            let far: Vec<NodeId> = (0..n)
                .filter(|&w| w != rec.host && !instance.topology().are_adjacent(rec.host, w))
                .collect();
            rec.carrier = *far.choose(rng)?;
            Expect::Kind(ViolationKind::CarrierNotNeighbor)
        }
        Mutation::DropRecord => {
            let rec = slot.interrogations.remove(r);
            Expect::Missing(rec.tag)
        }
        Mutation::Retag => {
            let rec = &mut slot.interrogations[r];
            let foreign: Vec<TagId> = instance
                .tags()
                .iter()
                .filter(|t| t.host != rec.host)
                .map(|t| t.id)
                .chain([instance.max_tag_id() + 1])
                .collect();
            rec.tag = *foreign.choose(rng)?;
            Expect::Kind(ViolationKind::UnknownTag)
        }
    };
    Some((out, expect))
}

/// Rebuilds a slot from its records; handy for hand-written fixtures.
pub fn slot(n: usize, records: &[(NodeId, TagId, NodeId)]) -> Timeslot {
    Timeslot::from_interrogations(
        n,
        records
            .iter()
            .map(|&(host, tag, carrier)| Interrogation { host, tag, carrier })
            .collect(),
    )
}

/// Feature rows moved by `perm`, PE column recomputed on the relabeled graph.
fn permuted_features(inst: &ProblemInstance, perm: &[usize]) -> (ProblemInstance, FeatureMatrix) {
    let x = build_feature_matrix(inst, &inst.tag_ids(), PeMode::Degree).unwrap();
    let moved = inst.permuted(perm);
    let degrees = node_degrees(moved.topology());
    let pe_col = x.cols() - 1;
    let mut data = x.permute_rows(perm).as_slice().to_vec();
    for (u, d) in degrees.iter().enumerate() {
        let old = data[u * x.cols() + pe_col];
        assert!((old - d).abs() < 1e-12, "degree PE not equivariant");
        data[u * x.cols() + pe_col] = *d;
    }
    (moved, FeatureMatrix::new(x.rows(), x.cols(), data))
}

/// Largest logit gap between relabel-then-forward and forward-then-relabel,
/// degree PE.
pub fn max_deviation(inst: &ProblemInstance, perm: &[usize], model: &GnnModel) -> f64 {
    let x = build_feature_matrix(inst, &inst.tag_ids(), PeMode::Degree).unwrap();
    let base = model.forward(&x, inst.topology());
    let (moved, xp) = permuted_features(inst, perm);
    let out = model.forward(&xp, moved.topology());
    let mut worst: f64 = 0.0;
    for u in 0..inst.node_count() {
        for c in 0..3 {
            worst = worst.max((out[perm[u]][c] - base[u][c]).abs());
        }
    }
    worst
}
