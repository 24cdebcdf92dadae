//! Iterative one-shot node classification: one forward pass per timeslot
//! over the cached instance, constraint resolution, then removal of the
//! interrogated tags.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{GnnModel, NUM_CLASSES};
use crate::features::{build_feature_matrix, laplacian_eigenvalues, node_degrees, FeatureMatrix, PeMode};
use crate::heuristic::greedy_slot;
use crate::model::{Interrogation, NodeId, ProblemInstance, Role, Schedule, TagId, Timeslot};
use crate::scheduler::{check_feasible, ScheduleError, Scheduler};

/// What to do when the predicted slot breaks a constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairPolicy {
    /// Any violation fails the slot.
    StrictFail,
    /// Demote offending queries and unused carriers to idle; keep whatever
    /// interrogations survive.
    #[default]
    GreedyRepair,
    /// Like `GreedyRepair`, but substitute one greedy heuristic slot when
    /// nothing survives.
    HeuristicFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InferencePolicy {
    pub repair: RepairPolicy,
    /// Slot budget; `None` means `T + 2`.
    pub max_slots: Option<usize>,
}

impl InferencePolicy {
    pub fn new(repair: RepairPolicy) -> Self {
        Self {
            repair,
            max_slots: None,
        }
    }

    pub fn slot_budget(&self, tag_count: usize) -> Result<usize, ScheduleError> {
        match self.max_slots {
            None => Ok(tag_count + 2),
            Some(m) if m >= tag_count => Ok(m),
            Some(m) => Err(ScheduleError::InvalidPolicy(format!(
                "max_slots {m} is below the tag count {tag_count}"
            ))),
        }
    }
}

/// The scheduler's working copy of an instance: which tags still need an
/// interrogation and which slots were already emitted.
#[derive(Debug, Clone)]
pub struct CachedInstance<'a> {
    instance: &'a ProblemInstance,
    remaining: BTreeSet<TagId>,
    slots: Vec<Timeslot>,
    pe_column: Option<Vec<f64>>,
    pe_mode: PeMode,
}

impl<'a> CachedInstance<'a> {
    pub fn new(instance: &'a ProblemInstance, pe_mode: PeMode) -> Result<Self, ScheduleError> {
        let pe_column = match pe_mode {
            PeMode::None => None,
            PeMode::Degree => Some(node_degrees(instance.topology())),
            PeMode::LaplacianEigenvalues => Some(laplacian_eigenvalues(instance.topology())?),
        };
        Ok(Self {
            instance,
            remaining: instance.tag_ids(),
            slots: Vec::new(),
            pe_column,
            pe_mode,
        })
    }

    pub fn instance(&self) -> &ProblemInstance {
        self.instance
    }

    pub fn remaining(&self) -> &BTreeSet<TagId> {
        &self.remaining
    }

    pub fn slots(&self) -> &[Timeslot] {
        &self.slots
    }

    pub fn into_schedule(self) -> Schedule {
        Schedule::new(self.slots)
    }

    /// Feature matrix for the current remaining-tag state.
    pub fn features(&self) -> FeatureMatrix {
        let mut x = build_feature_matrix(self.instance, &self.remaining, PeMode::None)
            .expect("no positional encoding requested");
        if let Some(col) = &self.pe_column {
            let n = x.rows();
            let mut data = Vec::with_capacity(n * 4);
            for (u, pe) in col.iter().enumerate() {
                data.extend_from_slice(x.row(u));
                data.push(*pe);
            }
            x = FeatureMatrix::new(n, self.pe_mode.input_dim(), data);
        }
        x
    }

    fn commit(&mut self, slot: Timeslot) {
        for rec in &slot.interrogations {
            self.remaining.remove(&rec.tag);
        }
        self.slots.push(slot);
    }
}

/// Argmax with exact ties resolved as TAG_QUERY, then CARRIER, then IDLE.
pub(crate) fn classify(logits: &[f64; NUM_CLASSES]) -> Role {
    let mut best = Role::TagQuery;
    for role in [Role::Carrier, Role::Idle] {
        if logits[role.class_index()] > logits[best.class_index()] {
            best = role;
        }
    }
    best
}

/// Turns per-node logits into a timeslot under `repair`, or `None` when no
/// acceptable slot with at least one interrogation results.
pub fn timeslot_from_logits(
    instance: &ProblemInstance,
    remaining: &BTreeSet<TagId>,
    logits: &[[f64; NUM_CLASSES]],
    repair: RepairPolicy,
) -> Option<Timeslot> {
    let topology = instance.topology();
    let n = instance.node_count();
    let roles: Vec<Role> = logits.iter().map(classify).collect();

    let mut next_tag: Vec<Option<TagId>> = vec![None; n];
    for tag in instance.tags().iter().filter(|t| remaining.contains(&t.id)) {
        next_tag[tag.host].get_or_insert(tag.id);
    }
    let carrier_of = |roles: &[Role], h: NodeId| -> Result<NodeId, ()> {
        let mut found = topology.neighbors(h).iter().filter(|&&v| roles[v] == Role::Carrier);
        match (found.next(), found.next()) {
            (Some(&c), None) => Ok(c),
            _ => Err(()),
        }
    };

    // Queries without a remaining tag or without exactly one carrier
    // neighbor are violations; repair demotes them to idle by not recording
    // them.
    let mut records = Vec::new();
    let mut violated = false;
    for h in (0..n).filter(|&u| roles[u] == Role::TagQuery) {
        match (next_tag[h], carrier_of(&roles, h)) {
            (Some(tag), Ok(carrier)) => records.push(Interrogation { host: h, tag, carrier }),
            _ => violated = true,
        }
    }
    if violated && repair == RepairPolicy::StrictFail {
        return None;
    }

    if !records.is_empty() {
        // Carriers powering nothing drop out when roles are rederived.
        return Some(Timeslot::from_interrogations(n, records));
    }
    match repair {
        RepairPolicy::HeuristicFallback => {
            let slot = greedy_slot(instance, remaining);
            (!slot.interrogations.is_empty()).then_some(slot)
        }
        _ => None,
    }
}

/// Produces the next timeslot for `cached` and commits it.
pub fn next_timeslot(
    model: &GnnModel,
    cached: &mut CachedInstance<'_>,
    policy: &InferencePolicy,
) -> Result<Timeslot, ScheduleError> {
    let slot_index = cached.slots.len();
    let failure = |cached: &CachedInstance<'_>| ScheduleError::SlotFailure {
        slot: slot_index,
        partial: Schedule::new(cached.slots.clone()),
    };
    if cached.remaining.is_empty() {
        return Err(failure(cached));
    }
    let logits = model.forward(&cached.features(), cached.instance.topology());
    match timeslot_from_logits(cached.instance, &cached.remaining, &logits, policy.repair) {
        Some(slot) => {
            cached.commit(slot.clone());
            Ok(slot)
        }
        None => Err(failure(cached)),
    }
}

/// Runs the classifier slot by slot until every tag is interrogated or the
/// policy gives up. Failures carry the slots produced so far.
pub fn schedule_with_gnn(
    model: &GnnModel,
    instance: &ProblemInstance,
    policy: &InferencePolicy,
) -> Result<Schedule, ScheduleError> {
    check_feasible(instance)?;
    let budget = policy.slot_budget(instance.tag_count())?;
    let mut cached = CachedInstance::new(instance, model.config().pe_mode)?;
    while !cached.remaining.is_empty() {
        if cached.slots.len() >= budget {
            return Err(ScheduleError::SlotLimit {
                max_slots: budget,
                remaining: cached.remaining.len(),
                partial: cached.into_schedule(),
            });
        }
        next_timeslot(model, &mut cached, policy)?;
    }
    Ok(cached.into_schedule())
}

#[derive(Debug, Clone)]
pub struct GnnScheduler {
    pub model: Arc<GnnModel>,
    pub policy: InferencePolicy,
}

impl Scheduler for GnnScheduler {
    fn name(&self) -> &str {
        "gnn"
    }

    fn schedule(&self, instance: &ProblemInstance) -> Result<Schedule, ScheduleError> {
        schedule_with_gnn(&self.model, instance, &self.policy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::GnnConfig;
    use crate::model::{Tag, Topology};
    use crate::validate::validate_schedule;

    fn edge() -> ProblemInstance {
        ProblemInstance::new(
            Topology::new(2, &[(0, 1)]).unwrap(),
            vec![Tag { id: 1, host: 0 }],
        )
        .unwrap()
    }

    fn zero_model() -> GnnModel {
        GnnModel::zeros(GnnConfig {
            num_blocks: 2,
            num_heads: 2,
            hidden_dim: 4,
            pe_mode: PeMode::Degree,
        })
        .unwrap()
    }

    #[test]
    fn tie_break_prefers_query_then_carrier() {
        assert_eq!(classify(&[0.0, 0.0, 0.0]), Role::TagQuery);
        assert_eq!(classify(&[1.0, 0.0, 1.0]), Role::Carrier);
        assert_eq!(classify(&[0.0, -1.0, 0.5]), Role::Idle);
        assert_eq!(classify(&[2.0, 1.0, 0.0]), Role::Carrier);
    }

    #[test]
    fn hand_set_logits_emit_slot() {
        let inst = edge();
        let logits = [[0.0, 5.0, 0.0], [5.0, 0.0, 0.0]];
        let slot = timeslot_from_logits(&inst, &inst.tag_ids(), &logits, RepairPolicy::StrictFail)
            .unwrap();
        assert_eq!(
            slot.interrogations,
            vec![Interrogation { host: 0, tag: 1, carrier: 1 }]
        );
    }

    #[test]
    fn repair_demotes_and_drops_unused_carriers() {
        // path 0-1-2-3, tags on 0 and 3; predicted: 0=T, 1=C, 2=C, 3=T.
        // Node 3 has carrier 2, node 0 has carrier 1: both fine.
        // Predicted: 0=T, 1=C, 2=T(no tag), 3=C -> 2 is demoted, 3 unused.
        let inst = ProblemInstance::new(
            Topology::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap(),
            vec![Tag { id: 1, host: 0 }, Tag { id: 2, host: 3 }],
        )
        .unwrap();
        let t = [0.0, 9.0, 0.0];
        let c = [9.0, 0.0, 0.0];
        let logits = [t, c, t, c];
        assert!(
            timeslot_from_logits(&inst, &inst.tag_ids(), &logits, RepairPolicy::StrictFail).is_none()
        );
        let slot = timeslot_from_logits(&inst, &inst.tag_ids(), &logits, RepairPolicy::GreedyRepair)
            .unwrap();
        assert_eq!(
            slot.interrogations,
            vec![Interrogation { host: 0, tag: 1, carrier: 1 }]
        );
        assert_eq!(slot.roles, vec![Role::TagQuery, Role::Carrier, Role::Idle, Role::Idle]);
    }

    #[test]
    fn zero_weights_fail_without_fallback() {
        let inst = edge();
        let model = zero_model();
        let mut cached = CachedInstance::new(&inst, PeMode::Degree).unwrap();
        for repair in [RepairPolicy::StrictFail, RepairPolicy::GreedyRepair] {
            let r = next_timeslot(&model, &mut cached, &InferencePolicy::new(repair));
            assert!(matches!(r, Err(ScheduleError::SlotFailure { slot: 0, .. })));
        }
        let slot = next_timeslot(
            &model,
            &mut cached,
            &InferencePolicy::new(RepairPolicy::HeuristicFallback),
        )
        .unwrap();
        assert_eq!(slot.interrogations.len(), 1);
        assert!(cached.remaining().is_empty());
    }

    #[test]
    fn strict_schedule_failure_at_first_slot() {
        let inst = edge();
        match schedule_with_gnn(&zero_model(), &inst, &InferencePolicy::new(RepairPolicy::StrictFail)) {
            Err(ScheduleError::SlotFailure { slot, partial }) => {
                assert_eq!(slot, 0);
                assert!(partial.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fallback_always_completes() {
        let inst = ProblemInstance::new(
            Topology::new(3, &[(0, 1), (0, 2)]).unwrap(),
            vec![Tag { id: 1, host: 0 }, Tag { id: 2, host: 0 }, Tag { id: 3, host: 1 }],
        )
        .unwrap();
        let s = schedule_with_gnn(
            &zero_model(),
            &inst,
            &InferencePolicy::new(RepairPolicy::HeuristicFallback),
        )
        .unwrap();
        assert!(validate_schedule(&inst, &s).unwrap().valid);
        assert!(s.len() <= inst.tag_count());
    }

    #[test]
    fn slot_budget_below_tag_count_is_rejected() {
        let policy = InferencePolicy {
            repair: RepairPolicy::GreedyRepair,
            max_slots: Some(1),
        };
        assert_eq!(policy.slot_budget(1), Ok(1));
        assert!(matches!(policy.slot_budget(2), Err(ScheduleError::InvalidPolicy(_))));
        assert_eq!(InferencePolicy::default().slot_budget(5), Ok(7));
    }
}
