//! Common scheduler interface and failure modes.

use thiserror::Error;

use crate::features::NumericalError;
use crate::model::{NodeId, ProblemInstance, Schedule, TagId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("tag {tag} on node {host} cannot be powered: its host has no neighbor")]
    Infeasible { tag: TagId, host: NodeId },
    #[error("instance has {nodes} nodes, exact solver is capped at {max_nodes}")]
    TooLarge { nodes: usize, max_nodes: usize },
    /// Search budget ran out. `incumbent` is the best valid schedule known
    /// at that point, which is not proven optimal.
    #[error("solver budget exhausted after {expansions} expansions")]
    Timeout {
        expansions: u64,
        incumbent: Option<Schedule>,
    },
    /// No timeslot with at least one interrogation could be produced.
    #[error("slot {slot} could not be produced ({completed} slots completed)", completed = partial.len())]
    SlotFailure { slot: usize, partial: Schedule },
    #[error("slot limit {max_slots} reached with {remaining} tags pending")]
    SlotLimit {
        max_slots: usize,
        remaining: usize,
        partial: Schedule,
    },
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    Numerical(#[from] NumericalError),
}

impl ScheduleError {
    /// Short machine-readable label.
    pub fn kind(&self) -> &'static str {
        match self {
            ScheduleError::Infeasible { .. } => "infeasible",
            ScheduleError::TooLarge { .. } => "too_large",
            ScheduleError::Timeout { .. } => "timeout",
            ScheduleError::SlotFailure { .. } => "slot_failure",
            ScheduleError::SlotLimit { .. } => "slot_limit",
            ScheduleError::InvalidPolicy(_) => "invalid_policy",
            ScheduleError::Numerical(_) => "numerical",
        }
    }
}

/// Anything that turns a problem instance into a schedule.
pub trait Scheduler: Send + Sync {
    fn name(&self) -> &str;
    fn schedule(&self, instance: &ProblemInstance) -> Result<Schedule, ScheduleError>;
}

/// Rejects instances where some tag's host has no neighbor to act as
/// carrier (only possible for a single-node network).
pub fn check_feasible(instance: &ProblemInstance) -> Result<(), ScheduleError> {
    match instance
        .tags()
        .iter()
        .find(|t| instance.topology().degree(t.host) == 0)
    {
        Some(t) => Err(ScheduleError::Infeasible {
            tag: t.id,
            host: t.host,
        }),
        None => Ok(()),
    }
}
