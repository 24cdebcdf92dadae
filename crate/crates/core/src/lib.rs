//! Carrier scheduling for backscatter-augmented IoT networks.
//!
//! Nodes either provide an unmodulated carrier, query one of their hosted
//! sensor tags, or idle in each timeslot. A schedule interrogates every tag
//! exactly once; its cost is `T·C + L` (carriers first, then length).
//!
//! ```
//! use carrier_sched::{parse_instance, solve_optimal, schedule_cost, SolverBudget};
//!
//! let inst = parse_instance(r#"{"nodes":2,"edges":[[0,1]],"tags":[{"id":1,"host":0}]}"#).unwrap();
//! let sched = solve_optimal(&inst, &SolverBudget::default()).unwrap();
//! assert_eq!(schedule_cost(&inst, &sched).objective, 2);
//! ```

pub mod exact;
pub mod features;
pub mod generate;
pub mod gnn;
pub mod heuristic;
pub mod io;
pub mod metrics;
pub mod model;
pub mod scheduler;
pub mod validate;

pub use exact::{solve_optimal, ExactScheduler, SolverBudget, MAX_SUPPORTED_NODES};
pub use features::{build_feature_matrix, laplacian_eigenvalues, node_degrees, FeatureMatrix, NumericalError, PeMode};
pub use generate::{generate_corpus, generate_instance, GenerateError, GeneratorConfig, GraphModel};
pub use gnn::{
    schedule_with_gnn, GnnConfig, GnnModel, GnnScheduler, InferencePolicy, RepairPolicy, WeightError,
};
pub use heuristic::{solve_heuristic, HeuristicScheduler};
pub use io::{emit_corpus, emit_instance, emit_schedule, parse_corpus, parse_instance, parse_schedule, ParseError};
pub use metrics::{avg_energy_per_tag, run_benchmark, BenchError, BenchmarkReport, RadioParams};
pub use model::{Interrogation, ModelError, NodeId, ProblemInstance, Role, Schedule, Tag, TagId, Timeslot, Topology};
pub use scheduler::{ScheduleError, Scheduler};
pub use validate::{schedule_cost, validate_schedule, ScheduleCost, ValidationReport, Violation, ViolationKind};
