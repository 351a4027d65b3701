//! Candidate classes, confidence sets, optimistic planning and the outer loop.

mod beta;
mod candidates;
mod plan;
mod run;

pub use beta::{beta_schedule, confidence_threshold, BetaParams, BetaPreset};
pub use candidates::{build_confidence_set, candidate_score, grid_class, perturbed_class, CandidateClass, KernelEntry};
pub use plan::{best_by_operators, mixture_policy_value, optimistic_plan, PlanCache};
pub use run::{run_etc, write_log_csv, EtcConfig, EtcRun, EtcRunState, LogRow, LOG_HEADER};
