//! Explicit operator matrices: forward emissions, their inverses, Bellman
//! operators, joint density matrices and the sufficiency diagnostics.

mod bellman;
mod density;
mod diagnostics;
pub mod dump;
mod emission;
mod indexer;

pub use bellman::{
    build_bellman_operator, policy_value_via_operators, trajectory_probability_via_operators, OperatorConfig,
    OperatorSet,
};
pub use density::{build_x, build_y, past_start_step, reference_start_law, verify_bellman_identity};
pub use diagnostics::{compute_gamma, compute_gamma_all, compute_nu, performance_difference, PerformanceBound};
pub use emission::{forward_emission, min_sufficient_k, pinv_forward_emission, window_law};
pub use indexer::{PastIndexer, TrajIndexer};

/// Smallest singular value accepted for a forward emission.
pub const SV_FLOOR: f64 = 1e-6;

/// Default cap on the window row count `O^{k+1} A^k`.
pub const DEFAULT_ROW_CAP: usize = 4096;
