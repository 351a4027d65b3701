//! Data collection and count-based density estimation.

mod dataset;
mod estimates;

pub use dataset::{collect_iteration, TrajectoryDataset};
pub use estimates::{
    empirical_bellman_loss, estimate_densities, exact_densities, initial_window_error, DensityEstimates,
};
