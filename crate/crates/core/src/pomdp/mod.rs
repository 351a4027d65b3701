//! Tabular POMDP models, simulation and the brute-force oracle.

pub mod exact;
pub mod fixtures;
pub mod generate;
pub(crate) mod model;
pub mod policy;
pub mod sim;

pub use exact::{
    exact_belief, exact_policy_value, exact_trajectory_distribution, exact_window_distribution,
    optimal_policy_bruteforce, sequence_probability, state_marginals, POLICY_ENUMERATION_CAP,
};
pub use generate::{generate_lowrank_pomdp, GenSpec};
pub use model::{Dims, LowRankFactors, TabularPomdp};
pub use policy::{Policy, PolicyClass};
pub use sim::{episode_return, sample_episode, stream_rng, Behavior, SimRng, Trajectory};
