//! Embed-to-control for tabular POMDPs with low-rank transitions.
//!
//! Models are tabular kernels with dummy steps before and after the episode
//! ([`pomdp`]). Their predictive representation lives in [`operators`]:
//! forward emission matrices, Bellman operators and the density matrices they
//! relate. [`estimation`] collects trajectories and estimates those densities
//! from counts; [`learner`] runs the optimistic explore-then-plan loop over a
//! finite candidate class. Everything is generic over [`scalar::Real`].

// `!(x >= 0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod io;
pub mod learner;
pub mod linalg;
pub mod operators;
pub mod pomdp;
pub mod scalar;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Pomdp = pomdp::TabularPomdp<f64>;
pub type Pomdp32 = pomdp::TabularPomdp<f32>;
pub type Operators = operators::OperatorSet<f64>;
pub type Operators32 = operators::OperatorSet<f32>;
