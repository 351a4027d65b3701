//! Small hand-built models with known answers.

use ndarray::{Array1, Array2};

use super::model::{Dims, TabularPomdp};
use crate::scalar::Real;

/// Model whose kernels do not depend on the step: `per_action[a]` is used
/// for every transition step, `emission` for every emission step and
/// `reward` for every rewarded step.
pub fn stationary<T: Real>(
    dims: Dims,
    per_action: &[Array2<T>],
    emission: &Array2<T>,
    reward: &Array1<T>,
    mu1: Array1<T>,
) -> TabularPomdp<T> {
    TabularPomdp::new(
        dims,
        vec![per_action.to_vec(); dims.last_transition_step()],
        vec![emission.clone(); dims.last_emission_step()],
        vec![reward.clone(); dims.horizon],
        mu1,
    )
    .expect("fixture kernels are valid")
}

fn lit2<T: Real>(rows: &[&[f64]]) -> Array2<T> {
    let n = rows[0].len();
    Array2::from_shape_fn((rows.len(), n), |(i, j)| T::lit(rows[i][j]))
}

fn lit1<T: Real>(v: &[f64]) -> Array1<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

/// Two fully observed states: action 0 stays, action 1 swaps, start in
/// state 0, reward 1 for observing state 1. `H = 2`, `k = 1`, `ell = 1`.
pub fn fo2<T: Real>() -> TabularPomdp<T> {
    fo2_with(2, 1, 1)
}

pub fn fo2_with<T: Real>(horizon: usize, future: usize, past: usize) -> TabularPomdp<T> {
    let dims = Dims {
        states: 2,
        actions: 2,
        observations: 2,
        horizon,
        future,
        past,
    };
    let stay = lit2::<T>(&[&[1.0, 0.0], &[0.0, 1.0]]);
    let swap = lit2::<T>(&[&[0.0, 1.0], &[1.0, 0.0]]);
    stationary(
        dims,
        &[stay, swap],
        &Array2::eye(2),
        &lit1(&[0.0, 1.0]),
        lit1(&[1.0, 0.0]),
    )
}

/// Every kernel uniform; `k = ell = 0`.
pub fn uniform_model<T: Real>(states: usize, actions: usize, observations: usize, horizon: usize) -> TabularPomdp<T> {
    let dims = Dims {
        states,
        actions,
        observations,
        horizon,
        future: 0,
        past: 0,
    };
    let t = Array2::from_elem((states, states), T::one() / T::lit(states as f64));
    let e = Array2::from_elem((observations, states), T::one() / T::lit(observations as f64));
    let r = Array1::from_elem(observations, T::lit(0.5));
    let mu = Array1::from_elem(states, T::one() / T::lit(states as f64));
    stationary(dims, &vec![t; actions], &e, &r, mu)
}

/// Three fully observed states (`O = S`), identity emissions and `k = 0`,
/// so the forward emission is the identity.
pub fn identity_k0<T: Real>() -> TabularPomdp<T> {
    let dims = Dims {
        states: 3,
        actions: 2,
        observations: 3,
        horizon: 2,
        future: 0,
        past: 1,
    };
    let cycle = lit2::<T>(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]);
    let mix = lit2::<T>(&[&[0.5, 0.5, 0.0], &[0.0, 0.5, 0.5], &[0.5, 0.0, 0.5]]);
    stationary(
        dims,
        &[cycle, mix],
        &Array2::eye(3),
        &lit1(&[0.0, 0.5, 1.0]),
        lit1(&[0.6, 0.3, 0.1]),
    )
}

/// States 1 and 2 share their emission column and transition rows, so no
/// future window can tell them apart.
pub fn indistinguishable<T: Real>() -> TabularPomdp<T> {
    let dims = Dims {
        states: 3,
        actions: 2,
        observations: 3,
        horizon: 2,
        future: 1,
        past: 1,
    };
    let t0 = lit2::<T>(&[&[0.2, 0.4, 0.4], &[0.5, 0.25, 0.25], &[0.5, 0.25, 0.25]]);
    let t1 = lit2::<T>(&[&[0.6, 0.2, 0.2], &[0.1, 0.45, 0.45], &[0.1, 0.45, 0.45]]);
    let e = lit2::<T>(&[&[0.7, 0.1, 0.1], &[0.2, 0.3, 0.3], &[0.1, 0.6, 0.6]]);
    stationary(dims, &[t0, t1], &e, &lit1(&[0.0, 1.0, 0.5]), lit1(&[0.3, 0.3, 0.4]))
}

/// Partially observed two-state chain with a constant emission (every
/// observation equally likely in every state) and a non-uniform start.
pub fn uninformative<T: Real>() -> TabularPomdp<T> {
    let dims = Dims {
        states: 2,
        actions: 2,
        observations: 2,
        horizon: 2,
        future: 0,
        past: 0,
    };
    let t0 = lit2::<T>(&[&[0.9, 0.1], &[0.3, 0.7]]);
    let t1 = lit2::<T>(&[&[0.2, 0.8], &[0.6, 0.4]]);
    let e = lit2::<T>(&[&[0.5, 0.5], &[0.5, 0.5]]);
    stationary(dims, &[t0, t1], &e, &lit1(&[1.0, 0.0]), lit1(&[0.8, 0.2]))
}
