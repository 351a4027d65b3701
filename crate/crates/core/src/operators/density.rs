//! Joint past/future probability matrices `X_h` and `Y_h`.
//!
//! Columns index the past observations `o_{h-ell}..o_{h-1}` over `0..=O`;
//! the extra symbol `O` fills slots before step 1 and every other column
//! with such a slot is zero. The start law is the law of the state at step
//! `max(h - ell, 1)`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::bellman::OperatorSet;
use super::indexer::PastIndexer;
use crate::error::{Error, Result};
use crate::linalg::max_abs_diff;
use crate::pomdp::{Behavior, TabularPomdp};
use crate::scalar::Real;

/// First step of the past window, clamped to the episode.
pub fn past_start_step(h: usize, past: usize) -> usize {
    h.saturating_sub(past).max(1)
}

/// Law of the state at step `max(h - ell, 1)` when acting with `behavior`
/// before the window.
pub fn reference_start_law<T: Real>(model: &TabularPomdp<T>, behavior: Behavior<'_>, h: usize) -> Result<Array1<T>> {
    let start = past_start_step(h, model.past_len());
    let laws = crate::pomdp::state_marginals(model, behavior, start)?;
    Ok(laws[start - 1].clone())
}

/// `P(s_h, o_{h-ell}..o_{h-1} | a_{h-ell}..a_{h-1})` for one past column, or
/// `None` when the column puts a real observation before step 1 or a dummy
/// one inside the episode.
fn past_chain<T: Real>(
    model: &TabularPomdp<T>,
    h: usize,
    past_actions: &[usize],
    past_obs: &[usize],
    start_law: ArrayView1<'_, T>,
) -> Option<Array1<T>> {
    let ell = past_obs.len();
    let dummy = model.observations();
    let mut v = start_law.to_owned();
    for i in 0..ell {
        let step = h as isize - ell as isize + i as isize;
        let o = past_obs[i];
        if step < 1 {
            if o != dummy {
                return None;
            }
            continue;
        }
        if o == dummy {
            return None;
        }
        let step = step as usize;
        v = model.propagate(
            step,
            past_actions[i],
            model.weight_by_emission(step, o, v.view()).view(),
        );
    }
    Some(v)
}

fn check_common<T: Real>(
    model: &TabularPomdp<T>,
    h: usize,
    past_actions: &[usize],
    start_law: ArrayView1<'_, T>,
) -> Result<()> {
    crate::pomdp::model::step_in(h, 1, model.horizon())?;
    if past_actions.len() != model.past_len() {
        return Err(Error::LengthMismatch(format!(
            "expected {} past actions, got {}",
            model.past_len(),
            past_actions.len()
        )));
    }
    if past_actions.iter().any(|&a| a >= model.actions()) {
        return Err(Error::IndexOutOfRange("past action".into()));
    }
    if start_law.len() != model.states() {
        return Err(Error::LengthMismatch("start law length".into()));
    }
    Ok(())
}

/// `X_h(a_{h-ell}..a_{h-1})`: entry `(future window, past window)` is the
/// joint law of `o_{h-ell}..o_{h+k}` given every action in the span.
pub fn build_x<T: Real>(
    model: &TabularPomdp<T>,
    ops: &OperatorSet<T>,
    h: usize,
    past_actions: &[usize],
    start_law: ArrayView1<'_, T>,
) -> Result<Array2<T>> {
    check_common(model, h, past_actions, start_law)?;
    let past = PastIndexer::new(model.observations(), model.past_len());
    let u = ops.u(h);
    let mut x = Array2::zeros((u.nrows(), past.cols()));
    for col in 0..past.cols() {
        if let Some(v) = past_chain(model, h, past_actions, &past.decode(col), start_law) {
            x.column_mut(col).assign(&u.dot(&v));
        }
    }
    Ok(x)
}

/// `Y_h(a_{h-ell}..a_h, o_h)`: the same joint law one step later, with
/// `o_h` fixed and the future window read from step `h + 1`.
pub fn build_y<T: Real>(
    model: &TabularPomdp<T>,
    ops: &OperatorSet<T>,
    h: usize,
    actions: &[usize],
    o_h: usize,
    start_law: ArrayView1<'_, T>,
) -> Result<Array2<T>> {
    let ell = model.past_len();
    if actions.len() != ell + 1 {
        return Err(Error::LengthMismatch(format!(
            "expected {} actions, got {}",
            ell + 1,
            actions.len()
        )));
    }
    check_common(model, h, &actions[..ell], start_law)?;
    if actions[ell] >= model.actions() || o_h >= model.observations() {
        return Err(Error::IndexOutOfRange("current action or observation".into()));
    }
    let past = PastIndexer::new(model.observations(), ell);
    let u = ops.u(h + 1);
    let mut y = Array2::zeros((u.nrows(), past.cols()));
    for col in 0..past.cols() {
        if let Some(v) = past_chain(model, h, &actions[..ell], &past.decode(col), start_law) {
            let next = model.propagate(h, actions[ell], model.weight_by_emission(h, o_h, v.view()).view());
            y.column_mut(col).assign(&u.dot(&next));
        }
    }
    Ok(y)
}

/// `max |B X - Y|`.
pub fn verify_bellman_identity<T: Real>(b: ArrayView2<'_, T>, x: ArrayView2<'_, T>, y: ArrayView2<'_, T>) -> Result<T> {
    if b.ncols() != x.nrows() || b.nrows() != y.nrows() || x.ncols() != y.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "B {:?}, X {:?}, Y {:?}",
            b.dim(),
            x.dim(),
            y.dim()
        )));
    }
    Ok(max_abs_diff(b.dot(&x).view(), y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorConfig;
    use crate::pomdp::fixtures::fo2;

    #[test]
    fn fo2_identity_holds() {
        let m = fo2::<f64>();
        let ops = OperatorSet::build(&m, &OperatorConfig::default()).unwrap();
        for h in 1..=2 {
            let start = reference_start_law(&m, Behavior::UniformRandom, h).unwrap();
            for a0 in 0..2 {
                let x = build_x(&m, &ops, h, &[a0], start.view()).unwrap();
                for a1 in 0..2 {
                    for o in 0..2 {
                        let y = build_y(&m, &ops, h, &[a0, a1], o, start.view()).unwrap();
                        let r = verify_bellman_identity(ops.bellman(h, a1, o), x.view(), y.view()).unwrap();
                        assert!(r < 1e-12, "h={h} a=({a0},{a1}) o={o}: {r}");
                    }
                }
            }
        }
    }

    #[test]
    fn first_step_x_is_b1_in_dummy_column() {
        let m = fo2::<f64>();
        let ops = OperatorSet::build(&m, &OperatorConfig::default()).unwrap();
        let x = build_x(&m, &ops, 1, &[1], m.mu1()).unwrap();
        assert_eq!(x.ncols(), 3);
        assert_eq!(x.column(2).to_owned(), *ops.b1());
        assert!(x.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_x_gives_zero_residual() {
        let b = Array2::from_elem((3, 3), 5.0);
        let x = Array2::<f64>::zeros((3, 2));
        assert_eq!(verify_bellman_identity(b.view(), x.view(), x.view()).unwrap(), 0.0);
    }
}
