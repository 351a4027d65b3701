//! Forward emission `U_h` and its left inverse.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::indexer::TrajIndexer;
use super::SV_FLOOR;
use crate::error::{Error, Result};
use crate::linalg::{column_rank_margin, left_inverse};
use crate::pomdp::TabularPomdp;
use crate::scalar::Real;

/// `U_h` for a window of `future` steps: entry `(window, s)` is
/// `P(o_h..o_{h+k} | s_h = s, a_h..a_{h+k-1})`, rows laid out by
/// [`TrajIndexer`].
///
/// Built backwards from the last emission: each step prepends one
/// observation and one action to the window.
pub fn forward_emission<T: Real>(
    model: &TabularPomdp<T>,
    h: usize,
    future: usize,
    row_cap: usize,
) -> Result<Array2<T>> {
    let last = model.dims().last_emission_step();
    if h == 0 || h + future > last {
        return Err(Error::StepOutOfRange {
            step: h,
            min: 1,
            max: last.saturating_sub(future),
        });
    }
    let (o_count, a_count, s_count) = (model.observations(), model.actions(), model.states());
    let rows = TrajIndexer::new(o_count, a_count, future)
        .rows_checked()
        .unwrap_or(usize::MAX);
    if rows > row_cap {
        return Err(Error::OperatorTooLarge { rows, cap: row_cap });
    }

    let mut g = model.emission(h + future).to_owned();
    for m in 0..future {
        // `g` covers m + 1 observations and m actions, starting at `step + 1`.
        let step = h + future - 1 - m;
        let obs_span = o_count.pow(m as u32 + 1);
        let act_span = a_count.pow(m as u32);
        let new_rows = obs_span * o_count * act_span * a_count;
        let mut next = Array2::<T>::zeros((new_rows, s_count));
        let emit = model.emission(step);
        for a in 0..a_count {
            let moved = g.dot(&model.transition(step, a).t());
            for (row, vals) in moved.rows().into_iter().enumerate() {
                let (ob, ab) = (row / act_span, row % act_span);
                for o in 0..o_count {
                    let dst = (o * obs_span + ob) * act_span * a_count + a * act_span + ab;
                    let mut out = next.row_mut(dst);
                    for s in 0..s_count {
                        out[s] = emit[[o, s]] * vals[s];
                    }
                }
            }
        }
        g = next;
    }
    Ok(g)
}

/// `U_h v`: law of the future window when `s_h ~ v`.
pub fn window_law<T: Real>(u: ArrayView2<'_, T>, v: ArrayView1<'_, T>) -> Array1<T> {
    u.dot(&v)
}

/// Left inverse of a forward emission via SVD; fails when the smallest
/// singular value is below `sv_floor`.
pub fn pinv_forward_emission<T: Real>(u: ArrayView2<'_, T>, sv_floor: T) -> Result<Array2<T>> {
    left_inverse(u, sv_floor)
}

/// Smallest `k <= k_max` for which every `U_1..U_H` has smallest singular
/// value at least `1e-6`.
///
/// Windows longer than the stored kernels allow are reported as `0` in the
/// error listing.
pub fn min_sufficient_k<T: Real>(model: &TabularPomdp<T>, k_max: usize, row_cap: usize) -> Result<usize> {
    let mut per_k = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut smin = f64::INFINITY;
        for h in 1..=model.horizon() {
            let u = match forward_emission(model, h, k, row_cap) {
                Ok(u) => u,
                Err(Error::StepOutOfRange { .. }) | Err(Error::OperatorTooLarge { .. }) => {
                    smin = 0.0;
                    break;
                }
                Err(e) => return Err(e),
            };
            smin = smin.min(column_rank_margin(u.view()).as_f64());
        }
        if smin >= SV_FLOOR {
            return Ok(k);
        }
        per_k.push(smin);
    }
    Err(Error::NoSufficientWindow { k_max, per_k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::pomdp::fixtures::{fo2, identity_k0, indistinguishable};

    #[test]
    fn fo2_u1_by_hand() {
        let m = fo2::<f64>();
        let u = forward_emission(&m, 1, 1, 4096).unwrap();
        let ix = TrajIndexer::new(2, 2, 1);
        assert_eq!(u.dim(), (8, 2));
        // from state 0: stay gives (0,0), swap gives (0,1); from state 1 mirrored
        let mut expect = Array2::<f64>::zeros((8, 2));
        expect[[ix.encode(&[0, 0], &[0]), 0]] = 1.0;
        expect[[ix.encode(&[0, 1], &[1]), 0]] = 1.0;
        expect[[ix.encode(&[1, 1], &[0]), 1]] = 1.0;
        expect[[ix.encode(&[1, 0], &[1]), 1]] = 1.0;
        assert_eq!(u, expect);
    }

    #[test]
    fn k0_is_emission() {
        let m = fo2::<f64>();
        let u = forward_emission(&m, 2, 0, 4096).unwrap();
        assert_eq!(u, m.emission(2));
    }

    #[test]
    fn fo2_pinv_is_half_transpose() {
        let m = fo2::<f64>();
        let u = forward_emission(&m, 1, 1, 4096).unwrap();
        let p = pinv_forward_emission(u.view(), 1e-6).unwrap();
        let half_t = u.t().mapv(|x| x / 2.0);
        assert!(max_abs_diff(p.view(), half_t.view()) < 1e-12);
        assert!(max_abs_diff(p.dot(&u).view(), Array2::eye(2).view()) < 1e-12);
    }

    #[test]
    fn row_cap_guard() {
        let m = fo2::<f64>();
        assert!(matches!(
            forward_emission(&m, 1, 1, 4),
            Err(Error::OperatorTooLarge { rows: 8, cap: 4 })
        ));
    }

    #[test]
    fn step_range() {
        let m = fo2::<f64>();
        assert!(forward_emission(&m, 3, 1, 4096).is_ok());
        assert!(forward_emission(&m, 4, 1, 4096).is_err());
        assert!(forward_emission(&m, 0, 1, 4096).is_err());
    }

    #[test]
    fn sufficient_k() {
        assert_eq!(min_sufficient_k(&identity_k0::<f64>(), 2, 4096).unwrap(), 0);
        assert!(matches!(
            min_sufficient_k(&indistinguishable::<f64>(), 2, 4096),
            Err(Error::NoSufficientWindow { k_max: 2, .. })
        ));
    }
}
