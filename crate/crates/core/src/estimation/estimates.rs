//! Count-based estimates of `b_1`, `X_h` and `Y_h`, and the empirical
//! Bellman loss.

use ndarray::{Array1, Array2};

use super::dataset::TrajectoryDataset;
use crate::error::{Error, Result};
use crate::linalg::entrywise_l1;
use crate::operators::{build_x, build_y, reference_start_law, OperatorSet, PastIndexer, TrajIndexer};
use crate::pomdp::policy::{decode_digits, encode_digits};
use crate::pomdp::{Behavior, Dims, TabularPomdp};
use crate::scalar::Real;

/// Density matrices for one iteration, in the layout of the exact builders.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimates<T> {
    pub dims: Dims,
    pub b1: Array1<T>,
    /// `[h-1][past actions a_{h-ell}..a_{h-1}]`.
    pub x: Vec<Vec<Array2<T>>>,
    /// `[h-1][window a_{h-ell}..a_h * O + o_h]`.
    pub y: Vec<Vec<Array2<T>>>,
    pub t: usize,
}

impl<T: Real> DensityEstimates<T> {
    pub fn x(&self, h: usize, past_actions: &[usize]) -> &Array2<T> {
        &self.x[h - 1][encode_digits(past_actions, self.dims.actions)]
    }

    pub fn y(&self, h: usize, actions: &[usize], o: usize) -> &Array2<T> {
        &self.y[h - 1][encode_digits(actions, self.dims.actions) * self.dims.observations + o]
    }
}

/// Normalized counts from every bucket.
///
/// `X_h(a_{h-ell}..a_{h-1})` reads the bucket whose window continues with the
/// row's future actions and a trailing action 0, ignoring `o_{h+k+1}`;
/// `Y_h(a_{h-ell}..a_h, o_h)` reads the bucket whose window continues with
/// the row's future actions. `b_1` is the pre-episode column of `X_1` with
/// every dummy action set to 0.
pub fn estimate_densities<T: Real>(data: &TrajectoryDataset) -> Result<DensityEstimates<T>> {
    let t = data.t();
    if t == 0 {
        return Err(Error::NoSamples);
    }
    let d = data.dims();
    let (o_count, a_count, k, ell) = (d.observations, d.actions, d.future, d.past);
    let ix = TrajIndexer::new(o_count, a_count, k);
    let past = PastIndexer::new(o_count, ell);
    let rows = ix.rows();
    let inv_t = T::one() / T::lit(t as f64);
    let seq_len = data.sequence_len();
    let base = o_count + 1;

    let mut x = vec![vec![Array2::zeros((rows, past.cols())); a_count.pow(ell as u32)]; d.horizon];
    let mut y = vec![vec![Array2::zeros((rows, past.cols())); a_count.pow(ell as u32 + 1) * o_count]; d.horizon];

    for (bucket, (h, window)) in data.buckets().enumerate() {
        let counts = data.counts(bucket);
        let past_acts = &window[..ell];
        let future_acts = &window[ell..ell + k];
        let next_acts = &window[ell + 1..];
        let feeds_x = window[ell + k] == 0;
        let x_slot = encode_digits(past_acts, a_count);
        let y_slot = encode_digits(&window[..=ell], a_count) * o_count;
        let fa = encode_digits(future_acts, a_count);
        let na = encode_digits(next_acts, a_count);
        for (code, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let seq = decode_digits(code, base, seq_len);
            let mass = T::lit(c as f64) * inv_t;
            let col = past.encode(&seq[..ell]);
            if feeds_x {
                let row = ix.index(encode_digits(&seq[ell..ell + k + 1], o_count), fa);
                x[h - 1][x_slot][[row, col]] += mass;
            }
            let o_h = seq[ell];
            let row = ix.index(encode_digits(&seq[ell + 1..], o_count), na);
            y[h - 1][y_slot + o_h][[row, col]] += mass;
        }
    }

    let dummy_col = past.encode(&vec![past.dummy(); ell]);
    let b1 = x[0][0].column(dummy_col).to_owned();
    Ok(DensityEstimates { dims: d, b1, x, y, t })
}

/// Exact counterparts of [`estimate_densities`] when every bucket is
/// collected under `behavior`.
pub fn exact_densities<T: Real>(
    model: &TabularPomdp<T>,
    ops: &OperatorSet<T>,
    behavior: Behavior<'_>,
) -> Result<DensityEstimates<T>> {
    let d = model.dims();
    let (o_count, a_count, ell) = (d.observations, d.actions, d.past);
    let mut x = Vec::with_capacity(d.horizon);
    let mut y = Vec::with_capacity(d.horizon);
    for h in 1..=d.horizon {
        let start = reference_start_law(model, behavior, h)?;
        let mut xs = Vec::new();
        for pi in 0..a_count.pow(ell as u32) {
            xs.push(build_x(model, ops, h, &decode_digits(pi, a_count, ell), start.view())?);
        }
        let mut ys = Vec::new();
        for wi in 0..a_count.pow(ell as u32 + 1) {
            let acts = decode_digits(wi, a_count, ell + 1);
            for o in 0..o_count {
                ys.push(build_y(model, ops, h, &acts, o, start.view())?);
            }
        }
        x.push(xs);
        y.push(ys);
    }
    Ok(DensityEstimates {
        dims: d,
        b1: ops.b1().clone(),
        x,
        y,
        t: 0,
    })
}

/// `max_{a_{h-ell}..a_h} sum_{o_h} || B_h(a_h, o_h) X_h - Y_h ||_1` with the
/// entrywise l1 norm.
pub fn empirical_bellman_loss<T: Real>(ops: &OperatorSet<T>, est: &DensityEstimates<T>, h: usize) -> Result<T> {
    let d = est.dims;
    if ops.dims() != d {
        return Err(Error::ShapeMismatch(
            "operators and estimates differ in dimensions".into(),
        ));
    }
    crate::pomdp::model::step_in(h, 1, d.horizon)?;
    let (o_count, a_count, ell) = (d.observations, d.actions, d.past);
    let mut worst = T::zero();
    for wi in 0..a_count.pow(ell as u32 + 1) {
        let acts = decode_digits(wi, a_count, ell + 1);
        let x = est.x(h, &acts[..ell]);
        let mut total = T::zero();
        for o in 0..o_count {
            let r = ops.bellman(h, acts[ell], o).dot(x) - est.y(h, &acts, o);
            total += entrywise_l1(r.view());
        }
        worst = worst.max(total);
    }
    Ok(worst)
}

/// `||b_1 - b1_hat||_1`.
pub fn initial_window_error<T: Real>(ops: &OperatorSet<T>, est: &DensityEstimates<T>) -> T {
    ops.b1().iter().zip(est.b1.iter()).map(|(&a, &b)| (a - b).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::collect_iteration;
    use crate::operators::OperatorConfig;
    use crate::pomdp::fixtures::fo2;

    #[test]
    fn no_samples() {
        let data = TrajectoryDataset::new(fo2::<f64>().dims()).unwrap();
        assert!(matches!(estimate_densities::<f64>(&data), Err(Error::NoSamples)));
    }

    #[test]
    fn deterministic_model_estimates_are_exact() {
        let m = fo2::<f64>();
        let ops = OperatorSet::build(&m, &OperatorConfig::default()).unwrap();
        let mut data = TrajectoryDataset::new(m.dims()).unwrap();
        for _ in 0..4 {
            collect_iteration(&m, Behavior::UniformRandom, &mut data, 11).unwrap();
        }
        let est = estimate_densities::<f64>(&data).unwrap();
        let exact = exact_densities(&m, &ops, Behavior::UniformRandom).unwrap();
        assert_eq!(est.b1, exact.b1);
        for h in 1..=2 {
            for a in 0..2 {
                assert_eq!(est.x(h, &[a]), exact.x(h, &[a]), "h={h} a={a}");
            }
            assert!(empirical_bellman_loss(&ops, &est, h).unwrap() < 1e-12);
        }
    }

    #[test]
    fn x_mass_per_action_block() {
        let m = fo2::<f64>();
        let mut data = TrajectoryDataset::new(m.dims()).unwrap();
        for _ in 0..3 {
            collect_iteration(&m, Behavior::UniformRandom, &mut data, 5).unwrap();
        }
        let est = estimate_densities::<f64>(&data).unwrap();
        // two future action blocks, each contributing total mass 1
        assert!((est.x(2, &[1]).sum() - 2.0).abs() < 1e-12);
        assert!((est.b1.sum() - 2.0).abs() < 1e-12);
    }
}
