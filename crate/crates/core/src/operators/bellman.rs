//! Bellman operators and operator-product evaluation of trajectories and values.

use ndarray::{Array1, Array2, ArrayView2};

use super::emission::{forward_emission, pinv_forward_emission};
use super::indexer::TrajIndexer;
use super::{DEFAULT_ROW_CAP, SV_FLOOR};
use crate::error::{Error, Result};
use crate::linalg::norm_1_to_1;
use crate::pomdp::{Dims, Policy, TabularPomdp};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorConfig {
    /// Smallest singular value accepted for a forward emission.
    pub sv_floor: f64,
    /// Largest allowed window row count `O^{k+1} A^k`.
    pub row_cap: usize,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig {
            sv_floor: SV_FLOOR,
            row_cap: DEFAULT_ROW_CAP,
        }
    }
}

/// Every operator derived from one model.
///
/// `U_h` is kept for `h = 1..=H+1` (the last one feeds `B_H`), `U_h^+` and the
/// Gram matrix `U_h^T U_h` for `h = 1..=H`, and `B_h(a, o)` for `h = 1..=H`.
#[derive(Debug, Clone)]
pub struct OperatorSet<T> {
    dims: Dims,
    indexer: TrajIndexer,
    u: Vec<Array2<T>>,
    u_dag: Vec<Array2<T>>,
    gram: Vec<Array2<T>>,
    /// `[h-1][a * O + o]`.
    bellman: Vec<Vec<Array2<T>>>,
    b1: Array1<T>,
    nu: T,
}

/// `B_h(a, o) = U_{h+1} T_h(a)^T diag(O_h(o | .)) U_h^+`.
pub fn build_bellman_operator<T: Real>(
    model: &TabularPomdp<T>,
    h: usize,
    a: usize,
    o: usize,
    u_next: ArrayView2<'_, T>,
    u_dag: ArrayView2<'_, T>,
) -> Result<Array2<T>> {
    model.check_transition_step(h)?;
    if a >= model.actions() || o >= model.observations() {
        return Err(Error::IndexOutOfRange(format!("action {a} / observation {o}")));
    }
    let mut weighted = u_dag.to_owned();
    for (s, mut row) in weighted.rows_mut().into_iter().enumerate() {
        row *= model.emission(h)[[o, s]];
    }
    let inner = model.transition(h, a).t().dot(&weighted);
    Ok(u_next.dot(&inner))
}

impl<T: Real> OperatorSet<T> {
    pub fn build(model: &TabularPomdp<T>, cfg: &OperatorConfig) -> Result<Self> {
        let dims = model.dims();
        let indexer = TrajIndexer::new(dims.observations, dims.actions, dims.future);
        let floor = T::lit(cfg.sv_floor);

        let u = (1..=dims.horizon + 1)
            .map(|h| forward_emission(model, h, dims.future, cfg.row_cap))
            .collect::<Result<Vec<_>>>()?;
        let mut u_dag = Vec::with_capacity(dims.horizon);
        let mut gram = Vec::with_capacity(dims.horizon);
        for h in 1..=dims.horizon {
            let ui = &u[h - 1];
            let p = pinv_forward_emission(ui.view(), floor).map_err(|e| match e {
                Error::RankDeficient { sigma_min, .. } => Error::FutureSufficiency { step: h, sigma_min },
                other => other,
            })?;
            u_dag.push(p);
            gram.push(ui.t().dot(ui));
        }

        let mut bellman = Vec::with_capacity(dims.horizon);
        for h in 1..=dims.horizon {
            let mut per = Vec::with_capacity(dims.actions * dims.observations);
            for a in 0..dims.actions {
                for o in 0..dims.observations {
                    per.push(build_bellman_operator(
                        model,
                        h,
                        a,
                        o,
                        u[h].view(),
                        u_dag[h - 1].view(),
                    )?);
                }
            }
            bellman.push(per);
        }

        let b1 = u[0].dot(&model.mu1());
        let nu = u_dag.iter().map(|p| norm_1_to_1(p.view())).fold(T::zero(), T::max);
        Ok(OperatorSet {
            dims,
            indexer,
            u,
            u_dag,
            gram,
            bellman,
            b1,
            nu,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }
    pub fn indexer(&self) -> TrajIndexer {
        self.indexer
    }

    /// `U_h`, `h = 1..=H+1`.
    pub fn u(&self, h: usize) -> ArrayView2<'_, T> {
        self.u[h - 1].view()
    }

    /// `U_h^+`, `h = 1..=H`.
    pub fn u_dag(&self, h: usize) -> ArrayView2<'_, T> {
        self.u_dag[h - 1].view()
    }

    pub fn gram(&self, h: usize) -> ArrayView2<'_, T> {
        self.gram[h - 1].view()
    }

    /// `B_h(a, o)`, `h = 1..=H`.
    pub fn bellman(&self, h: usize, a: usize, o: usize) -> ArrayView2<'_, T> {
        self.bellman[h - 1][a * self.dims.observations + o].view()
    }

    /// Mutable access, for fault-injection checks.
    pub fn bellman_mut(&mut self, h: usize, a: usize, o: usize) -> &mut Array2<T> {
        &mut self.bellman[h - 1][a * self.dims.observations + o]
    }

    pub fn b1(&self) -> &Array1<T> {
        &self.b1
    }

    /// `max_h ||U_h^+||_{1->1}`.
    pub fn nu(&self) -> T {
        self.nu
    }

    /// `e_o^T v`: mass of the rows whose window starts with `o` and carries
    /// the action block `dummy_block`.
    pub fn indicator(&self, v: &Array1<T>, o: usize, dummy_block: usize) -> T {
        self.indexer.rows_starting_with(o, dummy_block).map(|r| v[r]).sum()
    }

    /// `P(o_1..o_n | a_1..a_{n-1}) = e_{o_n}^T B_{n-1} ... B_1 b_1` for
    /// `1 <= n <= H + 1`, reading the last window with the future actions
    /// `dummy_actions` (length `k`).
    pub fn trajectory_probability(&self, obs: &[usize], acts: &[usize], dummy_actions: &[usize]) -> Result<T> {
        let n = obs.len();
        if n == 0 || acts.len() + 1 != n || dummy_actions.len() != self.dims.future {
            return Err(Error::LengthMismatch(format!(
                "{} observations, {} actions, {} dummy actions (k = {})",
                n,
                acts.len(),
                dummy_actions.len(),
                self.dims.future
            )));
        }
        if n > self.dims.horizon + 1 {
            return Err(Error::StepOutOfRange {
                step: n,
                min: 1,
                max: self.dims.horizon + 1,
            });
        }
        let (o_count, a_count) = (self.dims.observations, self.dims.actions);
        if obs.iter().any(|&o| o >= o_count) || acts.iter().chain(dummy_actions).any(|&a| a >= a_count) {
            return Err(Error::IndexOutOfRange("trajectory symbol".into()));
        }
        let mut v = self.b1.clone();
        for h in 1..n {
            v = self.bellman(h, acts[h - 1], obs[h - 1]).dot(&v);
        }
        let block = crate::pomdp::policy::encode_digits(dummy_actions, a_count);
        Ok(self.indicator(&v, obs[n - 1], block))
    }

    /// `V^pi = sum_h sum_{o_1..o_h} P(o_1..o_h) r_h(o_h)`, walking the
    /// observation tree once and sharing operator products between prefixes.
    pub fn policy_value(&self, rewards: &[Array1<T>], policy: &Policy) -> Result<T> {
        policy.validate(&self.dims)?;
        if rewards.len() != self.dims.horizon {
            return Err(Error::LengthMismatch("one reward vector per step".into()));
        }
        let mut obs = Vec::with_capacity(self.dims.horizon);
        self.value_from(1, &self.b1, rewards, policy, &mut obs)
    }

    fn value_from(
        &self,
        h: usize,
        v: &Array1<T>,
        rewards: &[Array1<T>],
        policy: &Policy,
        obs: &mut Vec<usize>,
    ) -> Result<T> {
        let mut total = T::zero();
        for o in 0..self.dims.observations {
            total += self.indicator(v, o, 0) * rewards[h - 1][o];
            if h < self.dims.horizon {
                obs.push(o);
                let a = policy.act(h, obs, self.dims.observations)?;
                let next = self.bellman(h, a, o).dot(v);
                total += self.value_from(h + 1, &next, rewards, policy, obs)?;
                obs.pop();
            }
        }
        Ok(total)
    }
}

/// Convenience wrapper around [`OperatorSet::trajectory_probability`].
pub fn trajectory_probability_via_operators<T: Real>(
    ops: &OperatorSet<T>,
    obs: &[usize],
    acts: &[usize],
    dummy_actions: &[usize],
) -> Result<T> {
    ops.trajectory_probability(obs, acts, dummy_actions)
}

/// Convenience wrapper around [`OperatorSet::policy_value`].
pub fn policy_value_via_operators<T: Real>(ops: &OperatorSet<T>, rewards: &[Array1<T>], policy: &Policy) -> Result<T> {
    ops.policy_value(rewards, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::pomdp::fixtures::{fo2, identity_k0, indistinguishable};
    use crate::pomdp::policy::decode_digits;

    #[test]
    fn fo2_operators() {
        let m = fo2::<f64>();
        let ops = OperatorSet::build(&m, &OperatorConfig::default()).unwrap();
        assert!((ops.nu() - 0.5).abs() < 1e-12);
        let p = ops.trajectory_probability(&[0, 1], &[1], &[0]).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let v = ops
            .policy_value(
                &[m.reward(1).to_owned(), m.reward(2).to_owned()],
                &Policy::OpenLoop { actions: vec![1, 0] },
            )
            .unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_emission_bellman_is_transition_times_selector() {
        let m = identity_k0::<f64>();
        let ops = OperatorSet::build(&m, &OperatorConfig::default()).unwrap();
        for a in 0..2 {
            for o in 0..3 {
                let mut sel = Array2::<f64>::zeros((3, 3));
                sel[[o, o]] = 1.0;
                let expect = m.transition(1, a).t().dot(&sel);
                assert!(max_abs_diff(ops.bellman(1, a, o), expect.view()) < 1e-12);
            }
        }
    }

    #[test]
    fn fo2_probabilities_sum_to_one() {
        let m = fo2::<f64>();
        let ops = OperatorSet::build(&m, &OperatorConfig::default()).unwrap();
        for acts in [[0], [1]] {
            let total: f64 = (0..4)
                .map(|i| {
                    let o = decode_digits(i, 2, 2);
                    ops.trajectory_probability(&o, &acts, &[1]).unwrap()
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn insufficient_model_is_rejected() {
        let m = indistinguishable::<f64>();
        assert!(matches!(
            OperatorSet::build(&m, &OperatorConfig::default()),
            Err(Error::FutureSufficiency { step: 1, .. })
        ));
    }

    #[test]
    fn length_checks() {
        let ops = OperatorSet::build(&fo2::<f64>(), &OperatorConfig::default()).unwrap();
        assert!(ops.trajectory_probability(&[0, 1], &[], &[0]).is_err());
        assert!(ops.trajectory_probability(&[0, 1], &[1], &[]).is_err());
        assert!(ops.trajectory_probability(&[0, 1, 1, 0], &[1, 0, 0], &[0]).is_err());
    }
}
