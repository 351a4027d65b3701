use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dimensions shared by a model and everything derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    /// Reward-bearing steps `1..=horizon`.
    pub horizon: usize,
    /// Future window length `k`.
    pub future: usize,
    /// Past window length `ell`.
    pub past: usize,
}

impl Dims {
    /// Last step with a stored transition kernel (`H + k`).
    pub fn last_transition_step(&self) -> usize {
        self.horizon + self.future
    }

    /// Last step with a stored emission kernel (`H + k + 1`).
    pub fn last_emission_step(&self) -> usize {
        self.horizon + self.future + 1
    }

    /// Reserved index of the pre-episode dummy observation.
    pub fn dummy_obs(&self) -> usize {
        self.observations
    }

    fn check(&self) -> Result<()> {
        if self.states == 0 || self.actions == 0 || self.observations == 0 || self.horizon == 0 {
            return Err(Error::InvalidModel("S, A, O and H must all be positive".into()));
        }
        Ok(())
    }
}

/// Tabular finite-horizon POMDP with per-step kernels.
///
/// Steps are labelled from 1. Transitions are stored for steps
/// `1..=H+k`, emissions for `1..=H+k+1` (the trailing steps form the dummy
/// future of the extended model) and rewards for `1..=H`. Pre-episode steps
/// are structural: every dummy action leads to `mu1` at step 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPomdp<T> {
    dims: Dims,
    /// `[h-1][a]`, row-stochastic, entry `[s, s'] = P_h(s' | s, a)`.
    transition: Vec<Vec<Array2<T>>>,
    /// `[h-1]`, shape `O x S`, entry `[o, s] = O_h(o | s)`.
    emission: Vec<Array2<T>>,
    /// `[h-1]`, length `O`, entries in `[0, 1]`.
    reward: Vec<Array1<T>>,
    mu1: Array1<T>,
}

impl<T: Real> TabularPomdp<T> {
    pub fn new(
        dims: Dims,
        transition: Vec<Vec<Array2<T>>>,
        emission: Vec<Array2<T>>,
        reward: Vec<Array1<T>>,
        mu1: Array1<T>,
    ) -> Result<Self> {
        let m = TabularPomdp {
            dims,
            transition,
            emission,
            reward,
            mu1,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks shapes and the stochasticity invariants.
    pub fn validate(&self) -> Result<()> {
        let d = &self.dims;
        d.check()?;
        let tol = T::prob_tol();
        let bad = |msg: String| Err(Error::InvalidModel(msg));

        if self.transition.len() != d.last_transition_step() {
            return bad(format!(
                "expected transitions for {} steps, got {}",
                d.last_transition_step(),
                self.transition.len()
            ));
        }
        for (hi, per_a) in self.transition.iter().enumerate() {
            if per_a.len() != d.actions {
                return bad(format!("step {}: expected {} actions", hi + 1, d.actions));
            }
            for (a, t) in per_a.iter().enumerate() {
                if t.dim() != (d.states, d.states) {
                    return bad(format!("transition[{}][{a}] has shape {:?}", hi + 1, t.dim()));
                }
                for (s, row) in t.rows().into_iter().enumerate() {
                    check_distribution(row, tol)
                        .map_err(|e| Error::InvalidModel(format!("transition[{}][{a}] row {s}: {e}", hi + 1)))?;
                }
            }
        }

        if self.emission.len() != d.last_emission_step() {
            return bad(format!(
                "expected emissions for {} steps, got {}",
                d.last_emission_step(),
                self.emission.len()
            ));
        }
        for (hi, e) in self.emission.iter().enumerate() {
            if e.dim() != (d.observations, d.states) {
                return bad(format!("emission[{}] has shape {:?}", hi + 1, e.dim()));
            }
            for (s, col) in e.columns().into_iter().enumerate() {
                check_distribution(col, tol)
                    .map_err(|e| Error::InvalidModel(format!("emission[{}] column {s}: {e}", hi + 1)))?;
            }
        }

        if self.reward.len() != d.horizon {
            return bad(format!(
                "expected rewards for {} steps, got {}",
                d.horizon,
                self.reward.len()
            ));
        }
        for (hi, r) in self.reward.iter().enumerate() {
            if r.len() != d.observations {
                return bad(format!("reward[{}] has length {}", hi + 1, r.len()));
            }
            if r.iter().any(|&x| !(x >= T::zero() && x <= T::one())) {
                return bad(format!("reward[{}] has entries outside [0, 1]", hi + 1));
            }
        }

        if self.mu1.len() != d.states {
            return bad(format!("mu1 has length {}", self.mu1.len()));
        }
        check_distribution(self.mu1.view(), tol).map_err(|e| Error::InvalidModel(format!("mu1: {e}")))?;
        Ok(())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }
    pub fn states(&self) -> usize {
        self.dims.states
    }
    pub fn actions(&self) -> usize {
        self.dims.actions
    }
    pub fn observations(&self) -> usize {
        self.dims.observations
    }
    pub fn horizon(&self) -> usize {
        self.dims.horizon
    }
    pub fn future_len(&self) -> usize {
        self.dims.future
    }
    pub fn past_len(&self) -> usize {
        self.dims.past
    }

    /// Row-stochastic `T_h(a)` with entry `[s, s']`.
    pub fn transition(&self, h: usize, a: usize) -> ArrayView2<'_, T> {
        self.transition[h - 1][a].view()
    }

    /// `O_h` with entry `[o, s]`.
    pub fn emission(&self, h: usize) -> ArrayView2<'_, T> {
        self.emission[h - 1].view()
    }

    pub fn reward(&self, h: usize) -> ArrayView1<'_, T> {
        self.reward[h - 1].view()
    }

    pub fn mu1(&self) -> ArrayView1<'_, T> {
        self.mu1.view()
    }

    pub fn check_transition_step(&self, h: usize) -> Result<()> {
        step_in(h, 1, self.dims.last_transition_step())
    }

    pub fn check_emission_step(&self, h: usize) -> Result<()> {
        step_in(h, 1, self.dims.last_emission_step())
    }

    /// State law after acting: `v' = T_h(a)^T v`.
    pub fn propagate(&self, h: usize, a: usize, v: ArrayView1<'_, T>) -> Array1<T> {
        self.transition[h - 1][a].t().dot(&v)
    }

    /// `diag(O_h(o | .)) v`.
    pub fn weight_by_emission(&self, h: usize, o: usize, v: ArrayView1<'_, T>) -> Array1<T> {
        let e = self.emission[h - 1].row(o);
        &v * &e
    }

    /// Returns a copy with a different window configuration, keeping the
    /// kernels for steps that stay in range. Fails if the new layout needs
    /// kernels that are not stored.
    pub fn with_windows(&self, future: usize, past: usize) -> Result<Self> {
        let mut dims = self.dims;
        dims.future = future;
        dims.past = past;
        if dims.last_emission_step() > self.emission.len() {
            return Err(Error::InvalidModel(format!(
                "future window {future} needs kernels beyond stored step {}",
                self.emission.len()
            )));
        }
        TabularPomdp::new(
            dims,
            self.transition[..dims.last_transition_step()].to_vec(),
            self.emission[..dims.last_emission_step()].to_vec(),
            self.reward.clone(),
            self.mu1.clone(),
        )
    }

    /// Replaces the reward vectors.
    pub fn with_rewards(&self, reward: Vec<Array1<T>>) -> Result<Self> {
        TabularPomdp::new(
            self.dims,
            self.transition.clone(),
            self.emission.clone(),
            reward,
            self.mu1.clone(),
        )
    }

    /// Converts every kernel to another scalar type.
    pub fn cast<U: Real>(&self) -> TabularPomdp<U> {
        let c2 = |m: &Array2<T>| m.mapv(|x| U::lit(x.as_f64()));
        let c1 = |m: &Array1<T>| m.mapv(|x| U::lit(x.as_f64()));
        TabularPomdp {
            dims: self.dims,
            transition: self.transition.iter().map(|v| v.iter().map(c2).collect()).collect(),
            emission: self.emission.iter().map(c2).collect(),
            reward: self.reward.iter().map(c1).collect(),
            mu1: c1(&self.mu1),
        }
    }
}

pub(crate) fn step_in(h: usize, min: usize, max: usize) -> Result<()> {
    if h < min || h > max {
        Err(Error::StepOutOfRange { step: h, min, max })
    } else {
        Ok(())
    }
}

fn check_distribution<T: Real>(v: ArrayView1<'_, T>, tol: T) -> std::result::Result<(), String> {
    if let Some(x) = v.iter().find(|x| !(**x >= T::zero())) {
        return Err(format!("negative or non-finite entry {x}"));
    }
    let s: T = v.iter().copied().sum();
    if (s - T::one()).abs() > tol {
        return Err(format!("sums to {s}, not 1"));
    }
    Ok(())
}

/// Low-rank factorization `P_h(s' | s, a) = sum_q psi_h[s', q] * phi_h[q, (s, a)]`.
///
/// The column index of `phi` for the pair `(s, a)` is `s * A + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactors<T> {
    pub rank: usize,
    /// `[h-1]`, shape `S x d`; column `q` is the next-state law given factor `q`.
    pub psi: Vec<Array2<T>>,
    /// `[h-1]`, shape `d x (S*A)`; column `(s, a)` is the factor law.
    pub phi: Vec<Array2<T>>,
}

impl<T: Real> LowRankFactors<T> {
    /// `psi_h * phi_h[:, (., a)]` as a row-stochastic `[s, s']` matrix.
    pub fn reconstruct(&self, h: usize, a: usize, actions: usize) -> Array2<T> {
        let psi = &self.psi[h - 1];
        let phi = &self.phi[h - 1];
        let s_count = psi.nrows();
        let mut t = Array2::<T>::zeros((s_count, s_count));
        for s in 0..s_count {
            let col = phi.column(s * actions + a);
            let next = psi.dot(&col);
            t.row_mut(s).assign(&next);
        }
        t
    }

    /// Checks the factor invariants and that they reproduce the model's kernels.
    pub fn validate_against(&self, model: &TabularPomdp<T>) -> Result<()> {
        let d = model.dims();
        let tol = T::prob_tol();
        if self.psi.len() != d.last_transition_step() || self.phi.len() != self.psi.len() {
            return Err(Error::InvalidModel("factor step count mismatch".into()));
        }
        for hi in 0..self.psi.len() {
            let psi = &self.psi[hi];
            let phi = &self.phi[hi];
            if psi.dim() != (d.states, self.rank) || phi.dim() != (self.rank, d.states * d.actions) {
                return Err(Error::InvalidModel(format!("factor shapes wrong at step {}", hi + 1)));
            }
            for c in psi.columns().into_iter().chain(phi.columns()) {
                check_distribution(c, tol)
                    .map_err(|e| Error::InvalidModel(format!("factor at step {}: {e}", hi + 1)))?;
            }
            for a in 0..d.actions {
                let rec = self.reconstruct(hi + 1, a, d.actions);
                let err = crate::linalg::max_abs_diff(rec.view(), model.transition(hi + 1, a));
                if err > tol {
                    return Err(Error::InvalidModel(format!(
                        "factors do not reproduce transition at step {}, action {a} (error {err})",
                        hi + 1
                    )));
                }
            }
        }
        Ok(())
    }
}
