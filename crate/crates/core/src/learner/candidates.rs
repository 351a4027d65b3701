//! Finite candidate classes and the confidence-set test.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::estimation::{empirical_bellman_loss, initial_window_error, DensityEstimates};
use crate::operators::{OperatorConfig, OperatorSet};
use crate::pomdp::{Dims, LowRankFactors, SimRng, TabularPomdp};
use crate::scalar::Real;

/// Candidate models sharing one set of dimensions, each with its operators.
#[derive(Debug, Clone)]
pub struct CandidateClass<T> {
    models: Vec<TabularPomdp<T>>,
    ops: Vec<OperatorSet<T>>,
    true_index: Option<usize>,
}

impl<T: Real> CandidateClass<T> {
    /// Fails if the list is empty, dimensions differ, or a candidate's
    /// operators cannot be built.
    pub fn new(models: Vec<TabularPomdp<T>>, true_index: Option<usize>, cfg: &OperatorConfig) -> Result<Self> {
        let Some(first) = models.first() else {
            return Err(Error::Config("candidate class is empty".into()));
        };
        let dims = first.dims();
        if let Some(i) = models.iter().position(|m| m.dims() != dims) {
            return Err(Error::ShapeMismatch(format!(
                "candidate {i} has dimensions {:?}, expected {dims:?}",
                models[i].dims()
            )));
        }
        if true_index.is_some_and(|i| i >= models.len()) {
            return Err(Error::IndexOutOfRange(format!("true index {true_index:?}")));
        }
        let ops = models
            .iter()
            .map(|m| OperatorSet::build(m, cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(CandidateClass {
            models,
            ops,
            true_index,
        })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn dims(&self) -> Dims {
        self.models[0].dims()
    }

    pub fn model(&self, i: usize) -> &TabularPomdp<T> {
        &self.models[i]
    }

    pub fn ops(&self, i: usize) -> &OperatorSet<T> {
        &self.ops[i]
    }

    pub fn models(&self) -> &[TabularPomdp<T>] {
        &self.models
    }

    pub fn true_index(&self) -> Option<usize> {
        self.true_index
    }

    /// Largest `nu` over the class.
    pub fn nu(&self) -> T {
        self.ops.iter().map(|o| o.nu()).fold(T::zero(), T::max)
    }
}

/// `max(||b_1 - b1_hat||_1, max_h L_h)` for one candidate.
pub fn candidate_score<T: Real>(ops: &OperatorSet<T>, est: &DensityEstimates<T>) -> Result<T> {
    let mut score = initial_window_error(ops, est);
    for h in 1..=est.dims.horizon {
        score = score.max(empirical_bellman_loss(ops, est, h)?);
    }
    Ok(score)
}

/// Indices whose score is at most `beta_t / sqrt(t)`, with every score.
pub fn build_confidence_set<T: Real>(
    class: &CandidateClass<T>,
    est: &DensityEstimates<T>,
    beta_t: f64,
    t: usize,
) -> Result<(Vec<usize>, Vec<T>)> {
    if t == 0 {
        return Err(Error::NoSamples);
    }
    let threshold = super::beta::confidence_threshold(beta_t, t);
    let scores = class
        .ops
        .iter()
        .map(|ops| candidate_score(ops, est))
        .collect::<Result<Vec<_>>>()?;
    let set = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| s.as_f64() <= threshold)
        .map(|(i, _)| i)
        .collect();
    Ok((set, scores))
}

fn dirichlet_ones(rng: &mut SimRng, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

fn mix_lanes<T: Real>(m: &mut Array2<T>, by_column: bool, eps: f64, rng: &mut SimRng) {
    let lanes = if by_column { m.columns_mut() } else { m.rows_mut() };
    for mut lane in lanes {
        let noise = dirichlet_ones(rng, lane.len());
        for (x, n) in lane.iter_mut().zip(noise) {
            *x = T::lit((1.0 - eps) * x.as_f64() + eps * n);
        }
    }
}

fn mix_vector<T: Real>(v: &Array1<T>, eps: f64, rng: &mut SimRng) -> Array1<T> {
    let noise = dirichlet_ones(rng, v.len());
    v.iter()
        .zip(noise)
        .map(|(&x, n)| T::lit((1.0 - eps) * x.as_f64() + eps * n))
        .collect()
}

/// Kernels of a model as owned vectors, in constructor order.
struct Kernels<T> {
    transition: Vec<Vec<Array2<T>>>,
    emission: Vec<Array2<T>>,
    reward: Vec<Array1<T>>,
    mu1: Array1<T>,
}

impl<T: Real> Kernels<T> {
    fn of(model: &TabularPomdp<T>) -> Self {
        let d = model.dims();
        Kernels {
            transition: (1..=d.last_transition_step())
                .map(|h| (0..d.actions).map(|a| model.transition(h, a).to_owned()).collect())
                .collect(),
            emission: (1..=d.last_emission_step())
                .map(|h| model.emission(h).to_owned())
                .collect(),
            reward: (1..=d.horizon).map(|h| model.reward(h).to_owned()).collect(),
            mu1: model.mu1().to_owned(),
        }
    }

    fn build(self, dims: Dims) -> Result<TabularPomdp<T>> {
        TabularPomdp::new(dims, self.transition, self.emission, self.reward, self.mu1)
    }
}

fn perturb_once<T: Real>(
    truth: &TabularPomdp<T>,
    factors: Option<&LowRankFactors<T>>,
    eps: f64,
    rng: &mut SimRng,
) -> Result<TabularPomdp<T>> {
    let d = truth.dims();
    let mut k = Kernels::of(truth);
    match factors {
        Some(f) => {
            let mut f = f.clone();
            for (psi, phi) in f.psi.iter_mut().zip(f.phi.iter_mut()) {
                mix_lanes(psi, true, eps, rng);
                mix_lanes(phi, true, eps, rng);
            }
            for h in 1..=d.last_transition_step() {
                for a in 0..d.actions {
                    k.transition[h - 1][a] = f.reconstruct(h, a, d.actions);
                }
            }
        }
        None => {
            for per_step in k.transition.iter_mut() {
                for m in per_step.iter_mut() {
                    mix_lanes(m, false, eps, rng);
                }
            }
        }
    }
    for e in k.emission.iter_mut() {
        mix_lanes(e, true, eps, rng);
    }
    k.mu1 = mix_vector(&k.mu1, eps, rng);
    k.build(d)
}

/// `truth` at index 0 followed by `count` perturbed copies.
///
/// Each copy mixes every kernel column (and, when `factors` are given, every
/// factor column instead of the transition rows, so the copy keeps rank `d`)
/// with weight `strength` against a fresh Dirichlet(1) draw. Rewards are
/// shared with `truth`. Copies whose operators cannot be built are redrawn up
/// to `max_tries` times each.
pub fn perturbed_class<T: Real>(
    truth: &TabularPomdp<T>,
    factors: Option<&LowRankFactors<T>>,
    count: usize,
    strength: f64,
    seed: u64,
    max_tries: usize,
    cfg: &OperatorConfig,
) -> Result<CandidateClass<T>> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::Config(format!(
            "perturbation strength {strength} outside [0, 1]"
        )));
    }
    let mut rng = SimRng::seed_from_u64(seed);
    let mut models = vec![truth.clone()];
    for i in 0..count {
        let mut last_err = None;
        for _ in 0..max_tries.max(1) {
            let m = perturb_once(truth, factors, strength, &mut rng)?;
            match OperatorSet::build(&m, cfg) {
                Ok(_) => {
                    models.push(m);
                    last_err = None;
                    break;
                }
                Err(e) => last_err = Some(e),
            }
        }
        if let Some(e) = last_err {
            return Err(Error::Config(format!("perturbed candidate {}: {e}", i + 1)));
        }
    }
    CandidateClass::new(models, Some(0), cfg)
}

/// One transition entry to sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelEntry {
    pub step: usize,
    pub action: usize,
    pub from: usize,
    pub to: usize,
}

/// Copies of `base` with `P_step(to | from, action)` set to each value; the
/// rest of the row is rescaled to keep it stochastic. A row that puts all its
/// mass on `to` spreads the remainder uniformly.
pub fn grid_class<T: Real>(
    base: &TabularPomdp<T>,
    entry: KernelEntry,
    values: &[f64],
    true_index: Option<usize>,
    cfg: &OperatorConfig,
) -> Result<CandidateClass<T>> {
    let d = base.dims();
    base.check_transition_step(entry.step)?;
    if entry.action >= d.actions || entry.from >= d.states || entry.to >= d.states {
        return Err(Error::IndexOutOfRange(format!("{entry:?}")));
    }
    let mut models = Vec::with_capacity(values.len());
    for &v in values {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Config(format!("grid value {v} outside [0, 1]")));
        }
        let mut k = Kernels::of(base);
        let m = &mut k.transition[entry.step - 1][entry.action];
        let mut row: Vec<f64> = m.row(entry.from).iter().map(|x| x.as_f64()).collect();
        let rest: f64 = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != entry.to)
            .map(|(_, x)| x)
            .sum();
        for (j, x) in row.iter_mut().enumerate() {
            *x = if j == entry.to {
                v
            } else if rest > 0.0 {
                *x / rest * (1.0 - v)
            } else {
                (1.0 - v) / (d.states - 1).max(1) as f64
            };
        }
        for (j, x) in row.into_iter().enumerate() {
            m[[entry.from, j]] = T::lit(x);
        }
        models.push(k.build(d)?);
    }
    CandidateClass::new(models, true_index, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::exact_densities;
    use crate::pomdp::fixtures::fo2;
    use crate::pomdp::{generate_lowrank_pomdp, Behavior, GenSpec};

    fn gen_spec() -> GenSpec {
        GenSpec {
            states: 3,
            actions: 2,
            observations: 3,
            rank: 2,
            horizon: 2,
            future: 1,
            past: 1,
        }
    }

    #[test]
    fn truth_with_exact_densities_has_zero_score() {
        let (m, _) = generate_lowrank_pomdp::<f64>(&gen_spec(), 2, 100).unwrap();
        let class = CandidateClass::new(vec![m.clone()], Some(0), &OperatorConfig::default()).unwrap();
        let est = exact_densities(&m, class.ops(0), Behavior::UniformRandom).unwrap();
        let (set, scores) = build_confidence_set(&class, &est, 1e-9, 1).unwrap();
        assert_eq!(set, vec![0]);
        assert!(scores[0] < 1e-12);
    }

    #[test]
    fn infinite_beta_keeps_everything() {
        let (m, f) = generate_lowrank_pomdp::<f64>(&gen_spec(), 2, 100).unwrap();
        let class = perturbed_class(&m, Some(&f), 3, 0.5, 9, 20, &OperatorConfig::default()).unwrap();
        let est = exact_densities(&m, class.ops(0), Behavior::UniformRandom).unwrap();
        let (set, _) = build_confidence_set(&class, &est, f64::INFINITY, 5).unwrap();
        assert_eq!(set, vec![0, 1, 2, 3]);
    }

    #[test]
    fn perturbed_copies_keep_rank_and_differ() {
        let (m, f) = generate_lowrank_pomdp::<f64>(&gen_spec(), 4, 100).unwrap();
        let class = perturbed_class(&m, Some(&f), 2, 0.3, 1, 20, &OperatorConfig::default()).unwrap();
        assert_eq!(class.len(), 3);
        assert_eq!(class.model(0), &m);
        for i in 1..3 {
            assert_ne!(class.model(i), &m);
            let stacked = ndarray::concatenate(
                ndarray::Axis(0),
                &[class.model(i).transition(1, 0), class.model(i).transition(1, 1)],
            )
            .unwrap();
            assert_eq!(crate::linalg::Svd::new(stacked.view()).rank(1e-9), 2);
        }
        let again = perturbed_class(&m, Some(&f), 2, 0.3, 1, 20, &OperatorConfig::default()).unwrap();
        assert_eq!(again.models(), class.models());
    }

    #[test]
    fn grid_rescales_row() {
        let m = fo2::<f64>();
        let entry = KernelEntry {
            step: 1,
            action: 0,
            from: 0,
            to: 1,
        };
        let class = grid_class(&m, entry, &[0.0, 0.25], Some(0), &OperatorConfig::default()).unwrap();
        assert_eq!(class.model(0), &m);
        let t = class.model(1).transition(1, 0);
        assert!((t[[0, 0]] - 0.75).abs() < 1e-15 && (t[[0, 1]] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mismatched_dims_rejected() {
        let a = fo2::<f64>();
        let b = crate::pomdp::fixtures::fo2_with::<f64>(3, 1, 1);
        assert!(matches!(
            CandidateClass::new(vec![a, b], None, &OperatorConfig::default()),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
