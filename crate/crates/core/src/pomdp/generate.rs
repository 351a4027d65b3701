//! Random low-rank models.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_distr::Exp1;

use super::model::{Dims, LowRankFactors, TabularPomdp};
use super::sim::SimRng;
use crate::error::{Error, Result};
use crate::linalg::column_rank_margin;
use crate::operators::{forward_emission, DEFAULT_ROW_CAP, SV_FLOOR};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    /// Bottleneck rank `d`.
    pub rank: usize,
    pub horizon: usize,
    pub future: usize,
    pub past: usize,
}

impl GenSpec {
    pub fn dims(&self) -> Dims {
        Dims {
            states: self.states,
            actions: self.actions,
            observations: self.observations,
            horizon: self.horizon,
            future: self.future,
            past: self.past,
        }
    }
}

/// Uniform draw from the simplex: normalized unit exponentials.
fn dirichlet_ones<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// Matrix whose columns are independent Dirichlet(1) draws.
fn stochastic_columns<T: Real, R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Array2<T> {
    let mut m = Array2::zeros((rows, cols));
    for j in 0..cols {
        for (i, p) in dirichlet_ones(rng, rows).into_iter().enumerate() {
            m[[i, j]] = T::lit(p);
        }
    }
    m
}

fn draw_candidate<T: Real>(spec: &GenSpec, rng: &mut SimRng) -> Result<(TabularPomdp<T>, LowRankFactors<T>)> {
    let d = spec.dims();
    let (s, a, o) = (d.states, d.actions, d.observations);
    let mut psi = Vec::with_capacity(d.last_transition_step());
    let mut phi = Vec::with_capacity(d.last_transition_step());
    for _ in 0..d.last_transition_step() {
        phi.push(stochastic_columns::<T, _>(rng, spec.rank, s * a));
        psi.push(stochastic_columns::<T, _>(rng, s, spec.rank));
    }
    let factors = LowRankFactors {
        rank: spec.rank,
        psi,
        phi,
    };
    let transition = (1..=d.last_transition_step())
        .map(|h| (0..a).map(|act| factors.reconstruct(h, act, a)).collect())
        .collect();
    let emission = (0..d.last_emission_step())
        .map(|_| stochastic_columns::<T, _>(rng, o, s))
        .collect();
    let mu1 = Array1::from_iter(dirichlet_ones(rng, s).into_iter().map(T::lit));
    let reward = (0..d.horizon)
        .map(|_| (0..o).map(|_| T::lit(rng.random::<f64>())).collect())
        .collect();
    let model = TabularPomdp::new(d, transition, emission, reward, mu1)?;
    Ok((model, factors))
}

/// Smallest singular value of `U_h` over `h = 1..=H`, with the step attaining it.
pub fn weakest_forward_emission<T: Real>(model: &TabularPomdp<T>) -> Result<(usize, f64)> {
    let mut worst = (1, f64::INFINITY);
    for h in 1..=model.horizon() {
        let u = forward_emission(model, h, model.future_len(), DEFAULT_ROW_CAP)?;
        let smin = column_rank_margin(u.view()).as_f64();
        if smin < worst.1 {
            worst = (h, smin);
        }
    }
    Ok(worst)
}

/// Draws a model whose transitions factor through a rank-`d` bottleneck,
/// redrawing until every forward emission `U_1..U_H` has smallest singular
/// value at least `1e-6`.
///
/// All factor columns, emission columns and `mu1` are Dirichlet(1);
/// rewards are uniform on `[0, 1]`. The output depends only on `seed`.
pub fn generate_lowrank_pomdp<T: Real>(
    spec: &GenSpec,
    seed: u64,
    max_tries: usize,
) -> Result<(TabularPomdp<T>, LowRankFactors<T>)> {
    if spec.rank == 0 || spec.rank > spec.states {
        return Err(Error::Config(format!(
            "rank {} must lie in 1..={}",
            spec.rank, spec.states
        )));
    }
    if max_tries == 0 {
        return Err(Error::Config("max_tries must be at least 1".into()));
    }
    let mut rng = SimRng::seed_from_u64(seed);
    let mut last = (1, 0.0);
    for _ in 0..max_tries {
        let (model, factors) = draw_candidate::<T>(spec, &mut rng)?;
        let (h, smin) = weakest_forward_emission(&model)?;
        if smin >= SV_FLOOR {
            return Ok((model, factors));
        }
        last = (h, smin);
    }
    Err(Error::SufficiencyRejection {
        tries: max_tries,
        step: last.0,
        sigma_min: last.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen_spec() -> GenSpec {
        GenSpec {
            states: 4,
            actions: 2,
            observations: 3,
            rank: 2,
            horizon: 3,
            future: 1,
            past: 1,
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let (a, fa) = generate_lowrank_pomdp::<f64>(&gen_spec(), 7, 100).unwrap();
        let (b, fb) = generate_lowrank_pomdp::<f64>(&gen_spec(), 7, 100).unwrap();
        assert_eq!(a, b);
        assert_eq!(fa, fb);
        let (c, _) = generate_lowrank_pomdp::<f64>(&gen_spec(), 8, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn factors_reproduce_transitions() {
        let (m, f) = generate_lowrank_pomdp::<f64>(&gen_spec(), 3, 100).unwrap();
        f.validate_against(&m).unwrap();
    }

    #[test]
    fn full_rank_never_rejects_on_rank() {
        let mut s = gen_spec();
        s.rank = s.states;
        assert!(generate_lowrank_pomdp::<f64>(&s, 1, 100).is_ok());
    }

    #[test]
    fn impossible_sufficiency_reports_failure() {
        let s = GenSpec {
            states: 4,
            actions: 2,
            observations: 2,
            rank: 2,
            horizon: 2,
            future: 0,
            past: 0,
        };
        match generate_lowrank_pomdp::<f64>(&s, 0, 3) {
            Err(Error::SufficiencyRejection {
                tries: 3, sigma_min, ..
            }) => {
                assert!(sigma_min < SV_FLOOR)
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }
}
