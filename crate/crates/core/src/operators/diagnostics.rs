//! Sufficiency constants and the performance-difference bound.

use ndarray::{Array1, Array2};

use super::bellman::OperatorSet;
use crate::error::{Error, Result};
use crate::linalg::{norm_1_to_1, right_inverse};
use crate::pomdp::policy::decode_digits;
use crate::pomdp::{Behavior, Policy, TabularPomdp};
use crate::scalar::Real;

/// `max_h ||U_h^+||_{1->1}`.
pub fn compute_nu<T: Real>(ops: &OperatorSet<T>) -> T {
    ops.nu()
}

/// Past-sufficiency constant at step `h` for a window of `past`
/// observations.
///
/// For each action window `a_{h-ell}..a_{h-2}` the reverse emission has
/// entry `[s_{h-1}, o_{h-ell}..o_{h-1}]` equal to the joint law under
/// `behavior` before the window. Normalizing its rows by the state marginal
/// gives `C`; the result is the largest `||(C^+)^T||_{1->1}` over windows,
/// with `C^+` the right inverse.
pub fn compute_gamma<T: Real>(
    model: &TabularPomdp<T>,
    behavior: Behavior<'_>,
    h: usize,
    past: usize,
    sv_floor: T,
) -> Result<T> {
    let min_h = (past + 1).max(2);
    if h < min_h || h > model.dims().last_transition_step() {
        return Err(Error::StepOutOfRange {
            step: h,
            min: min_h,
            max: model.dims().last_transition_step(),
        });
    }
    let (s_count, o_count, a_count) = (model.states(), model.observations(), model.actions());
    let start = if past == 0 { h - 1 } else { h - past };
    let start_law = crate::pomdp::state_marginals(model, behavior, start)?[start - 1].clone();
    let window_actions = past.saturating_sub(1);
    let cols = o_count.pow(past as u32);

    let mut gamma = T::zero();
    for wi in 0..a_count.pow(window_actions as u32) {
        let acts = decode_digits(wi, a_count, window_actions);
        let mut rev = Array2::<T>::zeros((s_count, cols));
        for col in 0..cols {
            let obs = decode_digits(col, o_count, past);
            let mut v = start_law.clone();
            for (i, &o) in obs.iter().enumerate() {
                let step = start + i;
                v = model.weight_by_emission(step, o, v.view());
                if i + 1 < past {
                    v = model.propagate(step, acts[i], v.view());
                }
            }
            rev.column_mut(col).assign(&v);
        }
        let marginal: Array1<T> = rev.sum_axis(ndarray::Axis(1));
        if marginal.iter().any(|&m| !(m > T::zero())) {
            return Err(Error::PastSufficiencyUndefined { step: h - 1 });
        }
        for (mut row, &m) in rev.rows_mut().into_iter().zip(marginal.iter()) {
            row /= m;
        }
        let c_dag = right_inverse(rev.view(), sv_floor).map_err(|e| match e {
            Error::RankDeficient { sigma_min, .. } => Error::PastSufficiencyViolated { step: h, sigma_min },
            other => other,
        })?;
        gamma = gamma.max(norm_1_to_1(c_dag.t()));
    }
    Ok(gamma)
}

/// Largest [`compute_gamma`] over every step whose past window lies inside
/// the episode, or `None` when no step qualifies.
pub fn compute_gamma_all<T: Real>(model: &TabularPomdp<T>, behavior: Behavior<'_>, sv_floor: T) -> Result<Option<T>> {
    let past = model.past_len();
    let mut best: Option<T> = None;
    for h in (past + 1).max(2)..=model.horizon() {
        let g = compute_gamma(model, behavior, h, past, sv_floor)?;
        best = Some(best.map_or(g, |b| b.max(g)));
    }
    Ok(best)
}

/// Both sides of the performance-difference inequality for one policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceBound<T> {
    /// `|V^pi(theta) - V^pi(theta')|`.
    pub gap: T,
    /// `nu sqrt(S) H` times the telescoped sum over steps `0..H-1`.
    pub telescoped: T,
    /// Stepwise right-hand side: steps `2..H-1` along the policy, step 1
    /// summed over every first action, and the initial-window difference.
    pub stated: T,
}

/// Evaluates the performance-difference inequality between two operator
/// sets (sharing dimensions and rewards) for `policy`, with `nu` the larger
/// of the two models' constants.
pub fn performance_difference<T: Real>(
    theta: &OperatorSet<T>,
    theta_prime: &OperatorSet<T>,
    rewards: &[Array1<T>],
    policy: &Policy,
) -> Result<PerformanceBound<T>> {
    let dims = theta.dims();
    if dims != theta_prime.dims() {
        return Err(Error::ShapeMismatch("operator sets have different dimensions".into()));
    }
    let gap = (theta.policy_value(rewards, policy)? - theta_prime.policy_value(rewards, policy)?).abs();
    let nu = theta.nu().max(theta_prime.nu());
    let scale = nu * T::lit(dims.states as f64).sqrt() * T::lit(dims.horizon as f64);

    let b_diff = l1(&(theta.b1() - theta_prime.b1()));
    // per_step[h-1] = sum over o_1..o_h of ||(B_h - B'_h)(a^pi_h, o_h) w_{h-1}||_1
    let mut per_step = vec![T::zero(); dims.horizon.saturating_sub(1)];
    let mut obs = Vec::with_capacity(dims.horizon);
    accumulate_steps(
        theta,
        theta_prime,
        policy,
        1,
        theta_prime.b1().clone(),
        &mut obs,
        &mut per_step,
    )?;

    let mut first_all_actions = T::zero();
    if dims.horizon >= 2 {
        for a in 0..dims.actions {
            for o in 0..dims.observations {
                let d = &theta.bellman(1, a, o) - &theta_prime.bellman(1, a, o);
                first_all_actions += l1(&d.dot(theta_prime.b1()));
            }
        }
    }

    let telescoped = scale * (b_diff + per_step.iter().copied().sum::<T>());
    let later: T = per_step.iter().skip(1).copied().sum();
    let stated = scale * (b_diff + first_all_actions + later);
    Ok(PerformanceBound {
        gap,
        telescoped,
        stated,
    })
}

fn accumulate_steps<T: Real>(
    theta: &OperatorSet<T>,
    theta_prime: &OperatorSet<T>,
    policy: &Policy,
    h: usize,
    w: Array1<T>,
    obs: &mut Vec<usize>,
    per_step: &mut [T],
) -> Result<()> {
    let dims = theta.dims();
    if h >= dims.horizon {
        return Ok(());
    }
    for o in 0..dims.observations {
        obs.push(o);
        let a = policy.act(h, obs, dims.observations)?;
        let d = &theta.bellman(h, a, o) - &theta_prime.bellman(h, a, o);
        per_step[h - 1] += l1(&d.dot(&w));
        let next = theta_prime.bellman(h, a, o).dot(&w);
        accumulate_steps(theta, theta_prime, policy, h + 1, next, obs, per_step)?;
        obs.pop();
    }
    Ok(())
}

fn l1<T: Real>(v: &Array1<T>) -> T {
    v.iter().map(|x| x.abs()).sum()
}
