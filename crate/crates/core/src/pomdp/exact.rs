//! Brute-force inference oracle.
//!
//! Everything here is computed directly from the kernels, either by summing
//! over hidden-state paths or by forward filtering, and never touches the
//! operator algebra. Tests use it as the ground truth for the operator
//! identities.

use ndarray::Array1;

use super::model::TabularPomdp;
use super::policy::{decode_digits, Policy, PolicyClass};
use super::sim::Behavior;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Hard limit on `S^n * O^n` for the path-sum oracle.
const PATH_SUM_CAP: u128 = 200_000_000;

/// Law of `o_1..o_{n}` given actions `a_1..a_{n-1}` (`n = actions.len() + 1`),
/// as a table indexed big-endian in base `O`.
pub fn exact_trajectory_distribution<T: Real>(model: &TabularPomdp<T>, actions: &[usize]) -> Result<Vec<T>> {
    exact_window_distribution(model, 1, model.mu1().to_owned(), actions)
}

/// Law of `o_{start}..o_{start+n-1}` given the state law at `start` and the
/// actions in between, by explicit summation over hidden state paths.
pub fn exact_window_distribution<T: Real>(
    model: &TabularPomdp<T>,
    start: usize,
    start_law: Array1<T>,
    actions: &[usize],
) -> Result<Vec<T>> {
    let n = actions.len() + 1;
    let (s_count, o_count) = (model.states(), model.observations());
    let last = start + n - 1;
    if start == 0 || last > model.dims().last_emission_step() {
        return Err(Error::StepOutOfRange {
            step: last,
            min: 1,
            max: model.dims().last_emission_step(),
        });
    }
    if start_law.len() != s_count {
        return Err(Error::LengthMismatch("start law length".into()));
    }
    if let Some(&a) = actions.iter().find(|&&a| a >= model.actions()) {
        return Err(Error::IndexOutOfRange(format!("action {a}")));
    }
    let work = (s_count as u128)
        .saturating_pow(n as u32)
        .saturating_mul((o_count as u128).saturating_pow(n as u32));
    if work > PATH_SUM_CAP {
        return Err(Error::EnumerationTooLarge {
            count: work,
            cap: PATH_SUM_CAP,
        });
    }

    let table_len = o_count.pow(n as u32);
    let mut table = vec![T::zero(); table_len];
    for path_idx in 0..s_count.pow(n as u32) {
        let path = decode_digits(path_idx, s_count, n);
        let mut w = start_law[path[0]];
        for i in 0..n - 1 {
            w *= model.transition(start + i, actions[i])[[path[i], path[i + 1]]];
        }
        if w == T::zero() {
            continue;
        }
        for (obs_idx, slot) in table.iter_mut().enumerate() {
            let obs = decode_digits(obs_idx, o_count, n);
            let mut p = w;
            for i in 0..n {
                p *= model.emission(start + i)[[obs[i], path[i]]];
            }
            *slot += p;
        }
    }
    Ok(table)
}

/// `P(o_1..o_n | a_1..a_{n-1})` by forward filtering.
pub fn sequence_probability<T: Real>(model: &TabularPomdp<T>, obs: &[usize], actions: &[usize]) -> Result<T> {
    Ok(forward_joint(model, obs, actions)?.sum())
}

// Unnormalized filter `P(s_n, o_1..o_n | a)`.
fn forward_joint<T: Real>(model: &TabularPomdp<T>, obs: &[usize], actions: &[usize]) -> Result<Array1<T>> {
    if obs.is_empty() || actions.len() + 1 != obs.len() {
        return Err(Error::LengthMismatch(format!(
            "{} observations need {} actions, got {}",
            obs.len(),
            obs.len().saturating_sub(1),
            actions.len()
        )));
    }
    model.check_emission_step(obs.len())?;
    if obs.iter().any(|&o| o >= model.observations()) {
        return Err(Error::IndexOutOfRange("observation".into()));
    }
    if actions.iter().any(|&a| a >= model.actions()) {
        return Err(Error::IndexOutOfRange("action".into()));
    }
    let mut alpha = model.weight_by_emission(1, obs[0], model.mu1());
    for (i, &a) in actions.iter().enumerate() {
        let h = i + 1;
        let next = model.propagate(h, a, alpha.view());
        alpha = model.weight_by_emission(h + 1, obs[i + 1], next.view());
    }
    Ok(alpha)
}

/// Belief `P(s_h | o_1, a_1, ..., o_h)` by forward filtering.
pub fn exact_belief<T: Real>(model: &TabularPomdp<T>, obs: &[usize], actions: &[usize]) -> Result<Array1<T>> {
    let alpha = forward_joint(model, obs, actions)?;
    let z = alpha.sum();
    if !(z > T::zero()) {
        return Err(Error::UnreachableHistory);
    }
    Ok(alpha / z)
}

/// Actions the policy takes along an observation sequence `o_1..o_n`
/// (returns `a_1..a_{n-1}`).
pub fn policy_actions(policy: &Policy, obs: &[usize], observations: usize) -> Result<Vec<usize>> {
    (1..obs.len()).map(|h| policy.act(h, obs, observations)).collect()
}

/// `V^pi = sum_{o_1..o_H} P(o | a^pi) * sum_h r_h(o_h)` by full enumeration.
pub fn exact_policy_value<T: Real>(model: &TabularPomdp<T>, policy: &Policy) -> Result<T> {
    policy.validate(&model.dims())?;
    let (o_count, horizon) = (model.observations(), model.horizon());
    let mut value = T::zero();
    for idx in 0..o_count.pow(horizon as u32) {
        let obs = decode_digits(idx, o_count, horizon);
        let acts = policy_actions(policy, &obs, o_count)?;
        let p = sequence_probability(model, &obs, &acts)?;
        if p == T::zero() {
            continue;
        }
        let ret: T = obs.iter().enumerate().map(|(i, &o)| model.reward(i + 1)[o]).sum();
        value += p * ret;
    }
    Ok(value)
}

/// Default cap on the number of enumerated policies.
pub const POLICY_ENUMERATION_CAP: u128 = 10_000_000;

/// Argmax of [`exact_policy_value`] over a policy class.
///
/// Policies are visited in lexicographic order of their encoding and a later
/// policy only replaces the incumbent when it is better by more than the
/// scalar's probability tolerance, so ties resolve to the smallest encoding.
pub fn optimal_policy_bruteforce<T: Real>(
    model: &TabularPomdp<T>,
    class: PolicyClass,
    cap: u128,
) -> Result<(Policy, T)> {
    let mut best: Option<(Policy, T)> = None;
    for p in class.enumerate(&model.dims(), cap)? {
        let v = exact_policy_value(model, &p)?;
        match &best {
            Some((_, bv)) if v <= *bv + T::prob_tol() => {}
            _ => best = Some((p, v)),
        }
    }
    best.ok_or_else(|| Error::Config("empty policy class".into()))
}

/// Marginal law of `s_h` for `h = 1..=upto` when acting with `behavior`.
pub fn state_marginals<T: Real>(
    model: &TabularPomdp<T>,
    behavior: Behavior<'_>,
    upto: usize,
) -> Result<Vec<Array1<T>>> {
    model.check_transition_step(upto.saturating_sub(1).max(1))?;
    let mut out = vec![Array1::zeros(model.states()); upto];
    if upto == 0 {
        return Ok(out);
    }
    match behavior {
        Behavior::UniformRandom => {
            let inv_a = T::one() / T::lit(model.actions() as f64);
            out[0] = model.mu1().to_owned();
            for h in 1..upto {
                let mut next = Array1::zeros(model.states());
                for a in 0..model.actions() {
                    next = next + model.propagate(h, a, out[h - 1].view());
                }
                out[h] = next * inv_a;
            }
        }
        Behavior::Deterministic(policy) => {
            let mut obs = Vec::with_capacity(upto);
            accumulate_marginals(model, policy, model.mu1().to_owned(), 1, upto, &mut obs, &mut out)?;
        }
    }
    Ok(out)
}

// `law` is P(s_h, o_1..o_{h-1}) along the current history prefix.
fn accumulate_marginals<T: Real>(
    model: &TabularPomdp<T>,
    policy: &Policy,
    law: Array1<T>,
    h: usize,
    upto: usize,
    obs: &mut Vec<usize>,
    out: &mut [Array1<T>],
) -> Result<()> {
    out[h - 1] = &out[h - 1] + &law;
    if h == upto {
        return Ok(());
    }
    for o in 0..model.observations() {
        let w = model.weight_by_emission(h, o, law.view());
        if w.iter().all(|&x| x == T::zero()) {
            continue;
        }
        obs.push(o);
        let a = policy.act(h, obs, model.observations())?;
        let next = model.propagate(h, a, w.view());
        accumulate_marginals(model, policy, next, h + 1, upto, obs, out)?;
        obs.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::fixtures::{fo2, uniform_model, uninformative};

    #[test]
    fn fo2_trajectory_table() {
        let m = fo2::<f64>();
        let t = exact_trajectory_distribution(&m, &[1]).unwrap();
        assert_eq!(t, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn uniform_model_is_equiprobable() {
        let m = uniform_model::<f64>(3, 2, 2, 3);
        let t = exact_trajectory_distribution(&m, &[1, 0]).unwrap();
        assert_eq!(t.len(), 8);
        for p in t {
            assert!((p - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn window_out_of_range() {
        let m = fo2::<f64>();
        assert!(exact_trajectory_distribution(&m, &[0; 5]).is_err());
    }

    #[test]
    fn fo2_value_and_optimum() {
        let m = fo2::<f64>();
        let v = exact_policy_value(&m, &Policy::OpenLoop { actions: vec![1, 0] }).unwrap();
        assert_eq!(v, 1.0);
        let (p, v) = optimal_policy_bruteforce(&m, PolicyClass::OpenLoop, 100).unwrap();
        assert_eq!(p, Policy::OpenLoop { actions: vec![1, 0] });
        assert_eq!(v, 1.0);
    }

    #[test]
    fn zero_rewards_zero_value() {
        let m = fo2::<f64>();
        let zero = m.with_rewards(vec![Array1::zeros(2), Array1::zeros(2)]).unwrap();
        let (p, v) = optimal_policy_bruteforce(&zero, PolicyClass::HistoryTable, 100).unwrap();
        assert_eq!(v, 0.0);
        assert!(p.encode().iter().all(|&a| a == 0));
    }

    #[test]
    fn fo2_belief() {
        let m = fo2::<f64>();
        let b = exact_belief(&m, &[0], &[]).unwrap();
        assert_eq!(b.to_vec(), vec![1.0, 0.0]);
        assert!(matches!(exact_belief(&m, &[1], &[]), Err(Error::UnreachableHistory)));
    }

    #[test]
    fn uninformative_emission_belief_is_prior() {
        let m = uninformative::<f64>();
        let b = exact_belief(&m, &[1], &[]).unwrap();
        for (x, y) in b.iter().zip(m.mu1().iter()) {
            assert!((x - y).abs() < 1e-15);
        }
    }
}
