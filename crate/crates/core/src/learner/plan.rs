//! Optimistic planning over a confidence set.

use ndarray::Array1;

use super::candidates::CandidateClass;
use crate::error::{Error, Result};
use crate::operators::OperatorSet;
use crate::pomdp::{exact_policy_value, Policy, PolicyClass, TabularPomdp};
use crate::scalar::Real;

/// Best `(policy, value)` per candidate, filled on first use. Candidate
/// models never change during a run, so each entry is computed once.
#[derive(Debug, Clone)]
pub struct PlanCache<T> {
    class: PolicyClass,
    cap: u128,
    best: Vec<Option<(Policy, T)>>,
}

impl<T: Real> PlanCache<T> {
    pub fn new(candidates: usize, class: PolicyClass, cap: u128) -> Self {
        PlanCache {
            class,
            cap,
            best: vec![None; candidates],
        }
    }

    pub fn policy_class(&self) -> PolicyClass {
        self.class
    }

    /// Best policy for candidate `i` under its own operators.
    pub fn best_for(&mut self, candidates: &CandidateClass<T>, i: usize) -> Result<&(Policy, T)> {
        if self.best[i].is_none() {
            let m = candidates.model(i);
            self.best[i] = Some(best_by_operators(m, candidates.ops(i), self.class, self.cap)?);
        }
        Ok(self.best[i].as_ref().expect("filled above"))
    }
}

/// Argmax over the class of the operator-product value; ties keep the first
/// policy in lexicographic order.
pub fn best_by_operators<T: Real>(
    model: &TabularPomdp<T>,
    ops: &OperatorSet<T>,
    class: PolicyClass,
    cap: u128,
) -> Result<(Policy, T)> {
    let rewards: Vec<Array1<T>> = (1..=model.horizon()).map(|h| model.reward(h).to_owned()).collect();
    let mut best: Option<(Policy, T)> = None;
    for p in class.enumerate(&model.dims(), cap)? {
        let v = ops.policy_value(&rewards, &p)?;
        match &best {
            Some((_, bv)) if v <= *bv + T::prob_tol() => {}
            _ => best = Some((p, v)),
        }
    }
    best.ok_or_else(|| Error::Config("empty policy class".into()))
}

/// Joint argmax of `V^pi(theta)` over policies and the candidates in `set`.
///
/// Returns the policy, the candidate attaining it and the planned value.
/// Ties go to the smaller candidate index, then the lexicographically first
/// policy.
pub fn optimistic_plan<T: Real>(
    candidates: &CandidateClass<T>,
    set: &[usize],
    cache: &mut PlanCache<T>,
) -> Result<(Policy, usize, T)> {
    let mut order = set.to_vec();
    order.sort_unstable();
    order.dedup();
    let mut best: Option<(Policy, usize, T)> = None;
    for i in order {
        if i >= candidates.len() {
            return Err(Error::IndexOutOfRange(format!("candidate {i}")));
        }
        let (p, v) = cache.best_for(candidates, i)?;
        match &best {
            Some((_, _, bv)) if *v <= *bv + T::prob_tol() => {}
            _ => best = Some((p.clone(), i, *v)),
        }
    }
    best.ok_or(Error::ConfidenceSetEmpty)
}

/// Value of the uniform mixture over `policies`: the mean of their exact values.
pub fn mixture_policy_value<T: Real>(policies: &[Policy], model: &TabularPomdp<T>) -> Result<T> {
    if policies.is_empty() {
        return Err(Error::Config("mixture needs at least one policy".into()));
    }
    let mut total = T::zero();
    for p in policies {
        total += exact_policy_value(model, p)?;
    }
    Ok(total / T::lit(policies.len() as f64))
}
