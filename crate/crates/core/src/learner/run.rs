//! The collect / estimate / confidence-set / plan loop.

use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::beta::{beta_schedule, confidence_threshold, BetaParams, BetaPreset};
use super::candidates::CandidateClass;
use super::plan::{optimistic_plan, PlanCache};
use crate::error::{Error, Result};
use crate::estimation::{collect_iteration, estimate_densities, DensityEstimates, TrajectoryDataset};
use crate::pomdp::{
    exact_policy_value, optimal_policy_bruteforce, Behavior, Dims, Policy, PolicyClass, TabularPomdp,
    POLICY_ENUMERATION_CAP,
};
use crate::scalar::Real;

fn default_preset() -> BetaPreset {
    BetaPreset::Tabular
}
fn default_one() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    0.05
}
fn default_cap() -> u64 {
    POLICY_ENUMERATION_CAP as u64
}

/// Learner settings. Model and candidate sources live with the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtcConfig {
    pub iterations: usize,
    pub seed: u64,
    #[serde(default = "default_preset")]
    pub beta: BetaPreset,
    #[serde(default = "default_one")]
    pub c_beta: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Defaults to `max(1, ln |candidates|)`.
    #[serde(default)]
    pub w_e: Option<f64>,
    /// Defaults to history tables for `H <= 3`, open-loop otherwise.
    #[serde(default)]
    pub policy_class: Option<PolicyClass>,
    /// Behavior for the first iteration; defaults to all-zero open-loop.
    #[serde(default)]
    pub initial_policy: Option<Policy>,
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    #[serde(default = "default_cap")]
    pub enumeration_cap: u64,
    /// Record wall-clock time per iteration. Off by default so logs stay
    /// reproducible.
    #[serde(default)]
    pub timing: bool,
}

impl EtcConfig {
    pub fn new(iterations: usize, seed: u64) -> Self {
        EtcConfig {
            iterations,
            seed,
            beta: default_preset(),
            c_beta: 1.0,
            delta: default_delta(),
            w_e: None,
            policy_class: None,
            initial_policy: None,
            checkpoints: Vec::new(),
            enumeration_cap: default_cap(),
            timing: false,
        }
    }

    pub fn resolved_class(&self, dims: &Dims) -> PolicyClass {
        self.policy_class.unwrap_or(if dims.horizon <= 3 {
            PolicyClass::HistoryTable
        } else {
            PolicyClass::OpenLoop
        })
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(self.c_beta >= 0.0) {
            return Err(Error::Config(format!("c_beta {} must be nonnegative", self.c_beta)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta {} outside (0, 1)", self.delta)));
        }
        Ok(())
    }
}

/// One log line per iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRow {
    pub t: usize,
    pub beta_t: f64,
    pub threshold: f64,
    pub confidence_set_size: usize,
    pub theta_star_in_set: bool,
    pub planned_value: f64,
    pub pi_t_true_value: f64,
    pub suboptimality: f64,
    pub mixture_suboptimality: f64,
    pub wall_ms: Option<f64>,
}

pub const LOG_HEADER: &str = "t,beta_t,threshold,confidence_set_size,theta_star_in_set,planned_value,pi_t_true_value,suboptimality,mixture_suboptimality,wall_ms";

impl LogRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.beta_t,
            self.threshold,
            self.confidence_set_size,
            u8::from(self.theta_star_in_set),
            self.planned_value,
            self.pi_t_true_value,
            self.suboptimality,
            self.mixture_suboptimality,
            self.wall_ms.map(|w| w.to_string()).unwrap_or_default()
        )
    }
}

pub fn write_log_csv<W: Write>(out: &mut W, rows: &[LogRow]) -> Result<()> {
    writeln!(out, "{LOG_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}

/// State of a run after `t` iterations.
#[derive(Debug, Clone)]
pub struct EtcRunState<T> {
    pub t: usize,
    pub data: TrajectoryDataset,
    pub estimates: Option<DensityEstimates<T>>,
    pub confidence_set: Vec<usize>,
    /// `pi^0 .. pi^t`.
    pub policies: Vec<Policy>,
    pub log: Vec<LogRow>,
    /// Score of every candidate at every iteration, `[t-1][candidate]`.
    /// Recorded before planning, so a failed iteration still has its scores.
    pub scores: Vec<Vec<f64>>,
    /// Confidence threshold at every iteration.
    pub thresholds: Vec<f64>,
    pub optimal_policy: Policy,
    pub optimal_value: f64,
}

/// Stepwise driver behind [`run_etc`].
pub struct EtcRun<'a, T> {
    truth: &'a TabularPomdp<T>,
    candidates: &'a CandidateClass<T>,
    cfg: EtcConfig,
    params: BetaParams,
    cache: PlanCache<T>,
    true_values: HashMap<Policy, f64>,
    value_sum: f64,
    state: EtcRunState<T>,
}

impl<'a, T: Real> EtcRun<'a, T> {
    pub fn new(truth: &'a TabularPomdp<T>, candidates: &'a CandidateClass<T>, cfg: &EtcConfig) -> Result<Self> {
        cfg.validate()?;
        let dims = truth.dims();
        if candidates.dims() != dims {
            return Err(Error::ShapeMismatch(
                "candidates and true model differ in dimensions".into(),
            ));
        }
        let class = cfg.resolved_class(&dims);
        let cap = cfg.enumeration_cap as u128;
        let initial = cfg
            .initial_policy
            .clone()
            .unwrap_or_else(|| Policy::zero(PolicyClass::OpenLoop, &dims));
        initial.validate(&dims)?;
        let (optimal_policy, v_star) = optimal_policy_bruteforce(truth, class, cap)?;
        let w_e = cfg.w_e.unwrap_or_else(|| (candidates.len() as f64).ln().max(1.0));
        let params = BetaParams {
            nu: candidates.nu().as_f64(),
            actions: dims.actions,
            observations: dims.observations,
            future: dims.future,
            past: dims.past,
            horizon: dims.horizon,
            iterations: cfg.iterations,
            w_e,
            delta: cfg.delta,
            c_beta: cfg.c_beta,
        };
        Ok(EtcRun {
            truth,
            candidates,
            params,
            cache: PlanCache::new(candidates.len(), class, cap),
            true_values: HashMap::new(),
            value_sum: 0.0,
            state: EtcRunState {
                t: 0,
                data: TrajectoryDataset::new(dims)?,
                estimates: None,
                confidence_set: (0..candidates.len()).collect(),
                policies: vec![initial],
                log: Vec::new(),
                scores: Vec::new(),
                thresholds: Vec::new(),
                optimal_policy,
                optimal_value: v_star.as_f64(),
            },
            cfg: cfg.clone(),
        })
    }

    pub fn beta_params(&self) -> &BetaParams {
        &self.params
    }

    pub fn state(&self) -> &EtcRunState<T> {
        &self.state
    }

    pub fn into_state(self) -> EtcRunState<T> {
        self.state
    }

    pub fn done(&self) -> bool {
        self.state.t >= self.cfg.iterations
    }

    fn true_value(&mut self, p: &Policy) -> Result<f64> {
        if let Some(&v) = self.true_values.get(p) {
            return Ok(v);
        }
        let v = exact_policy_value(self.truth, p)?.as_f64();
        self.true_values.insert(p.clone(), v);
        Ok(v)
    }

    /// Runs iteration `t + 1`; errors carry the iteration index.
    pub fn step(&mut self) -> Result<&LogRow> {
        let t = self.state.t + 1;
        self.step_inner(t)
            .map_err(|e| Error::Iteration { t, source: Box::new(e) })?;
        Ok(self.state.log.last().expect("row pushed"))
    }

    fn step_inner(&mut self, t: usize) -> Result<()> {
        let started = self.cfg.timing.then(Instant::now);
        let behavior = self.state.policies.last().expect("pi^0 present").clone();
        collect_iteration(
            self.truth,
            Behavior::Deterministic(&behavior),
            &mut self.state.data,
            self.cfg.seed,
        )?;
        let est = estimate_densities::<T>(&self.state.data)?;
        let beta_t = beta_schedule(self.cfg.beta, t, &self.params)?;
        let threshold = confidence_threshold(beta_t, t);
        let (set, scores) = super::candidates::build_confidence_set(self.candidates, &est, beta_t, t)?;
        self.state.scores.push(scores.iter().map(|s| s.as_f64()).collect());
        self.state.thresholds.push(threshold);
        let (policy, _, planned) = optimistic_plan(self.candidates, &set, &mut self.cache)?;
        let v = self.true_value(&policy)?;
        self.value_sum += v;
        let v_star = self.state.optimal_value;
        let row = LogRow {
            t,
            beta_t,
            threshold,
            confidence_set_size: set.len(),
            theta_star_in_set: self.candidates.true_index().is_some_and(|i| set.contains(&i)),
            planned_value: planned.as_f64(),
            pi_t_true_value: v,
            suboptimality: v_star - v,
            mixture_suboptimality: v_star - self.value_sum / t as f64,
            wall_ms: started.map(|s| s.elapsed().as_secs_f64() * 1e3),
        };
        self.state.t = t;
        self.state.estimates = Some(est);
        self.state.confidence_set = set;
        self.state.policies.push(policy);
        self.state.log.push(row);
        Ok(())
    }
}

/// Runs `cfg.iterations` iterations against `truth` with the given candidates.
pub fn run_etc<T: Real>(
    truth: &TabularPomdp<T>,
    candidates: &CandidateClass<T>,
    cfg: &EtcConfig,
) -> Result<EtcRunState<T>> {
    let mut run = EtcRun::new(truth, candidates, cfg)?;
    while !run.done() {
        run.step()?;
    }
    Ok(run.into_state())
}
