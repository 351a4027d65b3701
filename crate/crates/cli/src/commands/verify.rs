use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use ndarray::Array2;

use etc_core::io::load_model;
use etc_core::linalg::{max_abs_diff, norm_1_to_1};
use etc_core::operators::{build_x, build_y, reference_start_law, verify_bellman_identity, OperatorSet};
use etc_core::pomdp::policy::decode_digits;
use etc_core::pomdp::{sequence_probability, Behavior, TabularPomdp};
use etc_core::Error;

use super::{write_text, Globals};
use crate::exit::CheckFailed;
use crate::manifest::RunManifest;
use crate::row;

pub const REPORT_FILE: &str = "verify.csv";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Pseudo-inverse and Bellman identity residuals.
    pub identity: f64,
    /// Trajectory probabilities and dummy-action invariance.
    pub probability: f64,
    /// Slack on the operator norm bound.
    pub norm_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: 1e-9,
            probability: 1e-10,
            norm_slack: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn overridden(tol: Option<f64>) -> Self {
        match tol {
            Some(t) => Tolerances {
                identity: t,
                probability: t,
                norm_slack: t,
            },
            None => Tolerances::default(),
        }
    }
}

/// One check: passes when `value <= limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: &'static str,
    pub step: usize,
    pub detail: String,
    pub value: f64,
    pub limit: f64,
}

impl CheckRow {
    pub fn passed(&self) -> bool {
        self.value <= self.limit
    }
}

/// Adds `delta` to every entry of `B_h(a, o)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellmanPerturbation {
    pub step: usize,
    pub action: usize,
    pub observation: usize,
    pub delta: f64,
}

impl std::str::FromStr for BellmanPerturbation {
    type Err = Error;
    fn from_str(s: &str) -> etc_core::Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::Config(format!("expected 'step,action,observation,delta', got '{s}'"));
        if parts.len() != 4 {
            return Err(bad());
        }
        Ok(BellmanPerturbation {
            step: parts[0].parse().map_err(|_| bad())?,
            action: parts[1].parse().map_err(|_| bad())?,
            observation: parts[2].parse().map_err(|_| bad())?,
            delta: parts[3].parse().map_err(|_| bad())?,
        })
    }
}

pub fn apply_perturbation(ops: &mut OperatorSet<f64>, p: &BellmanPerturbation) -> Result<()> {
    let d = ops.dims();
    if p.step == 0 || p.step > d.horizon || p.action >= d.actions || p.observation >= d.observations {
        return Err(Error::IndexOutOfRange(format!("{p:?}")).into());
    }
    *ops.bellman_mut(p.step, p.action, p.observation) += p.delta;
    Ok(())
}

/// Number of `(trajectory, dummy block)` evaluations for depth `depth`.
fn trajectory_work(model: &TabularPomdp<f64>, depth: usize) -> u128 {
    let (o, a) = (model.observations() as u128, model.actions() as u128);
    let blocks = a.saturating_pow(model.future_len() as u32);
    (1..=depth as u32)
        .map(|n| {
            o.saturating_pow(n)
                .saturating_mul(a.saturating_pow(n - 1))
                .saturating_mul(blocks)
        })
        .fold(0u128, u128::saturating_add)
}

/// Runs every operator identity against the brute-force oracle.
///
/// Trajectories are checked up to `depth` observations (at most `H + 1`).
pub fn identity_suite(
    model: &TabularPomdp<f64>,
    ops: &OperatorSet<f64>,
    depth: usize,
    tol: &Tolerances,
    cap: u128,
) -> Result<Vec<CheckRow>> {
    let d = model.dims();
    if depth == 0 || depth > d.horizon + 1 {
        return Err(Error::StepOutOfRange {
            step: depth,
            min: 1,
            max: d.horizon + 1,
        }
        .into());
    }
    let work = trajectory_work(model, depth);
    if work > cap {
        return Err(Error::EnumerationTooLarge { count: work, cap }.into());
    }
    let mut rows = Vec::new();

    for h in 1..=d.horizon {
        let u = ops.u(h);
        let eye = Array2::<f64>::eye(d.states);
        rows.push(CheckRow {
            check: "pinv",
            step: h,
            detail: String::new(),
            value: max_abs_diff(ops.u_dag(h).dot(&u).view(), eye.view()),
            limit: tol.identity,
        });
    }

    for h in 1..=d.horizon {
        let start = reference_start_law(model, Behavior::UniformRandom, h)?;
        for wi in 0..d.actions.pow(d.past as u32 + 1) {
            let acts = decode_digits(wi, d.actions, d.past + 1);
            let x = build_x(model, ops, h, &acts[..d.past], start.view())?;
            for o in 0..d.observations {
                let y = build_y(model, ops, h, &acts, o, start.view())?;
                let r = verify_bellman_identity(ops.bellman(h, acts[d.past], o), x.view(), y.view())?;
                rows.push(CheckRow {
                    check: "bellman",
                    step: h,
                    detail: format!("a={} o={o}", join_dot(&acts)),
                    value: r,
                    limit: tol.identity,
                });
            }
        }
    }

    let nu_bound = ops.nu() * (d.actions as f64).powi(d.future as i32);
    for h in 1..=d.horizon {
        let mut worst = 0.0f64;
        for a in 0..d.actions {
            for o in 0..d.observations {
                worst = worst.max(norm_1_to_1(ops.bellman(h, a, o)));
            }
        }
        rows.push(CheckRow {
            check: "norm",
            step: h,
            detail: format!("nu*A^k={nu_bound}"),
            value: worst,
            limit: nu_bound + tol.norm_slack,
        });
    }

    let zeros = vec![0; d.future];
    let blocks = d.actions.pow(d.future as u32);
    for n in 1..=depth {
        let (mut err, mut spread) = (0.0f64, 0.0f64);
        for oi in 0..d.observations.pow(n as u32) {
            let obs = decode_digits(oi, d.observations, n);
            for ai in 0..d.actions.pow(n as u32 - 1) {
                let acts = decode_digits(ai, d.actions, n - 1);
                let exact = sequence_probability(model, &obs, &acts)?;
                let base = ops.trajectory_probability(&obs, &acts, &zeros)?;
                err = err.max((base - exact).abs());
                for b in 1..blocks {
                    let dummy = decode_digits(b, d.actions, d.future);
                    let p = ops.trajectory_probability(&obs, &acts, &dummy)?;
                    spread = spread.max((p - base).abs());
                }
            }
        }
        rows.push(CheckRow {
            check: "trajectory",
            step: n,
            detail: String::new(),
            value: err,
            limit: tol.probability,
        });
        rows.push(CheckRow {
            check: "dummy_invariance",
            step: n,
            detail: String::new(),
            value: spread,
            limit: tol.probability,
        });
    }
    Ok(rows)
}

fn join_dot(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(".")
}

pub fn rows_csv(rows: &[CheckRow]) -> String {
    let mut s = String::from("check,step,detail,value,limit,pass\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{:e},{:e},{}",
            r.check,
            r.step,
            r.detail,
            r.value,
            r.limit,
            u8::from(r.passed())
        );
    }
    s
}

pub fn run(g: &Globals, model_path: &Path, depth: Option<usize>, perturb: Option<BellmanPerturbation>) -> Result<()> {
    let (model, _) = load_model::<f64>(model_path)?;
    let mut ops = OperatorSet::build(&model, &g.operator_config())?;
    if let Some(p) = &perturb {
        apply_perturbation(&mut ops, p)?;
    }
    let depth = depth.unwrap_or(model.horizon() + 1);
    let tol = Tolerances::overridden(g.tolerance);
    let rows = identity_suite(&model, &ops, depth, &tol, g.enumeration_cap())?;
    let failed: Vec<&CheckRow> = rows.iter().filter(|r| !r.passed()).collect();

    let out = g.out_dir()?;
    write_text(out, REPORT_FILE, &rows_csv(&rows))?;
    let mut m = RunManifest::new(
        "verify",
        serde_json::json!({
            "model": model_path.display().to_string(),
            "depth": depth,
            "perturb": perturb.map(|p| format!("{},{},{},{}", p.step, p.action, p.observation, p.delta)),
        }),
        vec![],
    );
    m.output(REPORT_FILE);
    for check in ["pinv", "bellman", "norm", "trajectory", "dummy_invariance"] {
        let of: Vec<&CheckRow> = rows.iter().filter(|r| r.check == check).collect();
        let worst = of.iter().map(|r| r.value).fold(0.0f64, f64::max);
        let pass = of.iter().all(|r| r.passed());
        println!("{check:<17} {:<4} worst {worst:e}", if pass { "PASS" } else { "FAIL" });
        m.summary_row(row! { "check" => check, "pass" => pass, "worst" => worst });
    }
    m.write(out)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CheckFailed(format!("{} of {} checks failed", failed.len(), rows.len())).into())
    }
}
