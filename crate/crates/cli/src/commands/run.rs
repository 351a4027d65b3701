use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;

use etc_core::io::save_policy;
use etc_core::learner::{run_etc, write_log_csv, CandidateClass, EtcConfig, EtcRunState, LogRow};

use super::{parent_dir, write_text, Globals};
use crate::config::{read_toml, RunConfig};
use crate::manifest::RunManifest;
use crate::row;

pub const LOG_FILE: &str = "log.csv";
pub const CURVE_FILE: &str = "curve.csv";
/// The last planned policy, readable by `eval-policy`.
pub const POLICY_FILE: &str = "policy.json";

/// Learner settings after applying the global overrides.
pub fn effective_learner(cfg: &EtcConfig, g: &Globals) -> EtcConfig {
    let mut l = cfg.clone();
    if let Some(seed) = g.seed {
        l.seed = seed;
    }
    l.timing |= g.timing;
    if g.unsafe_limits {
        l.enumeration_cap = u64::MAX;
    }
    l
}

pub struct Executed {
    pub state: EtcRunState<f64>,
    pub candidates: CandidateClass<f64>,
    pub learner: EtcConfig,
}

/// Loads the model, builds the candidates and runs the learner.
pub fn execute(cfg: &RunConfig, base_dir: &Path, g: &Globals) -> Result<Executed> {
    let truth = cfg.model.load(base_dir)?;
    let candidates = cfg.candidates.build(&truth, base_dir, &g.operator_config())?;
    let learner = effective_learner(&cfg.learner, g);
    let state = run_etc(&truth.0, &candidates, &learner)?;
    Ok(Executed {
        state,
        candidates,
        learner,
    })
}

/// `t,suboptimality,mixture_suboptimality` for every iteration.
pub fn curve_csv(log: &[LogRow]) -> String {
    let mut s = String::from("t,suboptimality,mixture_suboptimality\n");
    for r in log {
        let _ = writeln!(s, "{},{},{}", r.t, r.suboptimality, r.mixture_suboptimality);
    }
    s
}

/// Checkpoints that fall inside the run; the last iteration when none do.
pub fn checkpoints(learner: &EtcConfig) -> Vec<usize> {
    let cps: Vec<usize> = learner
        .checkpoints
        .iter()
        .copied()
        .filter(|&t| t >= 1 && t <= learner.iterations)
        .collect();
    if cps.is_empty() {
        vec![learner.iterations]
    } else {
        cps
    }
}

/// Writes the log, the curve and the manifest for one run into `dir`.
pub fn write_run(dir: &Path, ex: &Executed, config_echo: serde_json::Value) -> Result<()> {
    let mut buf = Vec::new();
    write_log_csv(&mut buf, &ex.state.log)?;
    std::fs::write(dir.join(LOG_FILE), buf)?;
    write_text(dir, CURVE_FILE, &curve_csv(&ex.state.log))?;
    let last = ex.state.policies.last().expect("initial policy is always present");
    save_policy(&dir.join(POLICY_FILE), last)?;
    let mut m = RunManifest::new("run-etc", config_echo, vec![ex.learner.seed]);
    m.output(LOG_FILE);
    m.output(CURVE_FILE);
    m.output(POLICY_FILE);
    for t in checkpoints(&ex.learner) {
        let r = &ex.state.log[t - 1];
        m.summary_row(row! {
            "t" => t,
            "confidence_set_size" => r.confidence_set_size,
            "suboptimality" => r.suboptimality,
            "mixture_suboptimality" => r.mixture_suboptimality,
        });
    }
    m.summary_row(row! {
        "optimal_value" => ex.state.optimal_value,
        "candidates" => ex.candidates.len(),
        "theta_star_always_in_set" => ex.state.log.iter().all(|r| r.theta_star_in_set),
    });
    m.write(dir)?;
    Ok(())
}

pub fn run(g: &Globals, config_path: &Path) -> Result<()> {
    let cfg: RunConfig = read_toml(config_path)?;
    let ex = execute(&cfg, &parent_dir(config_path), g)?;
    let out = g.out_dir()?;
    let mut echo = serde_json::to_value(&cfg)?;
    echo["learner"] = serde_json::to_value(&ex.learner)?;
    write_run(out, &ex, echo)?;
    let last = ex.state.log.last().expect("at least one iteration");
    println!(
        "T={} V*={} final suboptimality {} mixture suboptimality {} confidence set {}",
        last.t, ex.state.optimal_value, last.suboptimality, last.mixture_suboptimality, last.confidence_set_size
    );
    Ok(())
}
