use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use super::run::{checkpoints, execute, write_run, Executed};
use super::{parent_dir, write_text, Globals};
use crate::config::{read_toml, RunConfig, SweepConfig};
use crate::exit::code_for;
use crate::manifest::RunManifest;
use crate::row;

pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const FAILURES_FILE: &str = "failures.csv";

/// One combination of the sweep lists.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub name: String,
    pub config: RunConfig,
}

pub fn expand(cfg: &SweepConfig) -> Vec<SweepRun> {
    let base = cfg.base();
    let betas = if cfg.sweep.betas.is_empty() {
        vec![base.learner.beta]
    } else {
        cfg.sweep.betas.clone()
    };
    let iters = if cfg.sweep.iterations.is_empty() {
        vec![base.learner.iterations]
    } else {
        cfg.sweep.iterations.clone()
    };
    let mut runs = Vec::new();
    for &beta in &betas {
        for &t in &iters {
            for &seed in &cfg.sweep.seeds {
                let mut c = base.clone();
                c.learner.beta = beta;
                c.learner.iterations = t;
                c.learner.seed = seed;
                runs.push(SweepRun {
                    name: format!("{beta}-T{t}-s{seed}"),
                    config: c,
                });
            }
        }
    }
    runs
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Medians per `(beta, iterations, checkpoint)` over successful runs, in
/// sweep order.
pub fn aggregate_csv(runs: &[SweepRun], results: &[Option<Executed>]) -> String {
    let mut s = String::from("beta,iterations,checkpoint,runs,median_suboptimality,median_mixture_suboptimality\n");
    let mut groups: Vec<(String, usize)> = Vec::new();
    for r in runs {
        let key = (r.config.learner.beta.to_string(), r.config.learner.iterations);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    for (beta, t_total) in groups {
        let members: Vec<&Executed> = runs
            .iter()
            .zip(results)
            .filter(|(r, _)| r.config.learner.beta.to_string() == beta && r.config.learner.iterations == t_total)
            .filter_map(|(_, e)| e.as_ref())
            .collect();
        let Some(first) = members.first() else { continue };
        for t in checkpoints(&first.learner) {
            let mut sub: Vec<f64> = members.iter().map(|e| e.state.log[t - 1].suboptimality).collect();
            let mut mix: Vec<f64> = members
                .iter()
                .map(|e| e.state.log[t - 1].mixture_suboptimality)
                .collect();
            let _ = writeln!(
                s,
                "{beta},{t_total},{t},{},{},{}",
                members.len(),
                median(&mut sub),
                median(&mut mix)
            );
        }
    }
    s
}

pub fn run(g: &Globals, config_path: &Path) -> Result<()> {
    let cfg: SweepConfig = read_toml(config_path)?;
    let base_dir = parent_dir(config_path);
    let runs = expand(&cfg);
    let out = g.out_dir()?.to_path_buf();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(g.jobs.max(1))
        .build()
        .context("building thread pool")?;
    // seeds come from the sweep lists, never from the global flag
    let per_run = Globals {
        seed: None,
        ..g.clone()
    };
    let outcomes: Vec<Result<Executed>> = pool.install(|| {
        runs.par_iter()
            .map(|r| {
                let ex = execute(&r.config, &base_dir, &per_run)?;
                let dir = out.join("runs").join(&r.name);
                std::fs::create_dir_all(&dir)?;
                let mut echo = serde_json::to_value(&r.config)?;
                echo["learner"] = serde_json::to_value(&ex.learner)?;
                write_run(&dir, &ex, echo)?;
                Ok(ex)
            })
            .collect()
    });

    let mut failures = String::from("run,exit_code,error\n");
    let mut first_code = None;
    let mut results = Vec::with_capacity(outcomes.len());
    for (r, o) in runs.iter().zip(outcomes) {
        match o {
            Ok(ex) => results.push(Some(ex)),
            Err(e) => {
                let code = code_for(&e);
                first_code.get_or_insert(code);
                let _ = writeln!(failures, "{},{code},\"{}\"", r.name, format!("{e:#}").replace('"', "'"));
                results.push(None);
            }
        }
    }
    write_text(&out, AGGREGATE_FILE, &aggregate_csv(&runs, &results))?;
    write_text(&out, FAILURES_FILE, &failures)?;

    let mut m = RunManifest::new("sweep", serde_json::to_value(&cfg)?, cfg.sweep.seeds.clone());
    m.output(AGGREGATE_FILE);
    m.output(FAILURES_FILE);
    for (r, e) in runs.iter().zip(&results) {
        if e.is_some() {
            m.output(format!("runs/{}/manifest.json", r.name));
        }
        m.summary_row(row! { "run" => r.name.clone(), "ok" => e.is_some() });
    }
    m.write(&out)?;
    let ok = results.iter().filter(|e| e.is_some()).count();
    println!(
        "{ok} of {} runs succeeded; aggregate in {}",
        runs.len(),
        out.join(AGGREGATE_FILE).display()
    );
    match first_code {
        None => Ok(()),
        Some(code) => Err(SweepFailed(code).into()),
    }
}

/// Carries the exit code of the first failed run.
#[derive(Debug)]
pub struct SweepFailed(pub i32);

impl std::fmt::Display for SweepFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "some sweep runs failed (see {FAILURES_FILE})")
    }
}

impl std::error::Error for SweepFailed {}
