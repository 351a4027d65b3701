use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use ndarray::Array1;

use etc_core::io::{load_model, load_policy};
use etc_core::operators::OperatorSet;
use etc_core::pomdp::sim::episode_return;
use etc_core::pomdp::{exact_policy_value, sample_episode, stream_rng, Policy, TabularPomdp};

use super::{write_text, Globals};
use crate::manifest::RunManifest;
use crate::row;

pub const REPORT_FILE: &str = "eval.csv";

/// Sample mean and standard error of the episode return over `episodes`
/// independent streams.
pub fn monte_carlo_value(model: &TabularPomdp<f64>, policy: &Policy, episodes: usize, seed: u64) -> Result<(f64, f64)> {
    let mut sum = 0.0;
    let mut sq = 0.0;
    for e in 0..episodes {
        let mut rng = stream_rng(seed, &[e as u64]);
        let traj = sample_episode(model, policy, &mut rng, model.horizon())?;
        let r = episode_return(model, &traj);
        sum += r;
        sq += r * r;
    }
    let n = episodes as f64;
    let mean = sum / n;
    let var = (sq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    Ok((mean, (var / n).sqrt()))
}

pub fn run(g: &Globals, model_path: &Path, policy_path: &Path, episodes: usize) -> Result<()> {
    let (model, _) = load_model::<f64>(model_path)?;
    let policy = load_policy(policy_path)?;
    policy.validate(&model.dims())?;
    let exact = exact_policy_value(&model, &policy)?;
    let rewards: Vec<Array1<f64>> = (1..=model.horizon()).map(|h| model.reward(h).to_owned()).collect();
    let via_ops = OperatorSet::build(&model, &g.operator_config())
        .and_then(|ops| ops.policy_value(&rewards, &policy))
        .ok();
    let seed = g.seed.unwrap_or(0);
    let mc = if episodes > 0 {
        Some(monte_carlo_value(&model, &policy, episodes, seed)?)
    } else {
        None
    };

    let mut csv = String::from("method,value,stderr\n");
    let _ = writeln!(csv, "exact,{exact},");
    if let Some(v) = via_ops {
        let _ = writeln!(csv, "operators,{v},");
    }
    if let Some((m, se)) = mc {
        let _ = writeln!(csv, "monte_carlo,{m},{se}");
    }
    println!("exact value {exact}");
    match via_ops {
        Some(v) => println!("operator value {v}"),
        None => println!("operator value unavailable (future sufficiency violated)"),
    }
    if let Some((m, se)) = mc {
        println!("monte carlo {m} +/- {se} ({episodes} episodes)");
    }

    let out = g.out_dir()?;
    write_text(out, REPORT_FILE, &csv)?;
    let mut man = RunManifest::new(
        "eval-policy",
        serde_json::json!({
            "model": model_path.display().to_string(),
            "policy": policy_path.display().to_string(),
            "episodes": episodes,
        }),
        vec![seed],
    );
    man.output(REPORT_FILE);
    man.summary_row(row! { "exact" => exact, "operators" => via_ops, "monte_carlo" => mc.map(|x| x.0) });
    man.write(out)?;
    Ok(())
}
