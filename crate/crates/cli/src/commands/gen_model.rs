use std::path::Path;

use anyhow::Result;
use ndarray::{concatenate, Axis};

use etc_core::io::model_to_json;
use etc_core::linalg::Svd;
use etc_core::pomdp::generate::weakest_forward_emission;
use etc_core::pomdp::{generate_lowrank_pomdp, GenSpec, LowRankFactors, TabularPomdp};

use super::{write_text, Globals};
use crate::manifest::RunManifest;
use crate::row;

pub const MODEL_FILE: &str = "model.json";

/// Numerical rank of the transitions at step `h` stacked over actions.
pub fn stacked_transition_rank(model: &TabularPomdp<f64>, h: usize) -> usize {
    let blocks: Vec<_> = (0..model.actions()).map(|a| model.transition(h, a)).collect();
    let stacked = concatenate(Axis(0), &blocks).expect("equal widths");
    Svd::new(stacked.view()).rank(1e-9)
}

pub fn run(g: &Globals, spec: &GenSpec, max_tries: usize) -> Result<()> {
    let seed = g.seed.unwrap_or(0);
    let (model, factors): (TabularPomdp<f64>, LowRankFactors<f64>) = generate_lowrank_pomdp(spec, seed, max_tries)?;
    let out = g.out_dir()?;
    write_text(out, MODEL_FILE, &model_to_json(&model, Some(&factors))?)?;
    report(out, &model, seed, spec)
}

fn report(out: &Path, model: &TabularPomdp<f64>, seed: u64, spec: &GenSpec) -> Result<()> {
    let (step, sigma) = weakest_forward_emission(model)?;
    let rank = stacked_transition_rank(model, 1);
    println!(
        "wrote {} (rank {rank}, weakest forward emission sigma_min {sigma:e} at step {step})",
        out.join(MODEL_FILE).display()
    );
    let mut m = RunManifest::new(
        "gen-model",
        serde_json::json!({
            "states": spec.states, "actions": spec.actions, "observations": spec.observations,
            "rank": spec.rank, "horizon": spec.horizon, "future": spec.future, "past": spec.past,
        }),
        vec![seed],
    );
    m.output(MODEL_FILE);
    m.summary_row(row! { "stacked_rank" => rank, "sigma_min" => sigma, "sigma_min_step" => step });
    m.write(out)?;
    Ok(())
}
