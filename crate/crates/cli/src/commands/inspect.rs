use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;

use etc_core::io::load_model;
use etc_core::linalg::column_rank_margin;
use etc_core::operators::{compute_gamma, forward_emission, min_sufficient_k, OperatorSet, SV_FLOOR};
use etc_core::pomdp::{Behavior, TabularPomdp};
use etc_core::Error;

use super::{write_text, Globals};
use crate::manifest::RunManifest;
use crate::row;

pub const REPORT_FILE: &str = "inspect.csv";

/// Diagnostics for one model. Failures of individual diagnostics are
/// reported as text rather than aborting.
#[derive(Debug, Clone, PartialEq)]
pub struct Inspection {
    /// `Ok(nu)` or the reason operators could not be built.
    pub nu: std::result::Result<f64, String>,
    /// Per-step smallest singular value of `U_h`.
    pub sigma_min: Vec<f64>,
    pub min_sufficient_k: std::result::Result<usize, String>,
    /// `(h, gamma or reason)` under the uniform-random reference policy.
    pub gamma: Vec<(usize, std::result::Result<f64, String>)>,
}

pub fn inspect_model(model: &TabularPomdp<f64>, g: &Globals) -> Result<Inspection> {
    let cfg = g.operator_config();
    let nu = match OperatorSet::build(model, &cfg) {
        Ok(ops) => Ok(ops.nu()),
        Err(e @ Error::FutureSufficiency { .. }) => Err(e.to_string()),
        Err(e) => return Err(e.into()),
    };
    let sigma_min = (1..=model.horizon())
        .map(|h| forward_emission(model, h, model.future_len(), cfg.row_cap).map(|u| column_rank_margin(u.view())))
        .collect::<etc_core::Result<Vec<_>>>()?;
    let min_k = match min_sufficient_k(model, model.future_len(), cfg.row_cap) {
        Ok(k) => Ok(k),
        Err(e @ Error::NoSufficientWindow { .. }) => Err(e.to_string()),
        Err(e) => return Err(e.into()),
    };
    let past = model.past_len();
    let gamma = ((past + 1).max(2)..=model.horizon())
        .map(|h| {
            let r = compute_gamma(model, Behavior::UniformRandom, h, past, SV_FLOOR);
            (h, r.map_err(|e| e.to_string()))
        })
        .collect();
    Ok(Inspection {
        nu,
        sigma_min,
        min_sufficient_k: min_k,
        gamma,
    })
}

fn cell<T: ToString>(r: &std::result::Result<T, String>) -> (String, String) {
    match r {
        Ok(v) => (v.to_string(), String::new()),
        Err(e) => (String::new(), e.replace(',', ";")),
    }
}

/// `metric,step,value,note`.
pub fn inspection_csv(i: &Inspection) -> String {
    let mut s = String::from("metric,step,value,note\n");
    let (v, n) = cell(&i.nu);
    let _ = writeln!(s, "nu,,{v},{n}");
    for (h, sm) in i.sigma_min.iter().enumerate() {
        let _ = writeln!(s, "sigma_min,{},{sm},", h + 1);
    }
    let (v, n) = cell(&i.min_sufficient_k);
    let _ = writeln!(s, "min_sufficient_k,,{v},{n}");
    for (h, g) in &i.gamma {
        let (v, n) = cell(g);
        let _ = writeln!(s, "gamma,{h},{v},{n}");
    }
    s
}

pub fn run(g: &Globals, model_path: &Path) -> Result<()> {
    let (model, _) = load_model::<f64>(model_path)?;
    let d = model.dims();
    let i = inspect_model(&model, g)?;
    println!(
        "model: S={} A={} O={} H={} k={} ell={}",
        d.states, d.actions, d.observations, d.horizon, d.future, d.past
    );
    match &i.nu {
        Ok(nu) => println!("nu = {nu}"),
        Err(e) => println!("{e}"),
    }
    for (h, s) in i.sigma_min.iter().enumerate() {
        println!("sigma_min(U_{}) = {s:e}", h + 1);
    }
    match &i.min_sufficient_k {
        Ok(k) => println!("min_sufficient_k = {k}"),
        Err(e) => println!("{e}"),
    }
    for (h, gm) in &i.gamma {
        match gm {
            Ok(v) => println!("gamma(h={h}, uniform reference) = {v}"),
            Err(e) => println!("gamma(h={h}): {e}"),
        }
    }
    let out = g.out_dir()?;
    write_text(out, REPORT_FILE, &inspection_csv(&i))?;
    let mut m = RunManifest::new(
        "inspect",
        serde_json::json!({ "model": model_path.display().to_string() }),
        vec![],
    );
    m.output(REPORT_FILE);
    m.summary_row(row! {
        "nu" => i.nu.as_ref().ok(),
        "min_sufficient_k" => i.min_sufficient_k.as_ref().ok(),
    });
    m.write(out)?;
    Ok(())
}
