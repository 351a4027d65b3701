//! TOML run and sweep configurations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use etc_core::io::load_model;
use etc_core::learner::{grid_class, perturbed_class, CandidateClass, EtcConfig, KernelEntry};
use etc_core::operators::OperatorConfig;
use etc_core::pomdp::{generate_lowrank_pomdp, GenSpec, LowRankFactors, TabularPomdp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSection {
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    pub rank: usize,
    pub horizon: usize,
    pub future: usize,
    pub past: usize,
    pub seed: u64,
    #[serde(default = "default_tries")]
    pub max_tries: usize,
}

fn default_tries() -> usize {
    1000
}

impl GenerateSection {
    pub fn gen_spec(&self) -> GenSpec {
        GenSpec {
            states: self.states,
            actions: self.actions,
            observations: self.observations,
            rank: self.rank,
            horizon: self.horizon,
            future: self.future,
            past: self.past,
        }
    }
}

/// Exactly one of `path` or `generate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub generate: Option<GenerateSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CandidateRecipe {
    /// Only the true model.
    Singleton,
    /// The true model at index 0 plus `count` perturbed copies.
    Perturbed {
        count: usize,
        strength: f64,
        seed: u64,
        #[serde(default = "default_perturb_tries")]
        max_tries: usize,
    },
    /// The true model with one transition entry swept over `values`.
    Grid {
        step: usize,
        action: usize,
        from: usize,
        to: usize,
        values: Vec<f64>,
        #[serde(default)]
        true_index: Option<usize>,
    },
    /// Candidate model files.
    Files {
        paths: Vec<PathBuf>,
        #[serde(default)]
        true_index: Option<usize>,
    },
}

fn default_perturb_tries() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub candidates: CandidateRecipe,
    pub learner: EtcConfig,
}

/// Lists crossed with a base run; omitted lists keep the base value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub iterations: Vec<usize>,
    #[serde(default)]
    pub betas: Vec<etc_core::learner::BetaPreset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub model: ModelSection,
    pub candidates: CandidateRecipe,
    pub learner: EtcConfig,
    pub sweep: SweepSection,
}

impl SweepConfig {
    pub fn base(&self) -> RunConfig {
        RunConfig {
            model: self.model.clone(),
            candidates: self.candidates.clone(),
            learner: self.learner.clone(),
        }
    }
}

pub fn read_toml<C: for<'de> Deserialize<'de>>(path: &Path) -> Result<C> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = toml::from_str(&text).map_err(|e| etc_core::Error::Config(e.to_string()))?;
    Ok(cfg)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub type LoadedModel = (TabularPomdp<f64>, Option<LowRankFactors<f64>>);

impl ModelSection {
    /// Relative paths resolve against `base_dir`.
    pub fn load(&self, base_dir: &Path) -> Result<LoadedModel> {
        match (&self.path, &self.generate) {
            (Some(p), None) => Ok(load_model(&resolve(base_dir, p))?),
            (None, Some(g)) => {
                let (m, f) = generate_lowrank_pomdp(&g.gen_spec(), g.seed, g.max_tries)?;
                Ok((m, Some(f)))
            }
            _ => bail!(etc_core::Error::Config(
                "model section needs exactly one of 'path' or 'generate'".into()
            )),
        }
    }
}

impl CandidateRecipe {
    pub fn build(&self, truth: &LoadedModel, base_dir: &Path, cfg: &OperatorConfig) -> Result<CandidateClass<f64>> {
        let (model, factors) = truth;
        let class = match self {
            CandidateRecipe::Singleton => CandidateClass::new(vec![model.clone()], Some(0), cfg)?,
            CandidateRecipe::Perturbed {
                count,
                strength,
                seed,
                max_tries,
            } => perturbed_class(model, factors.as_ref(), *count, *strength, *seed, *max_tries, cfg)?,
            CandidateRecipe::Grid {
                step,
                action,
                from,
                to,
                values,
                true_index,
            } => {
                let entry = KernelEntry {
                    step: *step,
                    action: *action,
                    from: *from,
                    to: *to,
                };
                grid_class(model, entry, values, *true_index, cfg)?
            }
            CandidateRecipe::Files { paths, true_index } => {
                let models = paths
                    .iter()
                    .map(|p| load_model::<f64>(&resolve(base_dir, p)).map(|(m, _)| m))
                    .collect::<etc_core::Result<Vec<_>>>()?;
                CandidateClass::new(models, *true_index, cfg)?
            }
        };
        Ok(class)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_run_config() {
        let text = r#"
            [model.generate]
            states = 4
            actions = 2
            observations = 3
            rank = 2
            horizon = 3
            future = 1
            past = 1
            seed = 7

            [candidates]
            recipe = "perturbed"
            count = 7
            strength = 0.5
            seed = 3

            [learner]
            iterations = 10
            seed = 1
            beta = "tabular-concentration"
            checkpoints = [1, 10]
        "#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert!(matches!(cfg.candidates, CandidateRecipe::Perturbed { count: 7, .. }));
        assert_eq!(cfg.learner.beta, etc_core::learner::BetaPreset::TabularConcentration);
        assert_eq!(cfg.learner.c_beta, 1.0);
    }

    #[test]
    fn model_needs_one_source() {
        let m = ModelSection {
            path: None,
            generate: None,
        };
        assert!(m.load(Path::new(".")).is_err());
    }
}
