//! JSON model and policy files.
//!
//! A model file holds nested arrays indexed from step 1 at position 0:
//! `transition[h][a][s][s']`, `emission[h][s][o]`, `reward[h][o]`, `mu1[s]`,
//! plus an optional `factors` object with `psi[h][s'][q]` and
//! `phi[h][q][s * A + a]`. Loading revalidates every invariant.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pomdp::{Dims, LowRankFactors, Policy, TabularPomdp};
use crate::scalar::Real;

pub const MODEL_FORMAT: &str = "etc-pomdp-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorsFile {
    pub rank: usize,
    pub psi: Vec<Vec<Vec<f64>>>,
    pub phi: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    pub horizon: usize,
    pub future: usize,
    pub past: usize,
    pub transition: Vec<Vec<Vec<Vec<f64>>>>,
    pub emission: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
    pub mu1: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<FactorsFile>,
}

fn rows_of<T: Real>(m: &Array2<T>) -> Vec<Vec<f64>> {
    m.rows()
        .into_iter()
        .map(|r| r.iter().map(|x| x.as_f64()).collect())
        .collect()
}

fn matrix<T: Real>(rows: &[Vec<f64>], what: &str) -> Result<Array2<T>> {
    let n = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidModel(format!("{what}: ragged rows")));
    }
    Ok(Array2::from_shape_fn((rows.len(), n), |(i, j)| T::lit(rows[i][j])))
}

impl ModelFile {
    pub fn from_model<T: Real>(model: &TabularPomdp<T>, factors: Option<&LowRankFactors<T>>) -> Self {
        let d = model.dims();
        ModelFile {
            format: MODEL_FORMAT.into(),
            states: d.states,
            actions: d.actions,
            observations: d.observations,
            horizon: d.horizon,
            future: d.future,
            past: d.past,
            transition: (1..=d.last_transition_step())
                .map(|h| {
                    (0..d.actions)
                        .map(|a| rows_of(&model.transition(h, a).to_owned()))
                        .collect()
                })
                .collect(),
            emission: (1..=d.last_emission_step())
                .map(|h| rows_of(&model.emission(h).t().to_owned()))
                .collect(),
            reward: (1..=d.horizon)
                .map(|h| model.reward(h).iter().map(|x| x.as_f64()).collect())
                .collect(),
            mu1: model.mu1().iter().map(|x| x.as_f64()).collect(),
            factors: factors.map(|f| FactorsFile {
                rank: f.rank,
                psi: f.psi.iter().map(rows_of).collect(),
                phi: f.phi.iter().map(rows_of).collect(),
            }),
        }
    }

    pub fn dims(&self) -> Dims {
        Dims {
            states: self.states,
            actions: self.actions,
            observations: self.observations,
            horizon: self.horizon,
            future: self.future,
            past: self.past,
        }
    }

    /// Builds and validates the model and, when present, the factors.
    pub fn to_model<T: Real>(&self) -> Result<(TabularPomdp<T>, Option<LowRankFactors<T>>)> {
        if self.format != MODEL_FORMAT {
            return Err(Error::InvalidModel(format!(
                "unknown format '{}', expected '{MODEL_FORMAT}'",
                self.format
            )));
        }
        let transition = self
            .transition
            .iter()
            .enumerate()
            .map(|(h, per_a)| {
                per_a
                    .iter()
                    .enumerate()
                    .map(|(a, m)| matrix(m, &format!("transition[{}][{a}]", h + 1)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let emission = self
            .emission
            .iter()
            .enumerate()
            .map(|(h, m)| matrix::<T>(m, &format!("emission[{}]", h + 1)).map(|e| e.t().to_owned()))
            .collect::<Result<Vec<_>>>()?;
        let reward = self
            .reward
            .iter()
            .map(|r| r.iter().map(|&x| T::lit(x)).collect::<Array1<T>>())
            .collect();
        let mu1 = self.mu1.iter().map(|&x| T::lit(x)).collect();
        let model = TabularPomdp::new(self.dims(), transition, emission, reward, mu1)?;
        let factors = match &self.factors {
            None => None,
            Some(f) => {
                let lf = LowRankFactors {
                    rank: f.rank,
                    psi: f.psi.iter().map(|m| matrix(m, "psi")).collect::<Result<_>>()?,
                    phi: f.phi.iter().map(|m| matrix(m, "phi")).collect::<Result<_>>()?,
                };
                lf.validate_against(&model)?;
                Some(lf)
            }
        };
        Ok((model, factors))
    }
}

/// Pretty JSON with a trailing newline; identical models give identical bytes.
pub fn model_to_json<T: Real>(model: &TabularPomdp<T>, factors: Option<&LowRankFactors<T>>) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&ModelFile::from_model(model, factors))?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_json<T: Real>(text: &str) -> Result<(TabularPomdp<T>, Option<LowRankFactors<T>>)> {
    serde_json::from_str::<ModelFile>(text)?.to_model()
}

pub fn save_model<T: Real>(path: &Path, model: &TabularPomdp<T>, factors: Option<&LowRankFactors<T>>) -> Result<()> {
    fs::write(path, model_to_json(model, factors)?)?;
    Ok(())
}

pub fn load_model<T: Real>(path: &Path) -> Result<(TabularPomdp<T>, Option<LowRankFactors<T>>)> {
    model_from_json(&fs::read_to_string(path)?)
}

pub fn save_policy(path: &Path, policy: &Policy) -> Result<()> {
    let mut s = serde_json::to_string_pretty(policy)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn load_policy(path: &Path) -> Result<Policy> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::fixtures::fo2;
    use crate::pomdp::{generate_lowrank_pomdp, GenSpec};

    #[test]
    fn round_trip_with_factors() {
        let spec = GenSpec {
            states: 4,
            actions: 2,
            observations: 3,
            rank: 2,
            horizon: 3,
            future: 1,
            past: 1,
        };
        let (m, f) = generate_lowrank_pomdp::<f64>(&spec, 7, 100).unwrap();
        let text = model_to_json(&m, Some(&f)).unwrap();
        let (m2, f2) = model_from_json::<f64>(&text).unwrap();
        assert_eq!(m, m2);
        assert_eq!(Some(f), f2);
        assert_eq!(model_to_json(&m2, f2.as_ref()).unwrap(), text);
    }

    #[test]
    fn corrupted_row_fails_validation() {
        let mut file = ModelFile::from_model(&fo2::<f64>(), None);
        file.transition[0][0][0] = vec![1.1, 0.0];
        assert!(matches!(file.to_model::<f64>(), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn unknown_format_rejected() {
        let mut file = ModelFile::from_model(&fo2::<f64>(), None);
        file.format = "other".into();
        assert!(file.to_model::<f64>().is_err());
    }

    #[test]
    fn policy_json_is_tagged() {
        let p = Policy::OpenLoop { actions: vec![1, 0] };
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"kind":"open-loop","actions":[1,0]}"#);
    }
}
