//! Confidence-radius schedules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named radius formulas, each scaled by a user multiplier `c_beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaPreset {
    /// `(nu + 1) A^{2k} sqrt(w_E (k + ell) log(H A T))`.
    Theorem,
    /// `(1 + nu) (k + ell) sqrt(A^{5k+1} O^{k+ell} log(O A T H / delta) / t)`.
    Tabular,
    /// `A^k (k + ell) sqrt(log(O A T H / delta))`.
    TabularConcentration,
    /// `nu (k + ell) sqrt(A^{5k+1} O^{k+ell} log(O A T H / delta))`.
    GoodEvent,
}

impl BetaPreset {
    pub const ALL: [BetaPreset; 4] = [
        BetaPreset::Theorem,
        BetaPreset::Tabular,
        BetaPreset::TabularConcentration,
        BetaPreset::GoodEvent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BetaPreset::Theorem => "theorem",
            BetaPreset::Tabular => "tabular",
            BetaPreset::TabularConcentration => "tabular-concentration",
            BetaPreset::GoodEvent => "good-event",
        }
    }
}

impl std::str::FromStr for BetaPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BetaPreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

impl std::fmt::Display for BetaPreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    pub nu: f64,
    pub actions: usize,
    pub observations: usize,
    pub future: usize,
    pub past: usize,
    pub horizon: usize,
    /// Total number of iterations `T`.
    pub iterations: usize,
    /// Complexity `w_E` of the density-estimation oracle.
    pub w_e: f64,
    pub delta: f64,
    pub c_beta: f64,
}

/// `beta_t` for a preset, including the `c_beta` multiplier.
pub fn beta_schedule(preset: BetaPreset, t: usize, p: &BetaParams) -> Result<f64> {
    if t == 0 {
        return Err(Error::NoSamples);
    }
    let (a, o) = (p.actions as f64, p.observations as f64);
    let (k, ell) = (p.future as i32, p.past as i32);
    let window = (k + ell) as f64;
    let (big_h, big_t) = (p.horizon as f64, p.iterations as f64);
    let log_conf = (o * a * big_t * big_h / p.delta).ln();
    let poly = a.powi(5 * k + 1) * o.powi(k + ell);
    let raw = match preset {
        BetaPreset::Theorem => (p.nu + 1.0) * a.powi(2 * k) * (p.w_e * window * (big_h * a * big_t).ln()).sqrt(),
        BetaPreset::Tabular => (1.0 + p.nu) * window * (poly * log_conf / t as f64).sqrt(),
        BetaPreset::TabularConcentration => a.powi(k) * window * log_conf.sqrt(),
        BetaPreset::GoodEvent => p.nu * window * (poly * log_conf).sqrt(),
    };
    Ok(p.c_beta * raw)
}

/// Acceptance threshold `beta_t * sqrt(1 / t)`.
pub fn confidence_threshold(beta_t: f64, t: usize) -> f64 {
    beta_t / (t as f64).sqrt()
}
