//! Episode simulator.

use ndarray::ArrayView1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::TabularPomdp;
use super::policy::Policy;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Generator used for every stochastic routine in the crate.
pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for a labelled stream, e.g. `(seed, t, h, window)`.
pub fn stream_rng(seed: u64, labels: &[u64]) -> SimRng {
    let mut z = splitmix64(seed);
    for &l in labels {
        z = splitmix64(z ^ splitmix64(l.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    SimRng::seed_from_u64(z)
}

/// Draws an index from a discrete law by inverse CDF.
pub fn sample_index<T: Real, R: Rng + ?Sized>(rng: &mut R, probs: ArrayView1<'_, T>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        let p = p.as_f64();
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_positive
}

/// One sampled interaction, starting at `start_step`.
///
/// `observations[i]` is the observation at step `start_step + i`,
/// `actions[i]` the action taken right after it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub start_step: usize,
    pub observations: Vec<usize>,
    pub actions: Vec<usize>,
    /// Hidden states, kept for debugging only.
    pub states: Option<Vec<usize>>,
}

/// How actions are chosen before a fixed action window starts.
#[derive(Debug, Clone, Copy)]
pub enum Behavior<'a> {
    Deterministic(&'a Policy),
    UniformRandom,
}

/// Runs one episode from step 1 up to and including the observation at
/// `stop_step`, asking `choose(h, o_1..o_h, rng)` for each action `a_h`.
pub fn simulate<T, R, F>(model: &TabularPomdp<T>, rng: &mut R, stop_step: usize, mut choose: F) -> Result<Trajectory>
where
    T: Real,
    R: Rng + ?Sized,
    F: FnMut(usize, &[usize], &mut R) -> Result<usize>,
{
    model.check_emission_step(stop_step)?;
    let mut obs = Vec::with_capacity(stop_step);
    let mut acts = Vec::with_capacity(stop_step.saturating_sub(1));
    let mut states = Vec::with_capacity(stop_step);

    let mut s = sample_index(rng, model.mu1());
    for h in 1..=stop_step {
        states.push(s);
        let o = sample_index(rng, model.emission(h).column(s));
        obs.push(o);
        if h == stop_step {
            break;
        }
        let a = choose(h, &obs, rng)?;
        if a >= model.actions() {
            return Err(Error::InvalidPolicy(format!("action {a} out of range at step {h}")));
        }
        acts.push(a);
        s = sample_index(rng, model.transition(h, a).row(s));
    }
    Ok(Trajectory {
        start_step: 1,
        observations: obs,
        actions: acts,
        states: Some(states),
    })
}

/// Samples an episode under `policy` through the observation at `stop_step`.
pub fn sample_episode<T: Real>(
    model: &TabularPomdp<T>,
    policy: &Policy,
    rng: &mut SimRng,
    stop_step: usize,
) -> Result<Trajectory> {
    let o = model.observations();
    simulate(model, rng, stop_step, |h, obs, _| policy.act(h, obs, o))
}

/// Sum of rewards `r_h(o_h)` over the rewarded steps of a trajectory.
pub fn episode_return<T: Real>(model: &TabularPomdp<T>, traj: &Trajectory) -> T {
    traj.observations
        .iter()
        .enumerate()
        .map(|(i, &o)| (traj.start_step + i, o))
        .filter(|&(h, _)| h >= 1 && h <= model.horizon())
        .map(|(h, o)| model.reward(h)[o])
        .sum()
}
