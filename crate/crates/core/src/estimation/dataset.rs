//! Per-bucket trajectory buffers filled by the collection protocol.

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::pomdp::policy::{decode_digits, encode_digits};
use crate::pomdp::sim::simulate;
use crate::pomdp::{stream_rng, Behavior, Dims, TabularPomdp};
use crate::scalar::Real;

/// Observation windows `o_{h-ell}..o_{h+k+1}` grouped by `(h, a_{h-ell}..a_{h+k})`.
///
/// Pre-episode slots hold the dummy symbol `O`. Buckets are stored in order
/// `(h - 1) * A^{ell+k+1} + window`, the window encoded big-endian in base `A`.
/// Alongside the raw sequences each bucket keeps a histogram over the
/// `(O + 1)^{k+ell+2}` possible sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryDataset {
    dims: Dims,
    t: usize,
    sequences: Vec<Vec<Vec<u8>>>,
    counts: Vec<Vec<u32>>,
}

impl TrajectoryDataset {
    pub fn new(dims: Dims) -> Result<Self> {
        if dims.observations >= u8::MAX as usize {
            return Err(Error::Config("at most 254 observations supported".into()));
        }
        let n = dims.horizon * window_count(&dims);
        let codes = (dims.observations + 1).pow(seq_len(&dims) as u32);
        Ok(TrajectoryDataset {
            dims,
            t: 0,
            sequences: vec![Vec::new(); n],
            counts: vec![vec![0; codes]; n],
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Completed collection iterations.
    pub fn t(&self) -> usize {
        self.t
    }

    /// Number of action windows per step, `A^{ell+k+1}`.
    pub fn windows_per_step(&self) -> usize {
        window_count(&self.dims)
    }

    /// Length `k + ell + 2` of every stored sequence.
    pub fn sequence_len(&self) -> usize {
        seq_len(&self.dims)
    }

    pub fn bucket_index(&self, h: usize, window: &[usize]) -> usize {
        (h - 1) * self.windows_per_step() + encode_digits(window, self.dims.actions)
    }

    pub fn sequences(&self, h: usize, window: &[usize]) -> &[Vec<u8>] {
        &self.sequences[self.bucket_index(h, window)]
    }

    /// Histogram of one bucket, indexed big-endian in base `O + 1`.
    pub fn counts(&self, bucket: usize) -> &[u32] {
        &self.counts[bucket]
    }

    fn push(&mut self, bucket: usize, seq: Vec<u8>) {
        let code = seq
            .iter()
            .fold(0usize, |acc, &o| acc * (self.dims.observations + 1) + o as usize);
        self.counts[bucket][code] += 1;
        self.sequences[bucket].push(seq);
    }

    /// Writes one bucket as CSV, one sequence per row, with step labels in
    /// the header and `_` for pre-episode slots.
    pub fn write_bucket_csv<W: Write>(&self, out: &mut W, h: usize, window: &[usize]) -> Result<()> {
        let first = h as isize - self.dims.past as isize;
        let header: Vec<String> = (0..self.sequence_len())
            .map(|i| format!("o_{}", first + i as isize))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        let dummy = self.dims.observations as u8;
        for seq in self.sequences(h, window) {
            let row: Vec<String> = seq
                .iter()
                .map(|&o| if o == dummy { "_".into() } else { o.to_string() })
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Every `(h, window)` pair in bucket order.
    pub fn buckets(&self) -> impl Iterator<Item = (usize, Vec<usize>)> + '_ {
        let per = self.windows_per_step();
        let len = self.dims.past + self.dims.future + 1;
        (0..self.dims.horizon * per).map(move |b| (b / per + 1, decode_digits(b % per, self.dims.actions, len)))
    }
}

fn window_count(d: &Dims) -> usize {
    d.actions.pow((d.past + d.future + 1) as u32)
}

fn seq_len(d: &Dims) -> usize {
    d.past + d.future + 2
}

/// Runs one episode per `(h, window)` bucket and appends its observations.
///
/// Actions before step `h - ell` come from `behavior`; from there on the
/// window's actions are played regardless of what is observed. Each bucket
/// draws from its own stream keyed by `(seed, t, h, window)`.
pub fn collect_iteration<T: Real>(
    model: &TabularPomdp<T>,
    behavior: Behavior<'_>,
    data: &mut TrajectoryDataset,
    seed: u64,
) -> Result<()> {
    let d = data.dims;
    if model.dims() != d {
        return Err(Error::ShapeMismatch("dataset and model dimensions differ".into()));
    }
    let t_next = data.t + 1;
    let per = data.windows_per_step();
    let len = d.past + d.future + 1;
    for h in 1..=d.horizon {
        for wi in 0..per {
            let window = decode_digits(wi, d.actions, len);
            let mut rng = stream_rng(seed, &[t_next as u64, h as u64, wi as u64]);
            let first = h as isize - d.past as isize;
            let stop = h + d.future + 1;
            let traj = simulate(model, &mut rng, stop, |step, obs, rng| {
                let offset = step as isize - first;
                if offset >= 0 {
                    return Ok(window[offset as usize]);
                }
                match behavior {
                    Behavior::Deterministic(p) => p.act(step, obs, d.observations),
                    Behavior::UniformRandom => Ok(rng.random_range(0..d.actions)),
                }
            })?;
            let mut seq = Vec::with_capacity(seq_len(&d));
            for i in 0..seq_len(&d) {
                let step = first + i as isize;
                seq.push(if step < 1 {
                    d.observations as u8
                } else {
                    traj.observations[step as usize - 1] as u8
                });
            }
            data.push((h - 1) * per + wi, seq);
        }
    }
    data.t = t_next;
    Ok(())
}
