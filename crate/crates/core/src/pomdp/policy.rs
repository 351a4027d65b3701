use serde::{Deserialize, Serialize};

use super::model::Dims;
use crate::error::{Error, Result};

/// Deterministic policy over steps `1..=H`.
///
/// Tables are indexed by step (`[h-1]`). A history-table entry for step `h`
/// is indexed by the observation history `o_1..o_h` encoded big-endian in
/// base `O`; actions along a history are themselves determined by the
/// policy, so observations alone identify a reachable history.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Policy {
    OpenLoop { actions: Vec<usize> },
    Reactive { table: Vec<Vec<usize>> },
    HistoryTable { table: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyClass {
    OpenLoop,
    Reactive,
    HistoryTable,
}

impl std::str::FromStr for PolicyClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open-loop" => Ok(PolicyClass::OpenLoop),
            "reactive" => Ok(PolicyClass::Reactive),
            "history-table" => Ok(PolicyClass::HistoryTable),
            other => Err(Error::Config(format!("unknown policy class '{other}'"))),
        }
    }
}

impl std::fmt::Display for PolicyClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PolicyClass::OpenLoop => "open-loop",
            PolicyClass::Reactive => "reactive",
            PolicyClass::HistoryTable => "history-table",
        })
    }
}

/// Big-endian base-`base` index of a digit sequence.
pub fn encode_digits(digits: &[usize], base: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * base + d)
}

pub fn decode_digits(mut index: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % base;
        index /= base;
    }
    out
}

impl Policy {
    pub fn class(&self) -> PolicyClass {
        match self {
            Policy::OpenLoop { .. } => PolicyClass::OpenLoop,
            Policy::Reactive { .. } => PolicyClass::Reactive,
            Policy::HistoryTable { .. } => PolicyClass::HistoryTable,
        }
    }

    /// Number of steps the policy is defined for.
    pub fn horizon(&self) -> usize {
        match self {
            Policy::OpenLoop { actions } => actions.len(),
            Policy::Reactive { table } | Policy::HistoryTable { table } => table.len(),
        }
    }

    /// Action at step `h` (1-based) after observing `obs = o_1..o_h`.
    pub fn act(&self, h: usize, obs: &[usize], observations: usize) -> Result<usize> {
        let incomplete = || Error::PolicyIncomplete { step: h };
        if h == 0 || obs.len() < h {
            return Err(incomplete());
        }
        match self {
            Policy::OpenLoop { actions } => actions.get(h - 1).copied().ok_or_else(incomplete),
            Policy::Reactive { table } => table
                .get(h - 1)
                .and_then(|row| row.get(obs[h - 1]))
                .copied()
                .ok_or_else(incomplete),
            Policy::HistoryTable { table } => {
                let idx = encode_digits(&obs[..h], observations);
                table
                    .get(h - 1)
                    .and_then(|row| row.get(idx))
                    .copied()
                    .ok_or_else(incomplete)
            }
        }
    }

    /// Checks that the policy is total over `1..=H` and its actions are valid.
    pub fn validate(&self, dims: &Dims) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidPolicy(m));
        if self.horizon() != dims.horizon {
            return bad(format!(
                "defined for {} steps, model horizon is {}",
                self.horizon(),
                dims.horizon
            ));
        }
        let rows: Vec<&[usize]> = match self {
            Policy::OpenLoop { actions } => vec![actions.as_slice()],
            Policy::Reactive { table } | Policy::HistoryTable { table } => table.iter().map(|r| r.as_slice()).collect(),
        };
        for (hi, row) in rows.iter().enumerate() {
            let expected = match self {
                Policy::OpenLoop { .. } => dims.horizon,
                Policy::Reactive { .. } => dims.observations,
                Policy::HistoryTable { .. } => dims.observations.pow(hi as u32 + 1),
            };
            if row.len() != expected {
                return bad(format!(
                    "table {} has {} entries, expected {expected}",
                    hi + 1,
                    row.len()
                ));
            }
            if let Some(a) = row.iter().find(|&&a| a >= dims.actions) {
                return bad(format!("action {a} out of range"));
            }
        }
        Ok(())
    }

    /// Flat decision-entry encoding (step 1 first); the lexicographic order
    /// of this vector is the policy tie-break order.
    pub fn encode(&self) -> Vec<usize> {
        match self {
            Policy::OpenLoop { actions } => actions.clone(),
            Policy::Reactive { table } | Policy::HistoryTable { table } => table.iter().flatten().copied().collect(),
        }
    }

    pub fn zero(class: PolicyClass, dims: &Dims) -> Policy {
        PolicyClass::build(class, dims, &vec![0; class.entries_per_step(dims).iter().sum()])
    }
}

impl PolicyClass {
    /// Table sizes for steps `1..=H`.
    pub fn entries_per_step(self, dims: &Dims) -> Vec<usize> {
        (1..=dims.horizon)
            .map(|h| match self {
                PolicyClass::OpenLoop => 1,
                PolicyClass::Reactive => dims.observations,
                PolicyClass::HistoryTable => dims.observations.pow(h as u32),
            })
            .collect()
    }

    /// Number of decision entries that can change the value: steps `1..H-1`.
    /// The action at step `H` never affects a rewarded observation.
    pub fn free_entries(self, dims: &Dims) -> usize {
        let per = self.entries_per_step(dims);
        per[..dims.horizon - 1].iter().sum()
    }

    /// Number of policies visited by [`PolicyClass::enumerate`].
    pub fn count(self, dims: &Dims) -> u128 {
        let n = self.free_entries(dims);
        (dims.actions as u128).checked_pow(n as u32).unwrap_or(u128::MAX)
    }

    /// Builds a policy from a flat encoding in step order. Entries missing
    /// from the end (for instance the step-`H` table when only the free
    /// entries are given) are action 0; extra entries are ignored.
    pub fn build(self, dims: &Dims, flat: &[usize]) -> Policy {
        let per = self.entries_per_step(dims);
        let total: usize = per.iter().sum();
        let mut flat = flat[..flat.len().min(total)].to_vec();
        flat.resize(total, 0);
        match self {
            PolicyClass::OpenLoop => Policy::OpenLoop { actions: flat },
            _ => {
                let mut table = Vec::with_capacity(per.len());
                let mut off = 0;
                for n in per {
                    table.push(flat[off..off + n].to_vec());
                    off += n;
                }
                if self == PolicyClass::Reactive {
                    Policy::Reactive { table }
                } else {
                    Policy::HistoryTable { table }
                }
            }
        }
    }

    /// Enumerates the class in lexicographic order of the encoding, with the
    /// step-`H` entries fixed to action 0.
    pub fn enumerate(self, dims: &Dims, cap: u128) -> Result<PolicyIter> {
        let count = self.count(dims);
        if count > cap {
            return Err(Error::EnumerationTooLarge { count, cap });
        }
        let total: usize = self.entries_per_step(dims).iter().sum();
        Ok(PolicyIter {
            class: self,
            dims: *dims,
            free: self.free_entries(dims),
            digits: vec![0; total],
            done: false,
        })
    }
}

/// Lexicographic odometer over a policy class.
pub struct PolicyIter {
    class: PolicyClass,
    dims: Dims,
    free: usize,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for PolicyIter {
    type Item = Policy;
    fn next(&mut self) -> Option<Policy> {
        if self.done {
            return None;
        }
        let p = self.class.build(&self.dims, &self.digits);
        // advance: least significant digit is the last free entry
        let mut i = self.free;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.digits[i] += 1;
            if self.digits[i] < self.dims.actions {
                break;
            }
            self.digits[i] = 0;
        }
        Some(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(o: usize, a: usize, h: usize) -> Dims {
        Dims {
            states: 2,
            actions: a,
            observations: o,
            horizon: h,
            future: 0,
            past: 0,
        }
    }

    #[test]
    fn short_encoding_pads_with_zero() {
        let d = dims(2, 2, 1);
        assert_eq!(PolicyClass::HistoryTable.count(&d), 1);
        let p = PolicyClass::HistoryTable.build(&d, &[]);
        assert_eq!(
            p,
            Policy::HistoryTable {
                table: vec![vec![0, 0]]
            }
        );
    }

    #[test]
    fn digit_roundtrip() {
        for i in 0..27 {
            assert_eq!(encode_digits(&decode_digits(i, 3, 3), 3), i);
        }
        assert_eq!(encode_digits(&[1, 0, 2], 3), 11);
    }

    #[test]
    fn open_loop_enumeration_is_lexicographic() {
        let d = dims(2, 2, 2);
        let all: Vec<_> = PolicyClass::OpenLoop
            .enumerate(&d, 100)
            .unwrap()
            .map(|p| p.encode())
            .collect();
        assert_eq!(all, vec![vec![0, 0], vec![1, 0]]);
    }

    #[test]
    fn history_table_count() {
        let d = dims(3, 2, 3);
        assert_eq!(PolicyClass::HistoryTable.count(&d), 1 << 12);
        assert_eq!(
            PolicyClass::HistoryTable.enumerate(&d, u128::MAX).unwrap().count(),
            4096
        );
        assert!(matches!(
            PolicyClass::HistoryTable.enumerate(&d, 100),
            Err(Error::EnumerationTooLarge { count: 4096, cap: 100 })
        ));
    }

    #[test]
    fn history_lookup() {
        let d = dims(2, 2, 2);
        let p = Policy::HistoryTable {
            table: vec![vec![0, 1], vec![0, 0, 1, 0]],
        };
        p.validate(&d).unwrap();
        assert_eq!(p.act(1, &[1], 2).unwrap(), 1);
        assert_eq!(p.act(2, &[1, 0], 2).unwrap(), 1);
        assert!(matches!(
            p.act(3, &[1, 0, 0], 2),
            Err(Error::PolicyIncomplete { step: 3 })
        ));
    }

    #[test]
    fn validation_rejects_bad_actions() {
        let d = dims(2, 2, 2);
        let p = Policy::Reactive {
            table: vec![vec![0, 2], vec![0, 0]],
        };
        assert!(p.validate(&d).is_err());
        let short = Policy::OpenLoop { actions: vec![0] };
        assert!(short.validate(&d).is_err());
    }

    #[test]
    fn serde_tagged() {
        let p = Policy::OpenLoop { actions: vec![1, 0] };
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"kind":"open-loop","actions":[1,0]}"#);
        let back: Policy = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
