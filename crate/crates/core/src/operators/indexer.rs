use crate::pomdp::policy::{decode_digits, encode_digits};

/// Flat row index of a future window `(o_h..o_{h+k}, a_h..a_{h+k-1})`.
///
/// `index = obs * A^k + act`, with `obs` big-endian base `O` over the
/// `k + 1` observations and `act` big-endian base `A` over the `k` actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrajIndexer {
    pub observations: usize,
    pub actions: usize,
    pub future: usize,
}

impl TrajIndexer {
    pub fn new(observations: usize, actions: usize, future: usize) -> Self {
        TrajIndexer {
            observations,
            actions,
            future,
        }
    }

    /// `O^{k+1}`.
    pub fn obs_blocks(&self) -> usize {
        self.observations.pow(self.future as u32 + 1)
    }

    /// `A^k`.
    pub fn act_blocks(&self) -> usize {
        self.actions.pow(self.future as u32)
    }

    pub fn rows(&self) -> usize {
        self.obs_blocks() * self.act_blocks()
    }

    /// Row count without overflow, for size guards.
    pub fn rows_checked(&self) -> Option<usize> {
        let o = self.observations.checked_pow(self.future as u32 + 1)?;
        let a = self.actions.checked_pow(self.future as u32)?;
        o.checked_mul(a)
    }

    pub fn encode(&self, obs: &[usize], acts: &[usize]) -> usize {
        debug_assert_eq!(obs.len(), self.future + 1);
        debug_assert_eq!(acts.len(), self.future);
        self.index(encode_digits(obs, self.observations), encode_digits(acts, self.actions))
    }

    pub fn index(&self, obs_block: usize, act_block: usize) -> usize {
        obs_block * self.act_blocks() + act_block
    }

    pub fn decode(&self, index: usize) -> (Vec<usize>, Vec<usize>) {
        let (ob, ab) = self.split(index);
        (
            decode_digits(ob, self.observations, self.future + 1),
            decode_digits(ab, self.actions, self.future),
        )
    }

    /// `(obs_block, act_block)` of a row.
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.act_blocks(), index % self.act_blocks())
    }

    /// First observation of the window stored in a row.
    pub fn leading_obs(&self, index: usize) -> usize {
        self.split(index).0 / self.observations.pow(self.future as u32)
    }

    /// Rows whose window starts with `o` and carries the action block `act_block`.
    pub fn rows_starting_with(&self, o: usize, act_block: usize) -> impl Iterator<Item = usize> + '_ {
        let tail = self.observations.pow(self.future as u32);
        (0..tail).map(move |rest| self.index(o * tail + rest, act_block))
    }

    /// Human-readable window, e.g. `o=0.2|a=1`.
    pub fn label(&self, index: usize) -> String {
        let (o, a) = self.decode(index);
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(".");
        format!("o={}|a={}", join(&o), join(&a))
    }
}

/// Column index of a past window `o_{h-ell}..o_{h-1}` over the alphabet
/// `0..=O`, where `O` marks a pre-episode slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PastIndexer {
    pub observations: usize,
    pub past: usize,
}

impl PastIndexer {
    pub fn new(observations: usize, past: usize) -> Self {
        PastIndexer { observations, past }
    }

    pub fn dummy(&self) -> usize {
        self.observations
    }

    pub fn cols(&self) -> usize {
        (self.observations + 1).pow(self.past as u32)
    }

    pub fn encode(&self, obs: &[usize]) -> usize {
        encode_digits(obs, self.observations + 1)
    }

    pub fn decode(&self, col: usize) -> Vec<usize> {
        decode_digits(col, self.observations + 1, self.past)
    }

    pub fn label(&self, col: usize) -> String {
        let parts: Vec<String> = self
            .decode(col)
            .into_iter()
            .map(|o| if o == self.dummy() { "_".into() } else { o.to_string() })
            .collect();
        format!("past={}", parts.join("."))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_matches_formula() {
        let ix = TrajIndexer::new(3, 2, 2);
        assert_eq!(ix.rows(), 27 * 4);
        let idx = ix.encode(&[2, 0, 1], &[1, 0]);
        assert_eq!(idx, (2 * 9 + 1) * 4 + 2);
        assert_eq!(ix.decode(idx), (vec![2, 0, 1], vec![1, 0]));
        assert_eq!(ix.leading_obs(idx), 2);
    }

    #[test]
    fn bijection() {
        let ix = TrajIndexer::new(2, 3, 1);
        for i in 0..ix.rows() {
            let (o, a) = ix.decode(i);
            assert_eq!(ix.encode(&o, &a), i);
        }
    }

    #[test]
    fn k0_is_plain_observation() {
        let ix = TrajIndexer::new(4, 2, 0);
        assert_eq!(ix.rows(), 4);
        assert_eq!(ix.encode(&[3], &[]), 3);
    }

    #[test]
    fn rows_starting_with_covers_tail() {
        let ix = TrajIndexer::new(2, 2, 1);
        let rows: Vec<_> = ix.rows_starting_with(1, 1).collect();
        assert_eq!(rows, vec![ix.encode(&[1, 0], &[1]), ix.encode(&[1, 1], &[1])]);
    }

    #[test]
    fn past_labels() {
        let p = PastIndexer::new(2, 2);
        assert_eq!(p.cols(), 9);
        assert_eq!(p.label(p.encode(&[2, 1])), "past=_.1");
    }
}
