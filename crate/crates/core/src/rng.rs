//! Counter-based randomness.
//!
//! Every random draw made during a voting round is a pure function of
//! `(trial seed, round index, vertex id)`. This makes a round's outcome
//! independent of the order in which vertices are evaluated and of how
//! trials are spread across threads.

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C909, |acc, &p| mix64(acc ^ mix64(p.wrapping_add(GOLDEN))))
}

/// A SplitMix64 stream. Cheap to construct, so one is created per vertex per round.
#[derive(Clone, Debug)]
pub struct CounterRng {
    state: u64,
}

impl CounterRng {
    pub fn from_seed(seed: u64) -> Self {
        Self { state: seed }
    }
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Randomness for one synchronous round of one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundRng {
    base: u64,
}

impl RoundRng {
    pub fn new(trial_seed: u64, round: u64) -> Self {
        Self { base: derive_seed(&[trial_seed, round]) }
    }

    /// The private stream of vertex `v` in this round.
    #[inline]
    pub fn vertex(&self, v: usize) -> CounterRng {
        CounterRng::from_seed(mix64(self.base ^ mix64(v as u64)))
    }

    /// A stream for whole-round decisions (adversary moves, corruption).
    pub fn global(&self, tag: u64) -> CounterRng {
        CounterRng::from_seed(derive_seed(&[self.base, u64::MAX, tag]))
    }
}

/// Uniform integer in `0..bound` by Lemire's multiply-shift (bias below 2^-32 for our bounds).
#[inline]
pub fn below(rng: &mut impl RngCore, bound: usize) -> usize {
    debug_assert!(bound > 0);
    ((rng.next_u64() as u128 * bound as u128) >> 64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_streams_are_reproducible_and_distinct() {
        let r = RoundRng::new(42, 7);
        let (mut a, mut b) = (r.vertex(3), r.vertex(3));
        for _ in 0..4 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_ne!(r.vertex(3).next_u64(), r.vertex(4).next_u64());
        assert_ne!(RoundRng::new(42, 8).vertex(3).next_u64(), r.vertex(3).next_u64());
    }

    #[test]
    fn below_is_in_range_and_roughly_uniform() {
        let mut g = CounterRng::from_seed(1);
        let mut hist = [0usize; 5];
        for _ in 0..50_000 {
            hist[below(&mut g, 5)] += 1;
        }
        for h in hist {
            assert!((9_300..10_700).contains(&h), "{hist:?}");
        }
    }
}
