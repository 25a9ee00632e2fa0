//! Deterministic pseudo-random sampling for witness searches and test
//! points. SplitMix64: tiny, stable across platforms and releases, which is
//! what byte-identical reports need. Exact arithmetic downstream means
//! randomness only affects search order, never soundness.

use crate::{Int, Rat};

/// SplitMix64 stream.
#[derive(Clone, Debug)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in `1..=bound`.
    pub fn next_in(&mut self, bound: u64) -> u64 {
        1 + self.next_u64() % bound
    }

    /// Positive rational p/q with numerator and denominator up to `height`.
    pub fn rational(&mut self, height: u64) -> Rat {
        let p = self.next_in(height);
        let q = self.next_in(height);
        Rat::new(Int::from(p), Int::from(q))
    }

    /// A full positive assignment of `n` rate values, heights up to `height`.
    pub fn rationals(&mut self, n: usize, height: u64) -> Vec<Rat> {
        (0..n).map(|_| self.rational(height)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    #[test]
    fn deterministic_and_positive() {
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        for _ in 0..100 {
            let x = a.rational(20);
            assert_eq!(x, b.rational(20));
            assert!(x.is_positive());
        }
    }
}
