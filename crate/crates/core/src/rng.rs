//! Deterministic random streams.
//!
//! A run is driven by a single 64-bit seed. Every consumer (initial batch,
//! nominees of iteration `i`, committee member `m`, DE restart `r`, ...)
//! derives its own stream id from the parent via [`RngStream::child`], so the
//! draws of one consumer never depend on how many draws another consumer
//! made. This is what makes concurrent member training and checkpoint/resume
//! reproduce the serial, uninterrupted run bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Sub-stream identified by `tag`. Distinct tags give unrelated streams.
    pub fn child(&self, tag: u64) -> Self {
        let mixed = splitmix64(self.stream ^ splitmix64(tag.wrapping_add(0x5851_F42D_4C95_7F2D)));
        Self { seed: self.seed, stream: mixed }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(self.stream);
        StreamRng { inner }
    }
}

/// Generator handed out by [`RngStream::rng`].
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    /// Uniform draw in `[0, 1)`.
    pub fn unit<T: Scalar>(&mut self) -> T {
        T::lit(self.inner.gen::<f64>())
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform<T: Scalar>(&mut self, lo: T, hi: T) -> T {
        lo + (hi - lo) * self.unit::<T>()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn bit(&mut self) -> bool {
        self.inner.gen::<bool>()
    }

    /// Point drawn uniformly from `[0,1)^dim`.
    pub fn unit_vector<T: Scalar>(&mut self, dim: usize) -> Vec<T> {
        (0..dim).map(|_| self.unit()).collect()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<X>(&mut self, items: &mut [X]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_stream_same_draws() {
        let s = RngStream::new(42, 7);
        let a: Vec<f64> = s.rng().unit_vector(16);
        let b: Vec<f64> = s.rng().unit_vector(16);
        assert_eq!(a, b);
    }

    #[test]
    fn children_are_distinct() {
        let s = RngStream::new(42, 0);
        let a: Vec<f64> = s.child(0).rng().unit_vector(8);
        let b: Vec<f64> = s.child(1).rng().unit_vector(8);
        let c: Vec<f64> = RngStream::new(43, 0).child(0).rng().unit_vector(8);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(s.child(3), s.child(3));
    }
}
