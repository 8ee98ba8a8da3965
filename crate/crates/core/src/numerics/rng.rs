use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::tensor::Tensor;

/// Seeded random source backed by ChaCha8.
///
/// ChaCha8 is a counter-based stream cipher generator, so a given
/// `(seed, stream)` pair yields the same sample stream on every platform.
/// Independent sub-streams for separate consumers (initialization, shuffling,
/// distortion sampling) come from [`Rng::substream`].
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream keyed by `stream`; does not disturb `self`.
    pub fn substream(&self, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(stream.wrapping_add(1));
        Self { seed: self.seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        let z: f64 = self.inner.sample(StandardNormal);
        mean + std * z
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn gaussian_tensor(&mut self, rows: usize, cols: usize, std: f64) -> Tensor {
        let data = (0..rows * cols).map(|_| self.normal(0.0, std)).collect();
        Tensor::from_vec(rows, cols, data).expect("shape")
    }

    pub fn uniform_tensor(&mut self, rows: usize, cols: usize) -> Tensor {
        let data = (0..rows * cols).map(|_| self.uniform()).collect();
        Tensor::from_vec(rows, cols, data).expect("shape")
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n`, in sampled order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut all: Vec<usize> = (0..n).collect();
        self.shuffle(&mut all);
        all.truncate(k.min(n));
        all
    }
}

/// 64-bit FNV-1a; used to derive stable per-string seeds.
pub fn stable_hash(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Gaussian vector seeded by the hash of `key`; identical keys give identical vectors.
pub fn hashed_gaussian(key: &str, salt: u64, dim: usize, std: f64) -> Tensor {
    let mut rng = Rng::new(stable_hash(key) ^ salt.rotate_left(17));
    rng.gaussian_tensor(1, dim, std)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_seeds_equal_streams() {
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        let xs: Vec<f64> = (0..100).map(|_| a.normal(0.0, 1.0)).collect();
        let ys: Vec<f64> = (0..100).map(|_| b.normal(0.0, 1.0)).collect();
        assert_eq!(xs, ys);
        assert_ne!(Rng::new(43).uniform(), Rng::new(42).uniform());
    }

    #[test]
    fn substreams_are_independent_of_parent_state() {
        let mut a = Rng::new(7);
        let s1 = a.substream(3).uniform();
        a.uniform();
        let s2 = a.substream(3).uniform();
        assert_eq!(s1, s2);
        assert_ne!(a.substream(4).uniform(), s1);
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(stable_hash(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(stable_hash("a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn uniform_range() {
        let mut r = Rng::new(1);
        for _ in 0..1000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
