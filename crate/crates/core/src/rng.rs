//! Deterministic random number generation.
//!
//! Everything seeded in this crate draws from SplitMix64 so that any
//! implementation, in any language, can reproduce the exact streams. The
//! generator state advances by the additive constant `0x9E3779B97F4A7C15`
//! and each output is finalized with the two multiplies
//! `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB` and xor-shifts 30/27/31.
//! Uniform doubles take the top 53 bits of the output.

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

const GOLDEN: u64 = 0x9E3779B97F4A7C15;
const MIX1: u64 = 0xBF58476D1CE4E5B9;
const MIX2: u64 = 0x94D049BB133111EB;

fn finalize(z: u64) -> u64 {
    let z = (z ^ (z >> 30)).wrapping_mul(MIX1);
    let z = (z ^ (z >> 27)).wrapping_mul(MIX2);
    z ^ (z >> 31)
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        finalize(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[-1, 1)`.
    pub fn next_symmetric(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }

    /// Uniform in `[lo, hi)`.
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box-Muller.
    pub fn next_normal(&mut self) -> f64 {
        loop {
            let u = self.next_f64();
            if u > 0.0 {
                let v = self.next_f64();
                return (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos();
            }
        }
    }

    /// Random unit vector of dimension `n` (normalized Gaussian).
    pub fn next_unit_vector(&mut self, n: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| self.next_normal()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}

/// Derives an independent seed for (stream, index) under a base seed.
///
/// Trial seeds in the experiment harness are
/// `mix_seed(base_seed, cell_index, trial_index)`, which makes every trial
/// reproducible in isolation and results independent of execution order
/// and thread count.
pub fn mix_seed(base: u64, stream: u64, index: u64) -> u64 {
    let a = finalize(base.wrapping_add(GOLDEN));
    let b = finalize(a ^ stream.wrapping_mul(MIX1).wrapping_add(GOLDEN));
    finalize(b ^ index.wrapping_mul(MIX2).wrapping_add(GOLDEN))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_deterministic() {
        let a: Vec<u64> = {
            let mut r = SplitMix64::new(42);
            (0..16).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = SplitMix64::new(42);
            (0..16).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn reference_outputs() {
        // First outputs of the documented stream for seed 0; these pin the
        // generator constants for cross-language reproduction.
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xE220A8397B1DCDAF);
        assert_eq!(r.next_u64(), 0x6E789E6AA1B965F4);
        assert_eq!(r.next_u64(), 0x06C45D188009454F);
    }

    #[test]
    fn symmetric_draws_cover_both_signs() {
        let mut r = SplitMix64::new(7);
        let draws: Vec<f64> = (0..10_000).map(|_| r.next_symmetric()).collect();
        assert!(draws.iter().all(|x| (-1.0..1.0).contains(x)));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn mix_seed_separates_streams() {
        let s1 = mix_seed(1, 0, 0);
        let s2 = mix_seed(1, 0, 1);
        let s3 = mix_seed(1, 1, 0);
        let s4 = mix_seed(2, 0, 0);
        assert!(s1 != s2 && s1 != s3 && s1 != s4 && s2 != s3);
    }

    #[test]
    fn unit_vectors_are_unit() {
        let mut r = SplitMix64::new(3);
        for n in [1usize, 2, 9, 20] {
            let v = r.next_unit_vector(n);
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }
}
