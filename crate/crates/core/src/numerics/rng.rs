//! Seeded, splittable random number streams.
//!
//! A `RngStream` is identified by a 64-bit seed and a 64-bit stream id.
//! Identical (seed, stream) pairs reproduce the exact variate sequence;
//! distinct stream ids yield statistically independent sequences, which is
//! how Monte Carlo trials get their own generators without any shared state.
//!
//! The generator is xoshiro256++ with its state filled from a SplitMix64
//! sequence keyed on (seed, stream), the initialization the xoshiro authors
//! recommend.

use num_complex::Complex64;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One independent random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    s: [u64; 4],
    /// Second Box-Muller variate kept for the next normal() call.
    gauss_spare: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = seed ^ GOLDEN_GAMMA.wrapping_mul(stream.wrapping_add(1));
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = splitmix64(&mut key);
        }
        if s == [0, 0, 0, 0] {
            s[0] = 1; // xoshiro state must not be all zero
        }
        Self {
            s,
            gauss_spare: None,
        }
    }

    /// xoshiro256++ step.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53 significant bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [0, n).
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        // Lemire's rejection-free-in-practice multiply-shift reduction.
        debug_assert!(n > 0);
        let mut x = self.next_u64();
        let mut m = (x as u128) * (n as u128);
        let mut l = m as u64;
        if l < n {
            let t = n.wrapping_neg() % n;
            while l < t {
                x = self.next_u64();
                m = (x as u128) * (n as u128);
                l = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Standard normal N(0, 1) via Box-Muller, caching the paired variate.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.gauss_spare.take() {
            return z;
        }
        // u1 in (0, 1] so the log is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.gauss_spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Circularly-symmetric complex Gaussian CN(0, variance):
    /// real and imaginary parts each N(0, variance / 2).
    pub fn complex_gaussian(&mut self, variance: f64) -> Complex64 {
        let sigma = (variance * 0.5).sqrt();
        Complex64::new(
            sigma * self.standard_normal(),
            sigma * self.standard_normal(),
        )
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seed_and_stream_reproduce_sequence() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        for _ in 0..100 {
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
    }

    #[test]
    fn distinct_streams_diverge() {
        let mut a = RngStream::new(42, 0);
        let mut b = RngStream::new(42, 1);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn distinct_streams_look_independent() {
        // Sample cross-correlation of standard normals should sit within
        // the 3/sqrt(n) band, and each stream should have mean ~0, var ~1.
        let n = 200_000;
        let mut a = RngStream::new(9, 100);
        let mut b = RngStream::new(9, 101);
        let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = a.standard_normal();
            let y = b.standard_normal();
            sa += x;
            sb += y;
            saa += x * x;
            sbb += y * y;
            sab += x * y;
        }
        let nf = n as f64;
        let mean_a = sa / nf;
        let var_a = saa / nf - mean_a * mean_a;
        let corr = (sab / nf - mean_a * (sb / nf)) / (var_a * (sbb / nf)).sqrt();
        assert!(mean_a.abs() < 3.0 / nf.sqrt(), "mean {mean_a}");
        assert!((var_a - 1.0).abs() < 0.02, "var {var_a}");
        assert!(corr.abs() < 3.0 / nf.sqrt(), "corr {corr}");
    }

    #[test]
    fn complex_gaussian_variance_splits_evenly() {
        let mut rng = RngStream::new(3, 0);
        let n = 100_000;
        let (mut pre, mut pim) = (0.0, 0.0);
        for _ in 0..n {
            let z = rng.complex_gaussian(2.0);
            pre += z.re * z.re;
            pim += z.im * z.im;
        }
        assert!((pre / n as f64 - 1.0).abs() < 0.03);
        assert!((pim / n as f64 - 1.0).abs() < 0.03);
    }

    #[test]
    fn uniform_below_is_in_range() {
        let mut rng = RngStream::new(1, 2);
        for _ in 0..10_000 {
            assert!(rng.below(13) < 13);
        }
    }
}
