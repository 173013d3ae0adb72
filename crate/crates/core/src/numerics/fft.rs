//! Unitary DFT/IDFT pair and convolution.
//!
//! Both directions carry the 1/sqrt(N) factor, so `idft(dft(x)) == x` up to
//! round-off and Parseval holds exactly: ||x||^2 == ||dft(x)||^2. Every
//! module in the crate uses this convention; the channel's frequency
//! response is the only place a sqrt(N) rescale appears, and it is
//! documented there.
//!
//! Powers of two take an iterative radix-2 path; any other length falls
//! back to the direct O(N^2) sum, which is exact for the small transform
//! sizes used here.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Forward unitary DFT: X_k = (1/sqrt(N)) sum_n x_n e^{-i 2 pi n k / N}.
pub fn dft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    transform(x, -1.0)
}

/// Inverse unitary DFT: x_n = (1/sqrt(N)) sum_k X_k e^{+i 2 pi n k / N}.
pub fn idft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    transform(x, 1.0)
}

fn transform(x: &[Complex64], sign: f64) -> Result<Vec<Complex64>> {
    if x.is_empty() {
        return Err(Error::EmptyInput("dft"));
    }
    let n = x.len();
    let mut out = if n.is_power_of_two() && n > 1 {
        let mut buf = x.to_vec();
        fft_pow2(&mut buf, sign);
        buf
    } else {
        direct(x, sign)
    };
    let scale = 1.0 / (n as f64).sqrt();
    for v in &mut out {
        *v *= scale;
    }
    Ok(out)
}

fn direct(x: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = x.len();
    let step = sign * std::f64::consts::TAU / n as f64;
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &v) in x.iter().enumerate() {
                let angle = step * (k * i % n) as f64;
                acc += v * Complex64::new(angle.cos(), angle.sin());
            }
            acc
        })
        .collect()
}

/// Iterative radix-2 Cooley-Tukey, unscaled.
fn fft_pow2(buf: &mut [Complex64], sign: f64) {
    let n = buf.len();
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let angle = sign * std::f64::consts::TAU / len as f64;
        let wlen = Complex64::new(angle.cos(), angle.sin());
        for start in (0..n).step_by(len) {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let a = buf[start + k];
                let b = buf[start + k + len / 2] * w;
                buf[start + k] = a + b;
                buf[start + k + len / 2] = a - b;
                w *= wlen;
            }
        }
        len <<= 1;
    }
}

/// Linear convolution, output length |x| + |h| - 1.
pub fn convolve(x: &[Complex64], h: &[Complex64]) -> Result<Vec<Complex64>> {
    if x.is_empty() || h.is_empty() {
        return Err(Error::EmptyInput("convolve"));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); x.len() + h.len() - 1];
    for (i, &xi) in x.iter().enumerate() {
        for (j, &hj) in h.iter().enumerate() {
            out[i + j] += xi * hj;
        }
    }
    Ok(out)
}

/// Circular convolution of period |x|; `h` may be shorter than `x`.
pub fn circular_convolve(x: &[Complex64], h: &[Complex64]) -> Result<Vec<Complex64>> {
    if x.is_empty() || h.is_empty() {
        return Err(Error::EmptyInput("circular_convolve"));
    }
    let n = x.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (j, &hj) in h.iter().enumerate() {
        for (i, &xi) in x.iter().enumerate() {
            out[(i + j) % n] += xi * hj;
        }
    }
    Ok(out)
}
