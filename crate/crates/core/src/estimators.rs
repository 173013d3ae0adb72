//! Classical baselines: LS and MMSE pilot-based channel estimation,
//! frequency interpolation, one-tap equalization and the NMSE metric.
//!
//! Both estimators run on pilot positions first; comb-type patterns are then
//! filled in by linear interpolation of real and imaginary parts, with
//! nearest-pilot hold at the band edges. LS and MMSE therefore differ only
//! in the pilot-domain filtering step.

use num_complex::Complex64;

use crate::channel::ChannelProfile;
use crate::error::{Error, Result};
use crate::flops::FlopCounter;
use crate::modem::PilotPattern;
use crate::numerics::{lu_solve_counted, CMat, RngStream};

/// Magnitude floor below which an equalizer division is refused and the
/// subcarrier is flagged degenerate.
pub const EQUALIZER_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMethod {
    Ls,
    Mmse,
}

/// A channel estimate defined on every subcarrier, with the raw
/// pilot-position values kept for further filtering.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    method: EstimatorMethod,
    values: Vec<Complex64>,
    pilot_indices: Vec<usize>,
    pilot_values: Vec<Complex64>,
}

impl ChannelEstimate {
    pub fn method(&self) -> EstimatorMethod {
        self.method
    }

    /// Estimate over all subcarriers (interpolated where needed).
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Raw estimate on the pilot subcarriers only.
    pub fn pilot_values(&self) -> &[Complex64] {
        &self.pilot_values
    }

    pub fn pilot_indices(&self) -> &[usize] {
        &self.pilot_indices
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Channel correlation over the pilot subcarriers, computed analytically
/// from the power-delay profile: R[k, m] = sum_l p_l e^{-i 2 pi l (k-m)/N}.
/// Hermitian positive semidefinite by construction.
#[derive(Debug, Clone)]
pub struct CorrelationModel {
    r_hh: CMat,
    pilot_indices: Vec<usize>,
}

impl CorrelationModel {
    pub fn analytic(profile: &ChannelProfile, n_subcarriers: usize, pattern: &PilotPattern) -> Self {
        let idx = pattern.pilot_indices().to_vec();
        let np = idx.len();
        let r_hh = CMat::from_fn(np, np, |a, b| {
            let delta = idx[a] as f64 - idx[b] as f64;
            profile
                .pdp
                .iter()
                .enumerate()
                .map(|(l, &p)| {
                    let ang = -std::f64::consts::TAU * l as f64 * delta / n_subcarriers as f64;
                    Complex64::new(p * ang.cos(), p * ang.sin())
                })
                .sum()
        });
        Self {
            r_hh,
            pilot_indices: idx,
        }
    }

    /// Identity correlation (uncorrelated subcarriers), mainly for analytic
    /// shrinkage checks.
    pub fn identity(pattern: &PilotPattern) -> Self {
        Self {
            r_hh: CMat::identity(pattern.pilot_indices().len()),
            pilot_indices: pattern.pilot_indices().to_vec(),
        }
    }

    /// Sample covariance over `draws` fresh unit-power realizations; the
    /// empirical fallback when no profile is trusted.
    pub fn empirical(
        profile: &ChannelProfile,
        n_subcarriers: usize,
        pattern: &PilotPattern,
        draws: usize,
        rng: &mut RngStream,
    ) -> Result<Self> {
        let idx = pattern.pilot_indices().to_vec();
        let np = idx.len();
        let mut acc = CMat::zeros(np, np);
        for _ in 0..draws {
            let real = crate::channel::draw_realization(profile, &[1.0], n_subcarriers, rng)?;
            let h = real.unit_freq(0);
            for a in 0..np {
                for b in 0..np {
                    let v = h[idx[a]] * h[idx[b]].conj();
                    acc[(a, b)] += v;
                }
            }
        }
        acc.scale(1.0 / draws as f64);
        Ok(Self {
            r_hh: acc,
            pilot_indices: idx,
        })
    }

    pub fn r_hh(&self) -> &CMat {
        &self.r_hh
    }
}

/// LS estimate: elementwise division of received by transmitted pilots,
/// then interpolation to the full band.
pub fn ls_estimate(received_pilot_symbol: &[Complex64], pattern: &PilotPattern) -> Result<ChannelEstimate> {
    ls_estimate_counted(received_pilot_symbol, pattern, None)
}

pub fn ls_estimate_counted(
    received_pilot_symbol: &[Complex64],
    pattern: &PilotPattern,
    mut counter: Option<&mut FlopCounter>,
) -> Result<ChannelEstimate> {
    let n = pattern.n_subcarriers();
    if received_pilot_symbol.len() != n {
        return Err(Error::DimMismatch(format!(
            "received pilot symbol has {} entries for {n} subcarriers",
            received_pilot_symbol.len()
        )));
    }
    let mut pilot_values = Vec::with_capacity(pattern.pilot_indices().len());
    for (&k, &xp) in pattern.pilot_indices().iter().zip(pattern.pilot_values()) {
        if xp.norm_sqr() == 0.0 {
            return Err(Error::ZeroPilot(k));
        }
        pilot_values.push(received_pilot_symbol[k] / xp);
    }
    if let Some(cnt) = counter.as_deref_mut() {
        cnt.complex_div += pilot_values.len() as u64;
    }
    let values = interpolate(pattern.pilot_indices(), &pilot_values, n, counter);
    Ok(ChannelEstimate {
        method: EstimatorMethod::Ls,
        values,
        pilot_indices: pattern.pilot_indices().to_vec(),
        pilot_values,
    })
}

/// MMSE (Wiener) filtering of an LS estimate:
/// H_mmse = R_hh (R_hh + I / gamma)^{-1} H_ls on the pilot positions,
/// followed by the same interpolation as LS. The inner system is solved,
/// never inverted explicitly, and the factorization runs on every call so
/// operation counts reflect the full solve.
pub fn mmse_estimate(
    ls: &ChannelEstimate,
    corr: &CorrelationModel,
    snr_linear: f64,
) -> Result<ChannelEstimate> {
    mmse_estimate_counted(ls, corr, snr_linear, None)
}

pub fn mmse_estimate_counted(
    ls: &ChannelEstimate,
    corr: &CorrelationModel,
    snr_linear: f64,
    mut counter: Option<&mut FlopCounter>,
) -> Result<ChannelEstimate> {
    assert!(snr_linear > 0.0, "MMSE needs a positive SNR");
    let np = corr.pilot_indices.len();
    if ls.pilot_values.len() != np {
        return Err(Error::DimMismatch(format!(
            "correlation model covers {np} pilots, estimate has {}",
            ls.pilot_values.len()
        )));
    }
    // A = R + I / gamma stays Hermitian positive definite for gamma > 0.
    let mut a = corr.r_hh.clone();
    let reg = 1.0 / snr_linear;
    for i in 0..np {
        a[(i, i)] += reg;
    }
    let rhs = CMat::column(&ls.pilot_values);
    let w = lu_solve_counted(&a, &rhs, counter.as_deref_mut())
        .map_err(|_| Error::Singular("mmse_estimate"))?;
    let filtered = corr.r_hh.mul(&w)?;
    if let Some(cnt) = counter.as_deref_mut() {
        cnt.complex_mul += (np * np) as u64;
        cnt.complex_add += (np * np) as u64;
    }
    let pilot_values: Vec<Complex64> = (0..np).map(|i| filtered[(i, 0)]).collect();
    let n = ls.values.len();
    let values = interpolate(&corr.pilot_indices, &pilot_values, n, counter);
    Ok(ChannelEstimate {
        method: EstimatorMethod::Mmse,
        values,
        pilot_indices: corr.pilot_indices.clone(),
        pilot_values,
    })
}

/// Linear interpolation between pilots on real and imaginary parts
/// separately; band edges hold the nearest pilot value.
fn interpolate(
    pilot_indices: &[usize],
    pilot_values: &[Complex64],
    n: usize,
    counter: Option<&mut FlopCounter>,
) -> Vec<Complex64> {
    debug_assert!(!pilot_indices.is_empty());
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let first = pilot_indices[0];
    let last = *pilot_indices.last().unwrap();
    let mut seg = 0usize;
    let mut interp_ops: u64 = 0;
    for (k, slot) in out.iter_mut().enumerate() {
        if k <= first {
            *slot = pilot_values[0];
        } else if k >= last {
            *slot = pilot_values[pilot_values.len() - 1];
        } else {
            while pilot_indices[seg + 1] < k {
                seg += 1;
            }
            let (k0, k1) = (pilot_indices[seg], pilot_indices[seg + 1]);
            if k == k0 {
                *slot = pilot_values[seg];
            } else {
                let t = (k - k0) as f64 / (k1 - k0) as f64;
                let a = pilot_values[seg];
                let b = pilot_values[seg + 1];
                *slot = Complex64::new(a.re + t * (b.re - a.re), a.im + t * (b.im - a.im));
                interp_ops += 1;
            }
        }
    }
    if let Some(cnt) = counter {
        cnt.real_mul += interp_ops * 2;
        cnt.real_add += interp_ops * 4;
    }
    out
}

/// One-tap equalization of a data symbol. Subcarriers whose estimate falls
/// below [`EQUALIZER_FLOOR`] yield zero, which the demapper resolves to the
/// lowest-index constellation point; the returned mask flags them.
pub fn equalize(data_symbol: &[Complex64], est: &ChannelEstimate) -> (Vec<Complex64>, Vec<bool>) {
    equalize_with(data_symbol, &est.values)
}

/// Equalize against an explicit response (perfect-CSI runs use the true
/// channel here).
pub fn equalize_with(data_symbol: &[Complex64], h: &[Complex64]) -> (Vec<Complex64>, Vec<bool>) {
    debug_assert_eq!(data_symbol.len(), h.len());
    let mut out = Vec::with_capacity(data_symbol.len());
    let mut flagged = Vec::with_capacity(data_symbol.len());
    for (&y, &hk) in data_symbol.iter().zip(h) {
        if hk.norm() < EQUALIZER_FLOOR {
            out.push(Complex64::new(0.0, 0.0));
            flagged.push(true);
        } else {
            out.push(y / hk);
            flagged.push(false);
        }
    }
    (out, flagged)
}

pub fn equalize_counted(
    data_symbol: &[Complex64],
    est: &ChannelEstimate,
    counter: &mut FlopCounter,
) -> (Vec<Complex64>, Vec<bool>) {
    counter.complex_div += data_symbol.len() as u64;
    equalize(data_symbol, est)
}

/// Normalized mean square error over S matched estimate/truth pairs:
/// sum_i ||H(i) - H~(i)||^2 divided by S times the mean per-sample energy
/// of the true channel, so a zero estimator scores 1 at any S.
pub fn nmse(truth: &[Vec<Complex64>], estimate: &[Vec<Complex64>]) -> Result<f64> {
    if truth.is_empty() || truth.len() != estimate.len() {
        return Err(Error::DimMismatch(format!(
            "nmse needs matched nonempty sample sets, got {} and {}",
            truth.len(),
            estimate.len()
        )));
    }
    let mut err = 0.0;
    let mut energy = 0.0;
    for (h, hest) in truth.iter().zip(estimate) {
        if h.len() != hest.len() {
            return Err(Error::DimMismatch("nmse sample lengths".into()));
        }
        for (a, b) in h.iter().zip(hest) {
            err += (a - b).norm_sqr();
            energy += a.norm_sqr();
        }
    }
    if energy == 0.0 {
        return Err(Error::DimMismatch("nmse denominator has zero energy".into()));
    }
    Ok(err / energy)
}
