//! Multipath Rayleigh block-fading channel with distance path loss and AWGN.
//!
//! One `ChannelRealization` is drawn per coherence block and reused for every
//! symbol inside it; blocks are independent. Taps are i.i.d. complex Gaussian
//! with variances from the power-delay profile (Rayleigh magnitudes), scaled
//! by the path-loss amplitude sqrt(d^eta) so the frequency response squared
//! magnitude absorbs the loss. With eta = -3, received power decays with
//! distance.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Static description of the propagation environment.
#[derive(Debug, Clone)]
pub struct ChannelProfile {
    /// Per-tap mean powers, nonnegative, summing to one.
    pub pdp: Vec<f64>,
    /// Path-loss exponent eta; received power scales as d^eta.
    pub path_loss_exp: f64,
    pub cell_radius_m: f64,
    /// Users are never placed closer than this to the receiver.
    pub exclusion_radius_m: f64,
    pub coherence_ms: f64,
}

impl ChannelProfile {
    /// Exponential power-delay profile over `taps` taps with the last tap
    /// `decay_db` below the first, normalized to unit total power.
    pub fn exponential(taps: usize, decay_db: f64) -> Self {
        assert!(taps >= 1);
        let kappa = if taps > 1 {
            decay_db * std::f64::consts::LN_10 / (10.0 * (taps - 1) as f64)
        } else {
            0.0
        };
        let mut pdp: Vec<f64> = (0..taps).map(|l| (-kappa * l as f64).exp()).collect();
        let total: f64 = pdp.iter().sum();
        pdp.iter_mut().for_each(|p| *p /= total);
        Self {
            pdp,
            path_loss_exp: -3.0,
            cell_radius_m: 500.0,
            exclusion_radius_m: 10.0,
            coherence_ms: 5.0,
        }
    }

    pub fn taps(&self) -> usize {
        self.pdp.len()
    }

    /// Path-loss power gain d^eta.
    pub fn gain(&self, distance_m: f64) -> f64 {
        distance_m.powf(self.path_loss_exp)
    }
}

/// Per-subcarrier noise power, anchored at the receiver: sigma^2 = P / gamma
/// where P is the average receive power per subcarrier of the user under
/// test and gamma the configured pre-processing SNR.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    variance: f64,
}

impl NoiseSpec {
    pub fn from_snr_db(snr_db: f64, receive_power: f64) -> Result<Self> {
        let gamma = 10f64.powf(snr_db / 10.0);
        let variance = receive_power / gamma;
        if !(variance > 0.0) {
            return Err(Error::NonPositiveNoise(variance));
        }
        Ok(Self { variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// One coherence block's channel state for every user.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Unit-power taps per user, before path loss.
    unit_taps: Vec<Vec<Complex64>>,
    /// Unit-power frequency response per user over the subcarrier grid.
    unit_freq: Vec<Vec<Complex64>>,
    /// Path-loss power gains d_u^eta.
    gains: Vec<f64>,
    distances: Vec<f64>,
}

impl ChannelRealization {
    pub fn users(&self) -> usize {
        self.unit_taps.len()
    }

    pub fn distance(&self, user: usize) -> f64 {
        self.distances[user]
    }

    pub fn gain(&self, user: usize) -> f64 {
        self.gains[user]
    }

    /// Path-loss-scaled taps h_u.
    pub fn taps(&self, user: usize) -> Vec<Complex64> {
        let a = self.gains[user].sqrt();
        self.unit_taps[user].iter().map(|&t| t * a).collect()
    }

    /// Path-loss-scaled frequency response H_u(k).
    pub fn freq(&self, user: usize) -> Vec<Complex64> {
        let a = self.gains[user].sqrt();
        self.unit_freq[user].iter().map(|&h| h * a).collect()
    }

    /// Frequency response of the unit-power (path-loss-free) channel; this
    /// is what a receiver normalized by the known mean receive amplitude
    /// estimates.
    pub fn unit_freq(&self, user: usize) -> &[Complex64] {
        &self.unit_freq[user]
    }

    pub fn unit_taps(&self, user: usize) -> &[Complex64] {
        &self.unit_taps[user]
    }
}

/// Frequency response of taps over `n` subcarriers:
/// H(k) = sum_l h_l e^{-i 2 pi k l / n}. Equals sqrt(n) times the unitary
/// DFT of the zero-padded taps.
pub fn freq_response(taps: &[Complex64], n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            taps.iter()
                .enumerate()
                .map(|(l, &t)| {
                    let ang = -std::f64::consts::TAU * (k * l % n) as f64 / n as f64;
                    t * Complex64::new(ang.cos(), ang.sin())
                })
                .sum()
        })
        .collect()
}

/// Draw one realization for every user distance. `n_subcarriers` fixes the
/// frequency grid of the stored response.
pub fn draw_realization(
    profile: &ChannelProfile,
    distances: &[f64],
    n_subcarriers: usize,
    rng: &mut RngStream,
) -> Result<ChannelRealization> {
    if distances.is_empty() {
        return Err(Error::EmptyInput("draw_realization"));
    }
    let mut unit_taps = Vec::with_capacity(distances.len());
    let mut unit_freq = Vec::with_capacity(distances.len());
    let mut gains = Vec::with_capacity(distances.len());
    for &d in distances {
        let taps: Vec<Complex64> = profile
            .pdp
            .iter()
            .map(|&p| rng.complex_gaussian(p))
            .collect();
        unit_freq.push(freq_response(&taps, n_subcarriers));
        unit_taps.push(taps);
        gains.push(profile.gain(d));
    }
    Ok(ChannelRealization {
        unit_taps,
        unit_freq,
        gains,
        distances: distances.to_vec(),
    })
}

/// Linear convolution of a time-domain signal with one user's scaled taps,
/// no noise. Output length |x| + taps - 1.
pub fn filter_time(real: &ChannelRealization, user: usize, x: &[Complex64]) -> Result<Vec<Complex64>> {
    if x.is_empty() {
        return Err(Error::EmptyInput("filter_time"));
    }
    crate::numerics::convolve(x, &real.taps(user))
}

/// Add CN(0, sigma^2) samples in place.
pub fn add_noise(y: &mut [Complex64], noise: &NoiseSpec, rng: &mut RngStream) {
    for v in y.iter_mut() {
        *v += rng.complex_gaussian(noise.variance);
    }
}

/// The full time-domain channel: convolution with the user's taps plus AWGN.
pub fn apply(
    real: &ChannelRealization,
    user: usize,
    x: &[Complex64],
    noise: &NoiseSpec,
    rng: &mut RngStream,
) -> Result<Vec<Complex64>> {
    let mut y = filter_time(real, user, x)?;
    add_noise(&mut y, noise, rng);
    Ok(y)
}

/// Frequency-domain fast path for one OFDM symbol: Y = X .* H + Z. Valid
/// only when the cyclic prefix covers the channel memory; the time-domain
/// path is the reference it must agree with.
pub fn apply_frequency_domain(
    spectrum: &[Complex64],
    h: &[Complex64],
    noise: &NoiseSpec,
    rng: &mut RngStream,
) -> Vec<Complex64> {
    spectrum
        .iter()
        .zip(h)
        .map(|(&x, &hk)| x * hk + rng.complex_gaussian(noise.variance))
        .collect()
}

/// Distances of `u` users placed uniformly over the cell disk, excluding a
/// small radius around the receiver so path gains stay finite.
pub fn place_users(profile: &ChannelProfile, u: usize, rng: &mut RngStream) -> Vec<f64> {
    assert!(u >= 1);
    let r0 = profile.exclusion_radius_m;
    let r1 = profile.cell_radius_m;
    (0..u)
        .map(|_| (r0 * r0 + rng.uniform() * (r1 * r1 - r0 * r0)).sqrt())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dft;

    fn profile8() -> ChannelProfile {
        ChannelProfile::exponential(8, 20.0)
    }

    #[test]
    fn pdp_is_normalized_and_decays_20db() {
        let p = profile8();
        assert!((p.pdp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let ratio = 10.0 * (p.pdp[7] / p.pdp[0]).log10();
        assert!((ratio + 20.0).abs() < 1e-9);
    }

    #[test]
    fn single_tap_profile_is_flat_in_frequency() {
        let profile = ChannelProfile::exponential(1, 0.0);
        let mut rng = RngStream::new(61, 0);
        let real = draw_realization(&profile, &[100.0], 64, &mut rng).unwrap();
        let h = real.unit_freq(0);
        let mag = h[0].norm();
        for v in h {
            assert!((v.norm() - mag).abs() < 1e-12);
        }
    }

    #[test]
    fn stored_response_matches_dft_of_padded_taps() {
        let mut rng = RngStream::new(62, 0);
        let real = draw_realization(&profile8(), &[250.0], 64, &mut rng).unwrap();
        let mut padded = real.unit_taps(0).to_vec();
        padded.resize(64, Complex64::new(0.0, 0.0));
        let via_dft: Vec<Complex64> = dft(&padded)
            .unwrap()
            .into_iter()
            .map(|v| v * 8.0) // sqrt(64)
            .collect();
        for (a, b) in real.unit_freq(0).iter().zip(&via_dft) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn mean_tap_energy_is_one() {
        let profile = profile8();
        let mut rng = RngStream::new(63, 0);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let real = draw_realization(&profile, &[100.0], 8, &mut rng).unwrap();
            acc += real.unit_taps(0).iter().map(|t| t.norm_sqr()).sum::<f64>();
        }
        assert!((acc / n as f64 - 1.0).abs() < 0.01);
    }

    #[test]
    fn subcarrier_gain_is_unit_exponential() {
        // |H(k)|^2 should be Exp(1): Kolmogorov-Smirnov at the 1% level.
        let profile = profile8();
        let mut rng = RngStream::new(64, 0);
        let n = 100_000;
        let mut samples: Vec<f64> = (0..n)
            .map(|_| {
                let real = draw_realization(&profile, &[100.0], 8, &mut rng).unwrap();
                real.unit_freq(0)[3].norm_sqr()
            })
            .collect();
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d: f64 = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            let cdf = 1.0 - (-x).exp();
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            d = d.max((cdf - lo).abs()).max((cdf - hi).abs());
        }
        // 1% critical value for the KS statistic is 1.63 / sqrt(n).
        assert!(d * (n as f64).sqrt() < 1.63, "KS {d}");
    }

    #[test]
    fn identity_channel_without_noise_is_transparent() {
        let profile = ChannelProfile::exponential(1, 0.0);
        let mut rng = RngStream::new(65, 0);
        // Manufacture a deterministic single unit tap.
        let mut real = draw_realization(&profile, &[1.0], 8, &mut rng).unwrap();
        real.unit_taps[0] = vec![Complex64::new(1.0, 0.0)];
        real.unit_freq[0] = freq_response(&real.unit_taps[0], 8);
        real.gains[0] = 1.0;
        let x: Vec<Complex64> = (0..16).map(|i| Complex64::new(i as f64, -(i as f64))).collect();
        let y = filter_time(&real, 0, &x).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn frequency_path_agrees_with_time_path_when_cp_covers_taps() {
        use crate::modem::{build_frame, strip_cp_and_dft, to_time_domain, FrameLayout, PilotPattern, QamConstellation};
        let mut rng = RngStream::new(66, 0);
        let c = QamConstellation::new(4).unwrap();
        let pattern = PilotPattern::block(64, &mut rng);
        let layout = FrameLayout::full_band(64, 0.25, 1, 1.0);
        let bits: Vec<u8> = (0..layout.payload_bits(&c)).map(|_| (rng.next_u64() & 1) as u8).collect();
        let frame = build_frame(&bits, &pattern, &c, &layout).unwrap();
        let real = draw_realization(&profile8(), &[100.0], 64, &mut rng).unwrap();

        let time = to_time_domain(&frame).unwrap();
        let rx_time = filter_time(&real, 0, &time).unwrap();
        let grid = strip_cp_and_dft(&rx_time, &layout).unwrap();

        let h = real.freq(0);
        for s in 0..grid.rows() {
            for k in 0..64 {
                let expect = frame.grid()[(s, k)] * h[k];
                assert!((grid[(s, k)] - expect).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn measured_snr_matches_configuration() {
        // gamma = 15 dB anchored on the receive power of a user at 200 m.
        let profile = profile8();
        let mut rng = RngStream::new(67, 0);
        let d = 200.0;
        let total_power = 1e-3;
        let n_data = 64.0;
        let p_rx = profile.gain(d) * total_power / n_data;
        let noise = NoiseSpec::from_snr_db(15.0, p_rx).unwrap();
        let amp = (total_power / n_data).sqrt();
        let mut sig = 0.0;
        let mut noi = 0.0;
        let uses = 100_000;
        for _ in 0..uses {
            let real = draw_realization(&profile, &[d], 8, &mut rng).unwrap();
            let h = real.freq(0)[0];
            let x = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2);
            sig += (x * amp * h).norm_sqr();
            noi += rng.complex_gaussian(noise.variance()).norm_sqr();
        }
        let snr_db = 10.0 * (sig / noi).log10();
        assert!((snr_db - 15.0).abs() < 0.1, "measured {snr_db} dB");
    }

    #[test]
    fn doubling_distance_scales_power_by_two_to_the_eta() {
        let profile = profile8();
        let mut rng = RngStream::new(68, 0);
        let draws = 10_000;
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        for _ in 0..draws {
            let real = draw_realization(&profile, &[150.0, 300.0], 8, &mut rng).unwrap();
            p1 += real.taps(0).iter().map(|t| t.norm_sqr()).sum::<f64>();
            p2 += real.taps(1).iter().map(|t| t.norm_sqr()).sum::<f64>();
        }
        let ratio = p2 / p1;
        let expect = 2f64.powf(profile.path_loss_exp);
        assert!((ratio / expect - 1.0).abs() < 0.01, "ratio {ratio} vs {expect}");
    }

    #[test]
    fn noise_is_uncorrelated_across_subcarriers() {
        let mut rng = RngStream::new(69, 0);
        let noise = NoiseSpec::from_snr_db(10.0, 1.0).unwrap();
        let frames = 100_000;
        let mut cross = Complex64::new(0.0, 0.0);
        let mut power = 0.0;
        for _ in 0..frames {
            let z0 = rng.complex_gaussian(noise.variance());
            let z1 = rng.complex_gaussian(noise.variance());
            cross += z0 * z1.conj();
            power += z0.norm_sqr();
        }
        let bound = 3.0 * power / (frames as f64).sqrt() / frames as f64;
        assert!((cross / frames as f64).norm() < bound);
    }

    #[test]
    fn realizations_are_independent_across_blocks() {
        let profile = profile8();
        let mut rng = RngStream::new(70, 0);
        let blocks = 10_000;
        let mut prev = Complex64::new(0.0, 0.0);
        let mut lag1 = Complex64::new(0.0, 0.0);
        let mut var = 0.0;
        for b in 0..blocks {
            let real = draw_realization(&profile, &[100.0], 8, &mut rng).unwrap();
            let h = real.unit_freq(0)[0];
            if b > 0 {
                lag1 += h * prev.conj();
            }
            var += h.norm_sqr();
            prev = h;
        }
        let bound = 3.0 * (var / blocks as f64) / (blocks as f64).sqrt();
        assert!((lag1 / (blocks - 1) as f64).norm() < bound);
    }

    #[test]
    fn users_fill_the_disk_annulus() {
        let profile = profile8();
        let mut rng = RngStream::new(71, 0);
        let d = place_users(&profile, 4, &mut rng);
        assert_eq!(d.len(), 4);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let d = place_users(&profile, 1, &mut rng)[0];
            assert!(d >= profile.exclusion_radius_m && d <= profile.cell_radius_m);
            acc += d * d;
        }
        let mean_d2 = acc / draws as f64;
        let expect = (profile.cell_radius_m.powi(2) + profile.exclusion_radius_m.powi(2)) / 2.0;
        assert!((mean_d2 / expect - 1.0).abs() < 0.01, "mean d^2 {mean_d2}");
    }

    #[test]
    fn equal_distances_give_equal_receive_power() {
        let profile = profile8();
        assert_eq!(profile.gain(123.0), profile.gain(123.0));
        let noise = NoiseSpec::from_snr_db(10.0, profile.gain(123.0));
        assert!(noise.is_ok());
    }

    #[test]
    fn empty_distances_are_rejected() {
        let mut rng = RngStream::new(72, 0);
        assert!(draw_realization(&profile8(), &[], 8, &mut rng).is_err());
    }
}
