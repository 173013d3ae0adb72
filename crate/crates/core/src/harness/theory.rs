//! Closed-form average BER over the Rayleigh fading channel.

use crate::error::Result;
use crate::modem::QamConstellation;

/// Average BER of nearest-neighbor M-QAM detection over a unit-power
/// Rayleigh channel at pre-processing SNR gamma (per subcarrier):
///
///   BER = (alpha_M / 2) * [1 - sqrt(0.5 beta_M gamma / (1 + 0.5 beta_M gamma))]
///
/// with alpha_M and beta_M the nearest-neighbor constants of the realized
/// constellation. For 4-QAM (alpha = beta = 1) this reduces to
/// (1/2) [1 - sqrt(gamma_b / (1 + gamma_b))] with gamma_b = gamma / 2.
pub fn theoretical_ber(snr_db: f64, order: usize) -> Result<f64> {
    let c = QamConstellation::new(order)?;
    let gamma = 10f64.powf(snr_db / 10.0);
    assert!(gamma > 0.0);
    let x = 0.5 * c.beta() * gamma;
    Ok(c.alpha() / 2.0 * (1.0 - (x / (1.0 + x)).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qam4_low_snr_limit_is_one_half() {
        let ber = theoretical_ber(-100.0, 4).unwrap();
        assert!((ber - 0.5).abs() < 1e-4);
    }

    #[test]
    fn qam4_at_10db_matches_direct_evaluation() {
        // gamma = 10, gamma_b = 5: (1/2)(1 - sqrt(5/6)) = 0.0435607...
        let ber = theoretical_ber(10.0, 4).unwrap();
        let direct = 0.5 * (1.0 - (5.0f64 / 6.0).sqrt());
        assert!((ber - direct).abs() < 1e-15);
        assert!((ber - 0.0434).abs() < 2e-4);
    }

    #[test]
    fn qam4_high_snr_matches_quarter_over_gamma_b() {
        let snr_db = 40.0;
        let gamma_b = 10f64.powf(snr_db / 10.0) / 2.0;
        let asymptote = 0.25 / gamma_b;
        let ber = theoretical_ber(snr_db, 4).unwrap();
        assert!((ber - asymptote).abs() / asymptote < 0.05);
    }

    #[test]
    fn higher_orders_are_worse_at_equal_snr() {
        let b4 = theoretical_ber(15.0, 4).unwrap();
        let b16 = theoretical_ber(15.0, 16).unwrap();
        let b32 = theoretical_ber(15.0, 32).unwrap();
        assert!(b4 < b16 && b16 < b32);
    }

    #[test]
    fn unsupported_order_is_an_error() {
        assert!(theoretical_ber(10.0, 8).is_err());
    }
}
