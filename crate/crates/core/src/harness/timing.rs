//! Wall-clock timing of detector inference.
//!
//! Protocol: warm-up passes first, then repetitions of a small inner batch
//! whose elapsed time is divided by the batch size, which keeps individual
//! measurements well above timer resolution. Reported values are medians
//! with the interquartile range; absolute numbers are hardware-bound and
//! never asserted against anything.

use std::time::Instant;

use crate::elm::{ElmBank, ElmConfig};
use crate::error::{Error, Result};
use crate::harness::campaign::TrainedDetectors;
use crate::harness::config::ExperimentConfig;
use crate::harness::link::{self, lane, simulate_frame, LinkScenario, TrialStreams};
use crate::neural;

#[derive(Debug, Clone, Copy)]
pub struct TimingStats {
    pub median_ms: f64,
    pub iqr_ms: f64,
    pub reps: usize,
}

fn summarize(mut samples: Vec<f64>) -> TimingStats {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len();
    let q = |f: f64| samples[((n as f64 * f) as usize).min(n - 1)];
    TimingStats {
        median_ms: q(0.5),
        iqr_ms: q(0.75) - q(0.25),
        reps: n,
    }
}

fn time_reps(reps: usize, batch: usize, mut f: impl FnMut()) -> TimingStats {
    // Warm-up.
    for _ in 0..batch.max(4) {
        f();
    }
    let samples: Vec<f64> = (0..reps)
        .map(|_| {
            let t0 = Instant::now();
            for _ in 0..batch {
                f();
            }
            t0.elapsed().as_secs_f64() * 1e3 / batch as f64
        })
        .collect();
    summarize(samples)
}

/// Per-frame detection time of the MLP receiver on a single OFDM frame.
pub fn time_dnn(sc: &LinkScenario, det: &link::DnnDetector, snr_db: f64, reps: usize) -> Result<TimingStats> {
    let mut streams = TrialStreams::new(sc.seed, lane::PROBE, 1);
    let frame = simulate_frame(sc, snr_db, &mut streams)?;
    let features = neural::frame_features(&frame.rx_grid);
    Ok(time_reps(reps, 16, || {
        for model in &det.instances {
            let _ = model.forward(&features).unwrap();
        }
    }))
}

/// ELM timing under the measurement protocol: I = 100 pilots and K = 1
/// data symbol across the whole band. Returns (training, detection) stats;
/// training includes the per-subnet pseudoinverse.
pub fn time_elm(
    sc: &LinkScenario,
    base: &ElmConfig,
    snr_db: f64,
    reps: usize,
) -> Result<(TimingStats, TimingStats)> {
    let elm_cfg = ElmConfig {
        pilots: 100,
        data: 1,
        ..*base
    };
    // One representative block, fixed draws.
    let mut bank = ElmBank::new(sc.n_subcarriers, elm_cfg, sc.seed);
    link::run_elm_block(sc, &elm_cfg, &mut bank, snr_db, lane::PROBE, 2, None)?;

    // Rebuild the block's per-subcarrier matrices once, then time the two
    // stages separately on fixed inputs.
    let blocks = elm_probe_blocks(sc, &elm_cfg, snr_db)?;
    let mut train_bank = bank.clone();
    let train = time_reps(reps, 4, || {
        train_bank.train(&blocks.rx_pilots, &blocks.tx_pilots).unwrap();
    });
    // Detection is microseconds per block; a large inner batch keeps each
    // sample well above scheduler noise.
    let detect = time_reps(reps, 64, || {
        let _ = train_bank.detect(&blocks.rx_data).unwrap();
    });
    Ok((train, detect))
}

struct ElmProbeBlocks {
    rx_pilots: Vec<crate::numerics::RMat>,
    tx_pilots: Vec<crate::numerics::RMat>,
    rx_data: Vec<crate::numerics::RMat>,
}

fn elm_probe_blocks(
    sc: &LinkScenario,
    elm_cfg: &ElmConfig,
    snr_db: f64,
) -> Result<ElmProbeBlocks> {
    use crate::channel::{self, NoiseSpec};
    use crate::numerics::{CMat, RMat, RngStream};

    let n = sc.n_subcarriers;
    let mut streams = TrialStreams::new(sc.seed, lane::PROBE, 3);
    let mut pilot_rng = RngStream::new(sc.seed, link::stream_id(link::purpose::ELM_PILOT, lane::PROBE, 3));
    let c = &sc.constellation;
    let symbols = elm_cfg.pilots + elm_cfg.data;
    let mut grid = CMat::zeros(symbols, n);
    for s in 0..symbols {
        for k in 0..n {
            let label = pilot_rng.below(c.order() as u64) as usize;
            grid[(s, k)] = c.point_for_label(label);
        }
    }
    let distances = channel::place_users(&sc.profile, 1, &mut streams.place);
    let real = channel::draw_realization(&sc.profile, &distances, n, &mut streams.channel)?;
    let noise = NoiseSpec::from_snr_db(snr_db, 1.0)?;
    let h = real.unit_freq(0);
    let mut rx = CMat::zeros(symbols, n);
    for s in 0..symbols {
        for k in 0..n {
            rx[(s, k)] = grid[(s, k)] * h[k] + streams.noise.complex_gaussian(noise.variance());
        }
    }
    let col = |m: &CMat, rows: std::ops::Range<usize>, k: usize| {
        let mut out = RMat::zeros(rows.len(), 2);
        for (r, s) in rows.enumerate() {
            out[(r, 0)] = m[(s, k)].re;
            out[(r, 1)] = m[(s, k)].im;
        }
        out
    };
    Ok(ElmProbeBlocks {
        rx_pilots: (0..n).map(|k| col(&rx, 0..elm_cfg.pilots, k)).collect(),
        tx_pilots: (0..n).map(|k| col(&grid, 0..elm_cfg.pilots, k)).collect(),
        rx_data: (0..n)
            .map(|k| col(&rx, elm_cfg.pilots..symbols, k))
            .collect(),
    })
}

/// Classical per-frame detection time (estimate + equalize + demap).
pub fn time_classical(
    sc: &LinkScenario,
    detector: &str,
    snr_db: f64,
    reps: usize,
) -> Result<TimingStats> {
    let mut streams = TrialStreams::new(sc.seed, lane::PROBE, 4);
    let frame = simulate_frame(sc, snr_db, &mut streams)?;
    match detector {
        "perfect" => Ok(time_reps(reps, 64, || {
            let _ = link::detect_perfect(sc, &frame);
        })),
        "ls" => Ok(time_reps(reps, 64, || {
            let _ = link::detect_ls(sc, &frame).unwrap();
        })),
        "mmse" => Ok(time_reps(reps, 16, || {
            let _ = link::detect_mmse(sc, &frame, snr_db).unwrap();
        })),
        other => Err(Error::Config(format!("cannot time detector '{other}'"))),
    }
}

/// One-number helper for filling the optional campaign column.
pub fn quick_median_ms(
    cfg: &ExperimentConfig,
    sc: &LinkScenario,
    trained: &TrainedDetectors,
    detector: &str,
    snr_db: f64,
) -> Result<f64> {
    let stats = match detector {
        "perfect" | "ls" | "mmse" => time_classical(sc, detector, snr_db, 11)?,
        "dnn" => {
            let det = trained
                .dnn
                .as_ref()
                .ok_or_else(|| Error::Config("timing dnn without a model".into()))?;
            time_dnn(sc, det, snr_db, 11)?
        }
        "elm" => {
            let elm_cfg = ElmConfig {
                hidden: cfg.elm.hidden,
                pilots: cfg.elm.pilots,
                data: cfg.elm.data_symbols,
                normalize: cfg.elm.normalize,
            };
            time_elm(sc, &elm_cfg, snr_db, 5)?.1
        }
        _ => return Err(Error::Config(format!("cannot time detector '{detector}'"))),
    };
    Ok(stats.median_ms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;

    #[test]
    fn elm_detection_is_faster_than_training_and_stable() {
        let cfg = ExperimentConfig::default();
        let sc = LinkScenario::from_config(&cfg).unwrap();
        let elm_cfg = ElmConfig::default();
        let (train, detect) = time_elm(&sc, &elm_cfg, 15.0, 21).unwrap();
        assert!(train.median_ms.is_finite() && train.median_ms > 0.0);
        assert!(detect.median_ms.is_finite() && detect.median_ms > 0.0);
        // Training includes 64 pseudoinverses; detection is 64 small mat-vecs.
        assert!(
            detect.median_ms < train.median_ms,
            "detect {} vs train {}",
            detect.median_ms,
            train.median_ms
        );
        assert!(
            detect.iqr_ms / detect.median_ms < 0.5,
            "detect IQR/median {}",
            detect.iqr_ms / detect.median_ms
        );
    }

    #[test]
    fn classical_timing_reports_positive_medians() {
        let cfg = ExperimentConfig::default();
        let sc = LinkScenario::from_config(&cfg).unwrap();
        for det in ["perfect", "ls", "mmse"] {
            let stats = time_classical(&sc, det, 15.0, 9).unwrap();
            assert!(stats.median_ms > 0.0 && stats.median_ms.is_finite());
        }
    }
}
