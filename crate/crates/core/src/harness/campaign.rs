//! Monte Carlo campaigns over the SNR grid.
//!
//! Trials are embarrassingly parallel: each gets its own RNG streams from
//! (seed, lane, trial), work is chunked at a fixed size, and per-chunk
//! partials are folded in chunk order, so a campaign's output depends only
//! on (config, seed) — never on the thread count or scheduling.

use rayon::prelude::*;

use crate::elm::{ElmBank, ElmConfig};
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::link::{
    self, lane, probe_detector_flops, simulate_frame, DnnDetector, LinkScenario, NmseSample,
    TrialStreams,
};
use crate::harness::metrics::{count_bit_errors, BerAccumulator, MetricRecord};
use crate::harness::theory::theoretical_ber;

/// Fixed chunking so floating-point accumulation order is reproducible.
const TRIAL_CHUNK: usize = 32;

/// Detectors that need offline training before the campaign.
#[derive(Default)]
pub struct TrainedDetectors {
    pub dnn: Option<DnnDetector>,
}

struct FrameDetectorSet {
    perfect: bool,
    ls: bool,
    mmse: bool,
    dnn: bool,
}

#[derive(Default, Clone)]
struct ChunkAccum {
    perfect: BerAccumulator,
    ls: BerAccumulator,
    mmse: BerAccumulator,
    dnn: BerAccumulator,
    ls_nmse: NmseSample,
    mmse_nmse: NmseSample,
    /// Per-trial (ls, mmse) NMSE pairs for the verbose estimate export.
    estimates: Vec<(u64, f64, f64)>,
}

impl ChunkAccum {
    fn merge(&mut self, other: ChunkAccum) {
        self.perfect.merge(&other.perfect);
        self.ls.merge(&other.ls);
        self.mmse.merge(&other.mmse);
        self.dnn.merge(&other.dnn);
        self.ls_nmse.err += other.ls_nmse.err;
        self.ls_nmse.energy += other.ls_nmse.energy;
        self.mmse_nmse.err += other.mmse_nmse.err;
        self.mmse_nmse.energy += other.mmse_nmse.energy;
        self.estimates.extend(other.estimates);
    }
}

/// Run the configured campaign and return one record per
/// (detector, SNR point), in configured detector order then ascending SNR.
pub fn run_campaign(
    cfg: &ExperimentConfig,
    trained: &TrainedDetectors,
) -> Result<Vec<MetricRecord>> {
    let sc = LinkScenario::from_config(cfg)?;
    let run_id = cfg.run_id();
    let elm_cfg = ElmConfig {
        hidden: cfg.elm.hidden,
        pilots: cfg.elm.pilots,
        data: cfg.elm.data_symbols,
        normalize: cfg.elm.normalize,
    };

    let wants = |name: &str| cfg.run.detectors.iter().any(|d| d == name);
    if wants("dnn") && trained.dnn.is_none() {
        return Err(Error::Config(
            "campaign requests the dnn detector but no trained model was supplied".into(),
        ));
    }
    let set = FrameDetectorSet {
        perfect: wants("perfect"),
        ls: wants("ls"),
        mmse: wants("mmse"),
        dnn: wants("dnn"),
    };

    let mut per_snr: Vec<(f64, ChunkAccum, Option<BerAccumulator>)> = Vec::new();
    for (snr_idx, &snr_db) in cfg.system.snr_db.iter().enumerate() {
        let frame_acc = if set.perfect || set.ls || set.mmse || set.dnn {
            run_frame_trials(&sc, cfg, trained, &set, snr_idx, snr_db)?
        } else {
            ChunkAccum::default()
        };
        let elm_acc = if wants("elm") {
            Some(run_elm_trials(&sc, cfg, &elm_cfg, snr_idx, snr_db)?)
        } else {
            None
        };
        per_snr.push((snr_db, frame_acc, elm_acc));
    }

    // Assemble rows in detector order, then SNR order.
    let mut records = Vec::new();
    for det in &cfg.run.detectors {
        for (snr_idx, (snr_db, frame, elm)) in per_snr.iter().enumerate() {
            let snr_db = *snr_db;
            let record = match det.as_str() {
                "theory" => MetricRecord {
                    run_id: run_id.clone(),
                    scenario: cfg.scenario.clone(),
                    detector: det.clone(),
                    snr_db,
                    ber: theoretical_ber(snr_db, cfg.system.modulation)?,
                    ber_ci95: 0.0,
                    nmse: None,
                    flops: 0,
                    inference_ms: None,
                    trials: 0,
                },
                "perfect" | "ls" | "mmse" | "dnn" => {
                    let (acc, nmse) = match det.as_str() {
                        "perfect" => (&frame.perfect, None),
                        "ls" => (
                            &frame.ls,
                            Some(frame.ls_nmse.err / frame.ls_nmse.energy.max(f64::MIN_POSITIVE)),
                        ),
                        "mmse" => (
                            &frame.mmse,
                            Some(
                                frame.mmse_nmse.err
                                    / frame.mmse_nmse.energy.max(f64::MIN_POSITIVE),
                            ),
                        ),
                        _ => (&frame.dnn, None),
                    };
                    MetricRecord {
                        run_id: run_id.clone(),
                        scenario: cfg.scenario.clone(),
                        detector: det.clone(),
                        snr_db,
                        ber: acc.ber(),
                        ber_ci95: acc.ci95_half_width(),
                        nmse,
                        flops: probe_detector_flops(
                            &sc,
                            &elm_cfg,
                            trained.dnn.as_ref(),
                            det,
                            snr_db,
                        )?,
                        inference_ms: measure_time(cfg, &sc, trained, det, snr_db)?,
                        trials: acc.frames(),
                    }
                }
                "elm" => {
                    let acc = elm.as_ref().expect("elm accumulator present");
                    MetricRecord {
                        run_id: run_id.clone(),
                        scenario: cfg.scenario.clone(),
                        detector: det.clone(),
                        snr_db,
                        ber: acc.ber(),
                        ber_ci95: acc.ci95_half_width(),
                        nmse: None,
                        flops: probe_detector_flops(
                            &sc,
                            &elm_cfg,
                            trained.dnn.as_ref(),
                            det,
                            snr_db,
                        )?,
                        inference_ms: measure_time(cfg, &sc, trained, det, snr_db)?,
                        trials: acc.frames(),
                    }
                }
                other => return Err(Error::Config(format!("unknown detector '{other}'"))),
            };
            records.push(record);
            let _ = snr_idx;
        }
    }
    Ok(records)
}

fn measure_time(
    cfg: &ExperimentConfig,
    sc: &LinkScenario,
    trained: &TrainedDetectors,
    det: &str,
    snr_db: f64,
) -> Result<Option<f64>> {
    if !cfg.run.measure_time {
        return Ok(None);
    }
    crate::harness::timing::quick_median_ms(cfg, sc, trained, det, snr_db).map(Some)
}

fn run_frame_trials(
    sc: &LinkScenario,
    cfg: &ExperimentConfig,
    trained: &TrainedDetectors,
    set: &FrameDetectorSet,
    snr_idx: usize,
    snr_db: f64,
) -> Result<ChunkAccum> {
    let trials = cfg.run.trials;
    let verbose = cfg.run.verbose;
    let chunk_starts: Vec<usize> = (0..trials).step_by(TRIAL_CHUNK).collect();
    let partials: Result<Vec<ChunkAccum>> = chunk_starts
        .par_iter()
        .map(|&start| {
            let end = (start + TRIAL_CHUNK).min(trials);
            let mut acc = ChunkAccum::default();
            for trial in start..end {
                let mut streams = TrialStreams::new(sc.seed, snr_idx as u64, trial as u64);
                let frame = simulate_frame(sc, snr_db, &mut streams)?;
                let bits = frame.bits.len() as u64;
                if set.perfect {
                    let decided = link::detect_perfect(sc, &frame);
                    acc.perfect.push(count_bit_errors(&decided, &frame.bits), bits);
                }
                let mut trial_nmse = (f64::NAN, f64::NAN);
                if set.ls || set.mmse {
                    let (decided, nmse) = link::detect_ls(sc, &frame)?;
                    if set.ls {
                        acc.ls.push(count_bit_errors(&decided, &frame.bits), bits);
                        acc.ls_nmse.err += nmse.err;
                        acc.ls_nmse.energy += nmse.energy;
                        trial_nmse.0 = nmse.err / nmse.energy;
                    }
                }
                if set.mmse {
                    let (decided, nmse) = link::detect_mmse(sc, &frame, snr_db)?;
                    acc.mmse.push(count_bit_errors(&decided, &frame.bits), bits);
                    acc.mmse_nmse.err += nmse.err;
                    acc.mmse_nmse.energy += nmse.energy;
                    trial_nmse.1 = nmse.err / nmse.energy;
                }
                if set.dnn {
                    let det = trained.dnn.as_ref().expect("dnn model checked above");
                    let decided = link::detect_dnn(sc, &frame, det)?;
                    acc.dnn.push(count_bit_errors(&decided, &frame.bits), bits);
                }
                if verbose && (set.ls || set.mmse) {
                    acc.estimates.push((trial as u64, trial_nmse.0, trial_nmse.1));
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = ChunkAccum::default();
    for p in partials? {
        total.merge(p);
    }
    if verbose {
        export_estimates(cfg, snr_db, &total.estimates)?;
    }
    Ok(total)
}

fn run_elm_trials(
    sc: &LinkScenario,
    cfg: &ExperimentConfig,
    elm_cfg: &ElmConfig,
    snr_idx: usize,
    snr_db: f64,
) -> Result<BerAccumulator> {
    let trials = cfg.run.elm_trials;
    let proto = ElmBank::new(sc.n_subcarriers, *elm_cfg, sc.seed);
    let chunk_starts: Vec<usize> = (0..trials).step_by(TRIAL_CHUNK).collect();
    let partials: Result<Vec<BerAccumulator>> = chunk_starts
        .par_iter()
        .map(|&start| {
            let end = (start + TRIAL_CHUNK).min(trials);
            let mut acc = BerAccumulator::new();
            let mut bank = proto.clone();
            for trial in start..end {
                let out = link::run_elm_block(
                    sc,
                    elm_cfg,
                    &mut bank,
                    snr_db,
                    lane::ELM_BASE + snr_idx as u64,
                    trial as u64,
                    None,
                )?;
                acc.push(out.errors, out.bits);
            }
            Ok(acc)
        })
        .collect();
    let mut total = BerAccumulator::new();
    for p in partials? {
        total.merge(&p);
    }
    Ok(total)
}

/// Verbose-mode per-trial estimate export
/// (`estimates_<scenario>_<snr>db.csv` in the working directory is up to
/// the caller; this writes next to nothing if the list is empty).
fn export_estimates(cfg: &ExperimentConfig, snr_db: f64, rows: &[(u64, f64, f64)]) -> Result<()> {
    if rows.is_empty() {
        return Ok(());
    }
    let mut text = String::from("trial,nmse_ls,nmse_mmse\n");
    for (trial, ls, mmse) in rows {
        text.push_str(&format!("{trial},{ls},{mmse}\n"));
    }
    let path = std::env::temp_dir().join(format!(
        "ofdmlink_estimates_{}_{}db.csv",
        cfg.scenario, snr_db
    ));
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::metrics::format_csv;

    fn desk_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.scenario = "desk".into();
        cfg.system.snr_db = vec![10.0, 20.0];
        cfg.run.trials = 96;
        cfg.run.detectors = vec!["theory".into(), "perfect".into(), "ls".into()];
        cfg
    }

    #[test]
    fn campaign_emits_one_row_per_detector_and_snr() {
        let cfg = desk_cfg();
        let records = run_campaign(&cfg, &TrainedDetectors::default()).unwrap();
        assert_eq!(records.len(), 6);
        assert!(records.iter().all(|r| r.run_id == "desk-s1"));
        let theory: Vec<_> = records.iter().filter(|r| r.detector == "theory").collect();
        assert_eq!(theory.len(), 2);
        assert!(theory[0].ber > theory[1].ber);
    }

    #[test]
    fn identical_config_and_seed_reproduce_identical_csv() {
        let cfg = desk_cfg();
        let a = run_campaign(&cfg, &TrainedDetectors::default()).unwrap();
        let b = run_campaign(&cfg, &TrainedDetectors::default()).unwrap();
        assert_eq!(format_csv(&a), format_csv(&b));
    }

    #[test]
    fn different_seed_changes_monte_carlo_rows() {
        let cfg = desk_cfg();
        let mut cfg2 = desk_cfg();
        cfg2.seed = 99;
        let a = run_campaign(&cfg, &TrainedDetectors::default()).unwrap();
        let b = run_campaign(&cfg2, &TrainedDetectors::default()).unwrap();
        let pa = a.iter().find(|r| r.detector == "perfect").unwrap();
        let pb = b.iter().find(|r| r.detector == "perfect").unwrap();
        assert_ne!(pa.ber.to_bits(), pb.ber.to_bits());
    }

    #[test]
    fn requesting_dnn_without_model_is_an_error() {
        let mut cfg = desk_cfg();
        cfg.run.detectors = vec!["dnn".into()];
        assert!(run_campaign(&cfg, &TrainedDetectors::default()).is_err());
    }

    #[test]
    fn estimated_detectors_carry_nmse() {
        let cfg = desk_cfg();
        let records = run_campaign(&cfg, &TrainedDetectors::default()).unwrap();
        for r in &records {
            match r.detector.as_str() {
                "ls" => assert!(r.nmse.unwrap() > 0.0),
                "perfect" | "theory" => assert!(r.nmse.is_none()),
                _ => {}
            }
        }
    }
}
