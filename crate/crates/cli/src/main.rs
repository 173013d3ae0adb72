//! Benchmark CLI: train detectors, run Monte Carlo campaigns, measure
//! operation counts and inference time, and render plots.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ofdmlink::elm::{ElmBank, ElmConfig};
use ofdmlink::harness::campaign::{run_campaign, TrainedDetectors};
use ofdmlink::harness::config::ExperimentConfig;
use ofdmlink::harness::flops::{elm_scaling, ls_scaling, mmse_scaling};
use ofdmlink::harness::link::{self, lane, train_dnn_detector, DnnDetector, LinkScenario};
use ofdmlink::harness::metrics::{append_csv, read_csv};
use ofdmlink::harness::plot::emit_plots;
use ofdmlink::harness::timing;
use ofdmlink::neural;

#[derive(Parser)]
#[command(name = "ofdmlink", version, about = "Link-level OFDM receiver benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment configuration (TOML). Omitted: the built-in defaults.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(short, long)]
    seed: Option<u64>,
    /// Override the Monte Carlo trial count (frames per SNR point).
    #[arg(short, long)]
    trials: Option<usize>,
    /// Output directory. The OFDMLINK_OUT environment variable overrides
    /// the default; this flag overrides both.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Replace the configured detector list (comma-separated).
    #[arg(short, long)]
    detectors: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train detectors offline and write checkpoints.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Which detector to train: dnn or elm.
        #[arg(long, default_value = "dnn")]
        detector: String,
    },
    /// Run the Monte Carlo BER/NMSE campaign and append the metrics CSV.
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Operation-count doubling studies for LS, MMSE and ELM.
    Flops {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Median inference time per detector.
    Time {
        #[command(flatten)]
        common: CommonArgs,
        /// Timing repetitions.
        #[arg(long, default_value_t = 21)]
        reps: usize,
    },
    /// Render BER-vs-SNR SVG plots from a metrics CSV.
    Plot {
        /// Metrics CSV produced by `run`.
        csv: PathBuf,
        /// Output directory for the SVG files.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train { common, detector } => train(common, &detector),
        Command::Run { common } => run(common),
        Command::Flops { common } => flops(common),
        Command::Time { common, reps } => time(common, reps),
        Command::Plot { csv, out } => plot(&csv, out),
    }
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.run.trials = trials;
        cfg.run.elm_trials = trials.min(cfg.run.elm_trials);
    }
    if let Some(filter) = &common.detectors {
        cfg.run.detectors = filter.split(',').map(|s| s.trim().to_string()).collect();
    }
    cfg.validate().context("config validation")?;
    Ok(cfg)
}

fn out_dir(common: &CommonArgs) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| std::env::var_os("OFDMLINK_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn dnn_checkpoint_paths(cfg: &ExperimentConfig, dir: &Path, instances: usize) -> Vec<PathBuf> {
    (0..instances)
        .map(|g| dir.join(format!("dnn_{}_g{}.json", cfg.run_id(), g)))
        .collect()
}

fn train(common: CommonArgs, detector: &str) -> Result<()> {
    let cfg = load_config(&common)?;
    let dir = out_dir(&common);
    std::fs::create_dir_all(&dir)?;
    let sc = LinkScenario::from_config(&cfg)?;
    match detector {
        "dnn" => {
            eprintln!(
                "training DNN: {} examples x {} epochs at SNR_train {} dB",
                cfg.dnn.dataset_size, cfg.dnn.epochs, cfg.dnn.snr_train_db
            );
            let out = train_dnn_detector(&sc, &cfg.dnn)?;
            let paths = dnn_checkpoint_paths(&cfg, &dir, out.detector.instances.len());
            for (model, path) in out.detector.instances.iter().zip(&paths) {
                neural::save_checkpoint(model, path)?;
                println!("wrote {}", path.display());
            }
            let mut curve_csv = String::from("epoch,instance,loss\n");
            for (g, curve) in out.loss_curves.iter().enumerate() {
                for (e, loss) in curve.iter().enumerate() {
                    curve_csv.push_str(&format!("{e},{g},{loss}\n"));
                }
            }
            let curve_path = dir.join(format!("dnn_{}_loss.csv", cfg.run_id()));
            std::fs::write(&curve_path, curve_csv)?;
            println!("wrote {}", curve_path.display());
        }
        "elm" => {
            let elm_cfg = ElmConfig {
                hidden: cfg.elm.hidden,
                pilots: cfg.elm.pilots,
                data: cfg.elm.data_symbols,
                normalize: cfg.elm.normalize,
            };
            let mut bank = ElmBank::new(cfg.system.subcarriers, elm_cfg, cfg.seed);
            let snr = cfg.system.snr_db[cfg.system.snr_db.len() / 2];
            link::run_elm_block(&sc, &elm_cfg, &mut bank, snr, lane::PROBE, 0, None)?;
            let path = dir.join(format!("elm_{}.json", cfg.run_id()));
            bank.save(&path)?;
            println!("wrote {} (bank trained on one probe block at {snr} dB)", path.display());
        }
        other => bail!("unknown detector '{other}' (expected dnn or elm)"),
    }
    Ok(())
}

fn load_or_train_dnn(
    cfg: &ExperimentConfig,
    sc: &LinkScenario,
    dir: &Path,
) -> Result<DnnDetector> {
    let group = DnnDetector::group_for(sc, cfg.dnn.output_neurons);
    let instances = DnnDetector::instances_for(sc, group);
    let paths = dnn_checkpoint_paths(cfg, dir, instances);
    if paths.iter().all(|p| p.exists()) {
        let models = paths
            .iter()
            .map(|p| neural::load_checkpoint(p))
            .collect::<ofdmlink::Result<Vec<_>>>()?;
        eprintln!("loaded {} checkpoint(s) from {}", models.len(), dir.display());
        return Ok(DnnDetector {
            instances: models,
            group,
            snr_train_db: cfg.dnn.snr_train_db,
        });
    }
    eprintln!("no checkpoint found; training DNN first (see `train --detector dnn`)");
    let out = train_dnn_detector(sc, &cfg.dnn)?;
    for (model, path) in out.detector.instances.iter().zip(&paths) {
        neural::save_checkpoint(model, path)?;
    }
    Ok(out.detector)
}

fn run(common: CommonArgs) -> Result<()> {
    let cfg = load_config(&common)?;
    let dir = out_dir(&common);
    std::fs::create_dir_all(&dir)?;
    let sc = LinkScenario::from_config(&cfg)?;
    let trained = if cfg.run.detectors.iter().any(|d| d == "dnn") {
        TrainedDetectors {
            dnn: Some(load_or_train_dnn(&cfg, &sc, &dir)?),
        }
    } else {
        TrainedDetectors::default()
    };
    if cfg.run.verbose {
        std::fs::write(
            dir.join(format!("constellation_m{}.csv", cfg.system.modulation)),
            sc.constellation.to_csv(),
        )?;
        std::fs::write(
            dir.join(format!("pilots_{}.csv", cfg.run_id())),
            sc.patterns[0].to_csv(),
        )?;
    }
    let records = run_campaign(&cfg, &trained)?;
    let csv_path = dir.join(format!("metrics_{}.csv", cfg.scenario));
    append_csv(&records, &csv_path)?;
    println!("appended {} rows to {}", records.len(), csv_path.display());
    for r in &records {
        let nmse = r
            .nmse
            .map(|v| format!(" nmse={v:.3e}"))
            .unwrap_or_default();
        println!(
            "{:8} snr={:5.1} dB  ber={:.4e} (+-{:.1e}){nmse}  trials={}",
            r.detector, r.snr_db, r.ber, r.ber_ci95, r.trials
        );
    }
    Ok(())
}

fn flops(common: CommonArgs) -> Result<()> {
    let cfg = load_config(&common)?;
    println!("detector  base              doubled           flops(base)   flops(2x)     ratio");
    for study in [ls_scaling(&cfg)?, mmse_scaling(&cfg)?, elm_scaling(&cfg)?] {
        println!(
            "{:8}  {:16}  {:16}  {:12}  {:12}  {:.2}",
            study.detector,
            study.base_label,
            study.doubled_label,
            study.base_flops,
            study.doubled_flops,
            study.ratio()
        );
    }
    Ok(())
}

fn time(common: CommonArgs, reps: usize) -> Result<()> {
    let cfg = load_config(&common)?;
    let dir = out_dir(&common);
    let sc = LinkScenario::from_config(&cfg)?;
    let snr = cfg.system.snr_db[cfg.system.snr_db.len() / 2];
    println!("detector  stage      median_ms   iqr_ms   reps");
    for det in &cfg.run.detectors {
        match det.as_str() {
            "perfect" | "ls" | "mmse" => {
                let s = timing::time_classical(&sc, det, snr, reps)?;
                println!(
                    "{:8}  detect   {:10.4} {:8.4}  {:5}",
                    det, s.median_ms, s.iqr_ms, s.reps
                );
            }
            "dnn" => {
                let trained = load_or_train_dnn(&cfg, &sc, &dir)?;
                let s = timing::time_dnn(&sc, &trained, snr, reps)?;
                println!(
                    "{:8}  detect   {:10.4} {:8.4}  {:5}",
                    det, s.median_ms, s.iqr_ms, s.reps
                );
            }
            "elm" => {
                let elm_cfg = ElmConfig {
                    hidden: cfg.elm.hidden,
                    pilots: cfg.elm.pilots,
                    data: cfg.elm.data_symbols,
                    normalize: cfg.elm.normalize,
                };
                let (train, detect) = timing::time_elm(&sc, &elm_cfg, snr, reps)?;
                println!(
                    "{:8}  train    {:10.4} {:8.4}  {:5}",
                    det, train.median_ms, train.iqr_ms, train.reps
                );
                println!(
                    "{:8}  detect   {:10.4} {:8.4}  {:5}",
                    det, detect.median_ms, detect.iqr_ms, detect.reps
                );
            }
            _ => {}
        }
    }
    Ok(())
}

fn plot(csv: &Path, out: Option<PathBuf>) -> Result<()> {
    let records = read_csv(csv).with_context(|| format!("reading {}", csv.display()))?;
    let dir = out
        .or_else(|| std::env::var_os("OFDMLINK_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let written = emit_plots(&records, &dir)?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
