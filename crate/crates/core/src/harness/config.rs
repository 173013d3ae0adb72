//! Experiment configuration: a TOML document covering the whole parameter
//! table of the study. Every field has the full-scale default, so an empty
//! document is a valid full-scale configuration; unknown keys are rejected.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub seed: u64,
    pub system: SystemConfig,
    pub channel: ChannelConfig,
    pub allocation: AllocationConfig,
    pub dnn: DnnConfig,
    pub elm: ElmSection,
    pub run: RunConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: "default".into(),
            seed: 1,
            system: SystemConfig::default(),
            channel: ChannelConfig::default(),
            allocation: AllocationConfig::default(),
            dnn: DnnConfig::default(),
            elm: ElmSection::default(),
            run: RunConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// QAM order M.
    pub modulation: usize,
    pub subcarriers: usize,
    /// Pilot subcarriers in the pilot symbol; equal to `subcarriers` for
    /// block-type, fewer for comb-type.
    pub pilots: usize,
    /// Cyclic prefix as a fraction of the symbol length.
    pub cp_fraction: f64,
    /// Active users. 1 runs the full-band single link; 2+ runs the
    /// block-allocated multi-user overlay.
    pub users: usize,
    pub snr_db: Vec<f64>,
    /// Data OFDM symbols following the pilot symbol in each frame.
    pub data_symbols: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            modulation: 4,
            subcarriers: 64,
            pilots: 64,
            cp_fraction: 0.25,
            users: 1,
            snr_db: vec![5.0, 10.0, 15.0, 20.0, 25.0],
            data_symbols: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub taps: usize,
    /// Last tap this many dB below the first.
    pub decay_db: f64,
    pub path_loss_exp: f64,
    pub cell_radius_m: f64,
    pub exclusion_radius_m: f64,
    pub coherence_ms: f64,
    pub total_power_mw: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            taps: 8,
            decay_db: 20.0,
            path_loss_exp: -3.0,
            cell_radius_m: 500.0,
            exclusion_radius_m: 10.0,
            coherence_ms: 5.0,
            total_power_mw: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllocationConfig {
    pub subcarriers_per_user: usize,
    pub selected_per_user: usize,
}

impl Default for AllocationConfig {
    fn default() -> Self {
        Self {
            subcarriers_per_user: 16,
            selected_per_user: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DnnConfig {
    pub hidden: Vec<usize>,
    /// Output width per instance; caps the subcarrier group one instance
    /// covers.
    pub output_neurons: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub dataset_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub snr_train_db: f64,
    /// Half-width of the training-SNR range: examples draw their SNR
    /// uniformly from snr_train_db +- spread. Zero trains at a single SNR.
    pub snr_train_spread_db: f64,
}

impl Default for DnnConfig {
    fn default() -> Self {
        Self {
            hidden: vec![500, 250, 120],
            output_neurons: 64,
            epochs: 1000,
            batch_size: 250,
            dataset_size: 50_000,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            snr_train_db: 20.0,
            snr_train_spread_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElmSection {
    /// Hidden nodes L per subnet.
    pub hidden: usize,
    /// Pilot symbols I per coherence block.
    pub pilots: usize,
    /// Data symbols K per coherence block.
    pub data_symbols: usize,
    pub normalize: bool,
}

impl Default for ElmSection {
    fn default() -> Self {
        Self {
            hidden: 50,
            pilots: 100,
            data_symbols: 400,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Monte Carlo frames per SNR point for the frame detectors.
    pub trials: usize,
    /// Coherence blocks per SNR point for the ELM detector.
    pub elm_trials: usize,
    pub detectors: Vec<String>,
    /// Dump pilot/constellation/allocation/estimate inspection CSVs.
    pub verbose: bool,
    /// Fill the inference-time column from a live measurement; off by
    /// default so identical (config, seed) runs stay byte-identical.
    pub measure_time: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            trials: 10_000,
            elm_trials: 1000,
            detectors: vec![
                "theory".into(),
                "perfect".into(),
                "ls".into(),
                "mmse".into(),
            ],
            verbose: false,
            measure_time: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        if ![4, 16, 32].contains(&s.modulation) {
            return Err(Error::Config(format!(
                "modulation {} not in {{4, 16, 32}}",
                s.modulation
            )));
        }
        if s.subcarriers == 0 || s.pilots == 0 || s.pilots > s.subcarriers {
            return Err(Error::Config("pilots must be in 1..=subcarriers".into()));
        }
        if s.subcarriers % s.pilots != 0 {
            return Err(Error::Config(format!(
                "{} pilots do not evenly divide {} subcarriers",
                s.pilots, s.subcarriers
            )));
        }
        if !(0.0..=1.0).contains(&s.cp_fraction) {
            return Err(Error::Config("cp_fraction outside [0, 1]".into()));
        }
        if s.users == 0 {
            return Err(Error::Config("at least one user".into()));
        }
        if s.snr_db.is_empty() {
            return Err(Error::Config("empty SNR grid".into()));
        }
        if s.data_symbols == 0 {
            return Err(Error::Config("at least one data symbol".into()));
        }
        if self.channel.taps == 0 {
            return Err(Error::Config("at least one channel tap".into()));
        }
        if self.channel.total_power_mw <= 0.0 {
            return Err(Error::Config("total power must be positive".into()));
        }
        if self.allocation.selected_per_user > self.allocation.subcarriers_per_user {
            return Err(Error::Config(
                "selected_per_user exceeds subcarriers_per_user".into(),
            ));
        }
        if self.dnn.hidden.is_empty() || self.dnn.output_neurons == 0 {
            return Err(Error::Config("DNN needs hidden layers and outputs".into()));
        }
        if self.elm.hidden == 0 || self.elm.pilots == 0 || self.elm.data_symbols == 0 {
            return Err(Error::Config("ELM sizes must be positive".into()));
        }
        if self.run.detectors.is_empty() {
            return Err(Error::Config("no detectors selected".into()));
        }
        for d in &self.run.detectors {
            if !["theory", "perfect", "ls", "mmse", "dnn", "elm"].contains(&d.as_str()) {
                return Err(Error::Config(format!("unknown detector '{d}'")));
            }
        }
        if self.run.detectors.iter().any(|d| d == "dnn") && self.system.data_symbols != 1 {
            return Err(Error::Config(
                "the DNN detector covers frames with exactly one data symbol".into(),
            ));
        }
        Ok(())
    }

    /// Total transmit power in linear milliwatt units.
    pub fn total_power(&self) -> f64 {
        self.channel.total_power_mw
    }

    pub fn run_id(&self) -> String {
        format!("{}-s{}", self.scenario, self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_full_scale_default() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg.system.subcarriers, 64);
        assert_eq!(cfg.system.pilots, 64);
        assert_eq!(cfg.system.modulation, 4);
        assert_eq!(cfg.dnn.hidden, vec![500, 250, 120]);
        assert_eq!(cfg.dnn.output_neurons, 64);
        assert_eq!(cfg.dnn.epochs, 1000);
        assert_eq!(cfg.elm.hidden, 50);
        assert_eq!(cfg.elm.data_symbols, 400);
        assert_eq!(cfg.run.trials, 10_000);
        assert_eq!(cfg.run.elm_trials, 1000);
        assert_eq!(cfg.channel.total_power_mw, 1.0);
        assert_eq!(cfg.channel.cell_radius_m, 500.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml_str("not_a_key = 3").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = ExperimentConfig::from_toml_str("[system]\nbogus = 1").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn invalid_values_are_rejected() {
        for doc in [
            "[system]\nmodulation = 8",
            "[system]\npilots = 0",
            "[system]\npilots = 48",
            "[system]\ncp_fraction = 1.5",
            "[system]\nsnr_db = []",
            "[run]\ndetectors = [\"magic\"]",
        ] {
            assert!(ExperimentConfig::from_toml_str(doc).is_err(), "{doc}");
        }
    }

    #[test]
    fn partial_overrides_keep_other_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            "scenario = \"x\"\n[system]\npilots = 8\n[run]\ntrials = 50",
        )
        .unwrap();
        assert_eq!(cfg.system.pilots, 8);
        assert_eq!(cfg.system.subcarriers, 64);
        assert_eq!(cfg.run.trials, 50);
        assert_eq!(cfg.run.elm_trials, 1000);
    }
}
