//! Complexity scaling studies built on the executed operation counters.
//!
//! Each study measures one detector's per-frame (or per-block) count at a
//! base size and at double the size, and reports the ratio:
//!
//! - LS scales with the band, ratio ~ 2 under subcarrier doubling;
//! - MMSE is dominated by the pilot-domain solve, ratio ~ 8 under
//!   subcarrier doubling with full pilots;
//! - ELM training is dominated by the pseudoinverse, ratio ~ 8 under
//!   hidden-layer doubling with the pilot block scaled along (I = 2L, the
//!   configured pairing).

use crate::elm::ElmConfig;
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::link::{probe_detector_flops, LinkScenario};

#[derive(Debug, Clone)]
pub struct ScalingStudy {
    pub detector: &'static str,
    pub base_label: String,
    pub doubled_label: String,
    pub base_flops: u64,
    pub doubled_flops: u64,
}

impl ScalingStudy {
    pub fn ratio(&self) -> f64 {
        self.doubled_flops as f64 / self.base_flops as f64
    }
}

fn with_subcarriers(cfg: &ExperimentConfig, n: usize) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.system.subcarriers = n;
    c.system.pilots = n; // full pilots for the scaling probes
    c
}

/// LS estimate + equalization count at N_c vs 2 N_c.
pub fn ls_scaling(cfg: &ExperimentConfig) -> Result<ScalingStudy> {
    let n = cfg.system.subcarriers;
    let snr = mid_snr(cfg);
    let count = |nc: usize| -> Result<u64> {
        let c = with_subcarriers(cfg, nc);
        let sc = LinkScenario::from_config(&c)?;
        probe_detector_flops(&sc, &elm_of(&c), None, "ls", snr)
    };
    Ok(ScalingStudy {
        detector: "ls",
        base_label: format!("N_c={n}"),
        doubled_label: format!("N_c={}", 2 * n),
        base_flops: count(n)?,
        doubled_flops: count(2 * n)?,
    })
}

/// MMSE estimate + equalization count at N_c vs 2 N_c (full pilots).
pub fn mmse_scaling(cfg: &ExperimentConfig) -> Result<ScalingStudy> {
    let n = cfg.system.subcarriers;
    let snr = mid_snr(cfg);
    let count = |nc: usize| -> Result<u64> {
        let c = with_subcarriers(cfg, nc);
        let sc = LinkScenario::from_config(&c)?;
        probe_detector_flops(&sc, &elm_of(&c), None, "mmse", snr)
    };
    Ok(ScalingStudy {
        detector: "mmse",
        base_label: format!("N_c={n}"),
        doubled_label: format!("N_c={}", 2 * n),
        base_flops: count(n)?,
        doubled_flops: count(2 * n)?,
    })
}

/// ELM per-block train+detect count at (L, I = 2L) vs (2L, I = 4L), K = 1
/// (the single-data-symbol protocol used for operation measurements).
pub fn elm_scaling(cfg: &ExperimentConfig) -> Result<ScalingStudy> {
    let l = cfg.elm.hidden;
    let snr = mid_snr(cfg);
    let sc = LinkScenario::from_config(cfg)?;
    let count = |hidden: usize| -> Result<u64> {
        let elm = ElmConfig {
            hidden,
            pilots: 2 * hidden,
            data: 1,
            normalize: cfg.elm.normalize,
        };
        probe_detector_flops(&sc, &elm, None, "elm", snr)
    };
    Ok(ScalingStudy {
        detector: "elm",
        base_label: format!("L={l}, I={}", 2 * l),
        doubled_label: format!("L={}, I={}", 2 * l, 4 * l),
        base_flops: count(l)?,
        doubled_flops: count(2 * l)?,
    })
}

fn mid_snr(cfg: &ExperimentConfig) -> f64 {
    let g = &cfg.system.snr_db;
    g[g.len() / 2]
}

fn elm_of(cfg: &ExperimentConfig) -> ElmConfig {
    ElmConfig {
        hidden: cfg.elm.hidden,
        pilots: cfg.elm.pilots,
        data: cfg.elm.data_symbols,
        normalize: cfg.elm.normalize,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.run.trials = 1;
        c
    }

    #[test]
    fn ls_count_doubles_with_the_band() {
        let s = ls_scaling(&cfg()).unwrap();
        let r = s.ratio();
        assert!((1.8..=2.2).contains(&r), "LS ratio {r}");
    }

    #[test]
    fn mmse_count_grows_with_the_cube_of_the_band() {
        let s = mmse_scaling(&cfg()).unwrap();
        let r = s.ratio();
        assert!((6.4..=9.6).contains(&r), "MMSE ratio {r}");
    }

    #[test]
    fn elm_count_grows_with_the_cube_of_the_hidden_layer() {
        let mut c = cfg();
        c.system.subcarriers = 16; // scaling is per subnet; keep the probe quick
        c.system.pilots = 16;
        let s = elm_scaling(&c).unwrap();
        let r = s.ratio();
        assert!((6.4..=9.6).contains(&r), "ELM ratio {r}");
    }
}
