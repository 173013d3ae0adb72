//! Shared fixtures for the criterion benches: a default scenario and one
//! pre-simulated frame per SNR point, so benches measure detector work and
//! not setup.

use ofdmlink::elm::{ElmBank, ElmConfig};
use ofdmlink::harness::config::ExperimentConfig;
use ofdmlink::harness::link::{self, lane, simulate_frame, LinkScenario, SimulatedFrame, TrialStreams};

pub struct Fixture {
    pub scenario: LinkScenario,
    pub frame: SimulatedFrame,
    pub snr_db: f64,
}

impl Fixture {
    pub fn new(snr_db: f64) -> Self {
        let cfg = ExperimentConfig::default();
        let scenario = LinkScenario::from_config(&cfg).expect("default config");
        let mut streams = TrialStreams::new(scenario.seed, lane::PROBE, 7);
        let frame = simulate_frame(&scenario, snr_db, &mut streams).expect("frame");
        Self {
            scenario,
            frame,
            snr_db,
        }
    }

    /// An ELM bank trained on one block, plus the block's config.
    pub fn trained_elm(&self) -> (ElmBank, ElmConfig) {
        let elm_cfg = ElmConfig::default();
        let mut bank = ElmBank::new(self.scenario.n_subcarriers, elm_cfg, self.scenario.seed);
        link::run_elm_block(
            &self.scenario,
            &elm_cfg,
            &mut bank,
            self.snr_db,
            lane::PROBE,
            8,
            None,
        )
        .expect("elm block");
        (bank, elm_cfg)
    }
}
