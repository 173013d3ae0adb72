//! Experiment engine: configuration, Monte Carlo campaigns, operation
//! counting, inference timing, CSV metrics and SVG plots.

pub mod campaign;
pub mod config;
pub mod flops;
pub mod link;
pub mod metrics;
pub mod plot;
pub mod theory;
pub mod timing;

pub use campaign::{run_campaign, TrainedDetectors};
pub use config::ExperimentConfig;
pub use link::{DnnDetector, LinkScenario};
pub use metrics::MetricRecord;
pub use theory::theoretical_ber;
