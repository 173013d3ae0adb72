//! Metric rows, the BER accumulator and the CSV surface.
//!
//! The confidence half-width comes from the per-frame error variance
//! (frames are the independent Monte Carlo unit; bits inside a frame share
//! one channel draw and are correlated under fading). On independent
//! Bernoulli streams this estimate coincides with the binomial normal
//! approximation.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_COMMENT: &str = "# ofdmlink metrics v1";
pub const CSV_HEADER: &str =
    "run_id,scenario,detector,snr_db,ber,ber_ci95,nmse,flops,inference_ms,trials";

/// One Monte Carlo result row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub run_id: String,
    pub scenario: String,
    pub detector: String,
    pub snr_db: f64,
    pub ber: f64,
    pub ber_ci95: f64,
    pub nmse: Option<f64>,
    pub flops: u64,
    pub inference_ms: Option<f64>,
    pub trials: u64,
}

impl MetricRecord {
    fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            self.run_id,
            self.scenario,
            self.detector,
            self.snr_db,
            self.ber,
            self.ber_ci95,
            self.nmse.map(|v| v.to_string()).unwrap_or_default(),
            self.flops,
            self.inference_ms.map(|v| v.to_string()).unwrap_or_default(),
            self.trials
        )
    }

    fn from_csv_row(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::Config(format!("bad metrics row: {line}")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Config(format!("bad number '{s}' in metrics row")))
        };
        Ok(Self {
            run_id: fields[0].to_string(),
            scenario: fields[1].to_string(),
            detector: fields[2].to_string(),
            snr_db: parse(fields[3])?,
            ber: parse(fields[4])?,
            ber_ci95: parse(fields[5])?,
            nmse: if fields[6].is_empty() {
                None
            } else {
                Some(parse(fields[6])?)
            },
            flops: fields[7]
                .parse()
                .map_err(|_| Error::Config("bad flops field".into()))?,
            inference_ms: if fields[8].is_empty() {
                None
            } else {
                Some(parse(fields[8])?)
            },
            trials: fields[9]
                .parse()
                .map_err(|_| Error::Config("bad trials field".into()))?,
        })
    }
}

/// Render records to the canonical CSV text (comment, header, rows).
pub fn format_csv(records: &[MetricRecord]) -> String {
    let mut out = String::new();
    out.push_str(CSV_COMMENT);
    out.push('\n');
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv_row());
    }
    out
}

/// Append rows to `path`, writing the versioned header only when the file
/// is new. The whole payload goes out in one buffered write.
pub fn append_csv(records: &[MetricRecord], path: &Path) -> Result<()> {
    let fresh = !path.exists();
    let mut payload = String::new();
    if fresh {
        payload.push_str(CSV_COMMENT);
        payload.push('\n');
        payload.push_str(CSV_HEADER);
        payload.push('\n');
    }
    for r in records {
        payload.push_str(&r.to_csv_row());
    }
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    file.write_all(payload.as_bytes())?;
    file.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<MetricRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines() {
        if line.is_empty() || line.starts_with('#') || line == CSV_HEADER {
            continue;
        }
        out.push(MetricRecord::from_csv_row(line)?);
    }
    Ok(out)
}

/// Exact bit-error count between two equal-length bit strings.
pub fn count_bit_errors(a: &[u8], b: &[u8]) -> u64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

/// Streaming BER estimate over frames with a cluster-robust confidence
/// interval.
#[derive(Debug, Clone, Default)]
pub struct BerAccumulator {
    frames: u64,
    bits: u64,
    errors: u64,
    errors_sq: f64,
}

impl BerAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, frame_errors: u64, frame_bits: u64) {
        self.frames += 1;
        self.bits += frame_bits;
        self.errors += frame_errors;
        self.errors_sq += (frame_errors * frame_errors) as f64;
    }

    pub fn merge(&mut self, other: &BerAccumulator) {
        self.frames += other.frames;
        self.bits += other.bits;
        self.errors += other.errors;
        self.errors_sq += other.errors_sq;
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub fn errors(&self) -> u64 {
        self.errors
    }

    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            return 0.0;
        }
        self.errors as f64 / self.bits as f64
    }

    /// 1.96 standard errors of the mean frame error count, expressed in
    /// BER units.
    pub fn ci95_half_width(&self) -> f64 {
        if self.frames < 2 || self.bits == 0 {
            return 0.0;
        }
        let f = self.frames as f64;
        let mean = self.errors as f64 / f;
        let var = (self.errors_sq - f * mean * mean) / (f - 1.0);
        let bits_per_frame = self.bits as f64 / f;
        1.96 * (var.max(0.0) / f).sqrt() / bits_per_frame
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    #[test]
    fn fault_injection_gives_exact_ber() {
        // Flip exactly n of N bits: the estimate must be n/N with no
        // tolerance at all.
        let n_bits = 1000usize;
        let truth = vec![0u8; n_bits];
        for flips in [0usize, 1, 17, 250, 1000] {
            let mut detected = truth.clone();
            for b in detected.iter_mut().take(flips) {
                *b = 1;
            }
            let mut acc = BerAccumulator::new();
            for (t, d) in truth.chunks(100).zip(detected.chunks(100)) {
                acc.push(count_bit_errors(t, d), 100);
            }
            assert_eq!(acc.ber(), flips as f64 / n_bits as f64);
        }
    }

    #[test]
    fn ci_matches_binomial_on_bernoulli_streams() {
        let mut rng = RngStream::new(121, 0);
        let p = 0.1;
        let n = 200_000u64;
        let mut acc = BerAccumulator::new();
        for _ in 0..n {
            let bit = (rng.uniform() < p) as u64;
            acc.push(bit, 1);
        }
        let binomial = 1.96 * (acc.ber() * (1.0 - acc.ber()) / n as f64).sqrt();
        let got = acc.ci95_half_width();
        assert!(
            (got - binomial).abs() / binomial < 0.1,
            "cluster {got} vs binomial {binomial}"
        );
    }

    #[test]
    fn ci_shrinks_with_the_square_root_of_trials() {
        let mut rng = RngStream::new(122, 0);
        let mut widths = Vec::new();
        for n in [1000u64, 4000] {
            let mut acc = BerAccumulator::new();
            for _ in 0..n {
                let errs = (0..64).filter(|_| rng.uniform() < 0.05).count() as u64;
                acc.push(errs, 64);
            }
            widths.push(acc.ci95_half_width());
        }
        let ratio = widths[0] / widths[1];
        assert!((ratio - 2.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn csv_roundtrip_preserves_records() {
        let records = vec![
            MetricRecord {
                run_id: "x-s1".into(),
                scenario: "x".into(),
                detector: "ls".into(),
                snr_db: 10.0,
                ber: 0.034551234,
                ber_ci95: 0.0004,
                nmse: Some(0.0052),
                flops: 1234,
                inference_ms: None,
                trials: 100,
            },
            MetricRecord {
                run_id: "x-s1".into(),
                scenario: "x".into(),
                detector: "theory".into(),
                snr_db: 10.0,
                ber: 0.04356,
                ber_ci95: 0.0,
                nmse: None,
                flops: 0,
                inference_ms: Some(1.25),
                trials: 0,
            },
        ];
        let dir = std::env::temp_dir().join("ofdmlink-metrics-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.csv");
        std::fs::remove_file(&path).ok();
        append_csv(&records, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back, records);
        // Appending again must not duplicate the header.
        append_csv(&records[..1], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches(CSV_HEADER).count(), 1);
        std::fs::remove_file(&path).ok();
    }
}
