//! Deterministic SVG rendering of BER-vs-SNR curves.
//!
//! One plot per scenario: log-scale BER on the y axis, SNR in dB on the x
//! axis, one polyline per detector, the closed-form curve drawn dashed.
//! Rendering the same records twice produces byte-identical files — no
//! timestamps, no randomness, fixed float formatting.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::metrics::MetricRecord;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

/// Fixed palette keyed by detector name; unknown names cycle the tail.
fn color(detector: &str, fallback: usize) -> &'static str {
    match detector {
        "theory" => "#444444",
        "perfect" => "#1f77b4",
        "ls" => "#d62728",
        "mmse" => "#2ca02c",
        "dnn" => "#9467bd",
        "elm" => "#ff7f0e",
        _ => ["#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"][fallback % 4],
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// Render every scenario present in `records` into `out_dir`, one
/// `ber_<scenario>.svg` each. Returns the written paths.
pub fn emit_plots(records: &[MetricRecord], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("emit_plots"));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut scenarios: BTreeMap<&str, Vec<&MetricRecord>> = BTreeMap::new();
    for r in records {
        scenarios.entry(&r.scenario).or_default().push(r);
    }
    let mut written = Vec::new();
    for (scenario, rows) in scenarios {
        let svg = render_scenario(scenario, &rows)?;
        let path = out_dir.join(format!("ber_{scenario}.svg"));
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

/// Render one scenario to SVG text.
pub fn render_scenario(scenario: &str, rows: &[&MetricRecord]) -> Result<String> {
    // Series keyed by detector, each sorted by SNR.
    let mut series: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        series.entry(&r.detector).or_default().push((r.snr_db, r.ber));
    }
    for points in series.values_mut() {
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    }

    let xs: Vec<f64> = rows.iter().map(|r| r.snr_db).collect();
    let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let positive: Vec<f64> = rows.iter().map(|r| r.ber).filter(|&b| b > 0.0).collect();
    if positive.is_empty() {
        return Err(Error::EmptyInput("no positive BER points to plot"));
    }
    let y_min_dec = positive
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .log10()
        .floor();
    let y_max_dec = positive
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .log10()
        .ceil()
        .max(y_min_dec + 1.0);

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x_span = (x_max - x_min).max(1e-9);
    let to_x = |snr: f64| MARGIN_L + (snr - x_min) / x_span * plot_w;
    let to_y = |ber: f64| {
        let d = ber.log10().clamp(y_min_dec, y_max_dec);
        MARGIN_T + (y_max_dec - d) / (y_max_dec - y_min_dec) * plot_h
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">BER vs SNR — {scenario}</text>",
        MARGIN_L + plot_w / 2.0
    );

    // Decade grid and y labels.
    let mut dec = y_min_dec;
    while dec <= y_max_dec + 1e-9 {
        let y = to_y(10f64.powf(dec));
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\" stroke-width=\"1\"/>",
            fmt(MARGIN_L),
            fmt(y),
            fmt(MARGIN_L + plot_w),
            fmt(y)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">1e{}</text>",
            fmt(MARGIN_L - 8.0),
            fmt(y + 4.0),
            dec as i64
        );
        dec += 1.0;
    }
    // X ticks at the recorded SNR points.
    let mut ticks: Vec<i64> = xs.iter().map(|&x| x.round() as i64).collect();
    ticks.sort_unstable();
    ticks.dedup();
    for t in ticks {
        let x = to_x(t as f64);
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\" stroke-width=\"1\"/>",
            fmt(x),
            fmt(MARGIN_T),
            fmt(x),
            fmt(MARGIN_T + plot_h)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{t}</text>",
            fmt(x),
            fmt(MARGIN_T + plot_h + 18.0)
        );
    }
    // Axes frame and labels.
    let _ = writeln!(
        svg,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333333\"/>",
        fmt(MARGIN_L),
        fmt(MARGIN_T),
        fmt(plot_w),
        fmt(plot_h)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">SNR (dB)</text>",
        fmt(MARGIN_L + plot_w / 2.0),
        fmt(HEIGHT - 12.0)
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">BER</text>",
        fmt(MARGIN_T + plot_h / 2.0),
        fmt(MARGIN_T + plot_h / 2.0)
    );

    // Curves: zero-BER points are skipped (log axis), documented behavior.
    for (i, (det, points)) in series.iter().enumerate() {
        let col = color(det, i);
        let dash = if *det == "theory" {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        let path: Vec<String> = points
            .iter()
            .filter(|(_, b)| *b > 0.0)
            .map(|&(x, y)| format!("{},{}", fmt(to_x(x)), fmt(to_y(y))))
            .collect();
        if path.len() >= 2 {
            let _ = writeln!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{col}\" stroke-width=\"1.8\"{dash}/>",
                path.join(" ")
            );
        }
        for (x, y) in points.iter().filter(|(_, b)| *b > 0.0) {
            let _ = writeln!(
                svg,
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{col}\"/>",
                fmt(to_x(*x)),
                fmt(to_y(*y))
            );
        }
        // Legend entry.
        let ly = MARGIN_T + 16.0 + i as f64 * 20.0;
        let lx = MARGIN_L + plot_w + 14.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{col}\" stroke-width=\"2\"{dash}/>",
            fmt(lx),
            fmt(ly - 4.0),
            fmt(lx + 24.0),
            fmt(ly - 4.0)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{det}</text>",
            fmt(lx + 30.0),
            fmt(ly)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::theory::theoretical_ber;

    fn sample_records() -> Vec<MetricRecord> {
        let mut out = Vec::new();
        for det in ["theory", "perfect", "ls"] {
            for snr in [5.0, 10.0, 15.0] {
                out.push(MetricRecord {
                    run_id: "t-s1".into(),
                    scenario: "test".into(),
                    detector: det.into(),
                    snr_db: snr,
                    ber: theoretical_ber(snr, 4).unwrap() * if det == "ls" { 2.0 } else { 1.0 },
                    ber_ci95: 0.0,
                    nmse: None,
                    flops: 0,
                    inference_ms: None,
                    trials: 100,
                });
            }
        }
        out
    }

    #[test]
    fn one_polyline_per_detector() {
        let records = sample_records();
        let rows: Vec<&MetricRecord> = records.iter().collect();
        let svg = render_scenario("test", &rows).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("stroke-dasharray")); // theory overlay
        for det in ["theory", "perfect", "ls"] {
            assert!(svg.contains(&format!(">{det}</text>")));
        }
    }

    #[test]
    fn rendering_is_byte_deterministic() {
        let records = sample_records();
        let dir = std::env::temp_dir().join("ofdmlink-plot-test");
        let a = emit_plots(&records, &dir).unwrap();
        let first = std::fs::read(&a[0]).unwrap();
        let b = emit_plots(&records, &dir).unwrap();
        let second = std::fs::read(&b[0]).unwrap();
        assert_eq!(first, second);
        std::fs::remove_file(&a[0]).ok();
    }

    #[test]
    fn empty_records_are_rejected() {
        let dir = std::env::temp_dir().join("ofdmlink-plot-test2");
        assert!(emit_plots(&[], &dir).is_err());
    }
}
