//! CSV, JSON and SVG emission. Numbers are written locale-independently with
//! twelve significant digits after the leading one; all files use LF endings.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::EnvelopeSeries;
use crate::error::{invalid, Result};
use crate::integrator::TimeSeries;
use crate::sweeps::{SweepAxis, SweepResult};

/// `1.234567890123e4`; `NaN`, `inf` and `-inf` for non-finite values.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.12e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn timeseries_csv(ts: &TimeSeries) -> String {
    let mut s = String::from("t,z\n");
    for (t, z) in ts.t.iter().zip(&ts.z) {
        let _ = writeln!(s, "{},{}", num(*t), num(*z));
    }
    s
}

pub fn envelope_csv(env: &EnvelopeSeries) -> String {
    let mut s = String::from("t,i,q,amplitude\n");
    for k in 0..env.len() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            num(env.t[k]),
            num(env.i_comp[k]),
            num(env.q_comp[k]),
            num(env.amplitude[k])
        );
    }
    s
}

/// `axis_value,gain,amplitude,status`, plus `beat_frequency,modulation_depth`
/// for ratio sweeps, `oracle_gain` for phase and delta sweeps, and
/// `required_delta,oracle_delta` for Q sweeps.
pub fn sweep_csv(result: &SweepResult) -> String {
    let extra: &[&str] = match result.axis {
        SweepAxis::FrequencyRatio => &["beat_frequency", "modulation_depth"],
        SweepAxis::DrivePhase | SweepAxis::PumpPhase | SweepAxis::Delta => &["oracle_gain"],
        SweepAxis::QRequirement => &["required_delta", "oracle_delta"],
        SweepAxis::ActuationDetune => &[],
    };
    let mut s = String::from("axis_value,gain,amplitude,status");
    for e in extra {
        s.push(',');
        s.push_str(e);
    }
    s.push('\n');
    for r in &result.rows {
        let _ = write!(
            s,
            "{},{},{},{}",
            num(r.axis_value),
            num(r.gain),
            num(r.amplitude),
            r.status.as_str()
        );
        for e in extra {
            let v = match *e {
                "beat_frequency" => r.beat_frequency,
                "modulation_depth" => r.modulation_depth,
                "oracle_gain" => r.oracle_gain,
                "required_delta" => r.required_delta,
                _ => r.oracle_delta,
            };
            s.push(',');
            s.push_str(&opt(v));
        }
        s.push('\n');
    }
    s
}

/// Key-value CSV with a `key,value` header.
pub fn key_value_csv(pairs: &[(&str, String)]) -> String {
    let mut s = String::from("key,value\n");
    for (k, v) in pairs {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

pub fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 400.0;
const MARGIN: f64 = 60.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Single polyline with labelled axes. Non-finite points (and non-positive
/// ones on a log axis) are skipped.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, x: &[f64], y: &[f64], log_y: bool) -> Result<String> {
    if x.len() != y.len() {
        return Err(invalid("plot series lengths differ"));
    }
    let ty = |v: f64| if log_y { v.log10() } else { v };
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite() && (!log_y || **b > 0.0))
        .map(|(&a, &b)| (a, ty(b)))
        .collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        SVG_W / 2.0,
        esc(title)
    );
    let (x0, x1, y0, y1) = (MARGIN, SVG_W - MARGIN / 2.0, SVG_H - MARGIN, MARGIN / 1.5);
    let _ = writeln!(
        s,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        (x0 + x1) / 2.0,
        SVG_H - 15.0,
        esc(x_label)
    );
    let y_text = if log_y {
        format!("{y_label} (log10)")
    } else {
        y_label.to_string()
    };
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 15 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        esc(&y_text)
    );
    if !pts.is_empty() {
        let (xmin, xmax) = bounds(pts.iter().map(|p| p.0));
        let (ymin, ymax) = bounds(pts.iter().map(|p| p.1));
        let sx = |v: f64| x0 + (v - xmin) / (xmax - xmin) * (x1 - x0);
        let sy = |v: f64| y0 - (v - ymin) / (ymax - ymin) * (y0 - y1);
        let label = |v: f64, log: bool| {
            if log {
                format!("{:.3e}", 10f64.powf(v))
            } else {
                format!("{v:.4e}")
            }
        };
        for (v, anchor, xx) in [(xmin, "start", x0), (xmax, "end", x1)] {
            let _ = writeln!(
                s,
                r#"<text x="{xx}" y="{}" text-anchor="{anchor}" font-family="sans-serif" font-size="10">{}</text>"#,
                y0 + 14.0,
                label(v, false)
            );
        }
        for (v, yy) in [(ymin, y0), (ymax, y1)] {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{yy}" text-anchor="end" font-family="sans-serif" font-size="10">{}</text>"#,
                x0 - 4.0,
                label(v, log_y)
            );
        }
        let points: Vec<String> = pts.iter().map(|&(a, b)| format!("{:.3},{:.3}", sx(a), sy(b))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
            points.join(" ")
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
        (lo - pad, hi + pad)
    }
}

/// Text lines rendered as an SVG document, for results that are not curves.
pub fn svg_text(title: &str, lines: &[String]) -> String {
    let h = 50.0 + 16.0 * lines.len() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_W}" height="{h}" viewBox="0 0 {SVG_W} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="10" y="24" font-family="sans-serif" font-size="14">{}</text>"#,
        esc(title)
    );
    for (k, line) in lines.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="10" y="{}" font-family="monospace" font-size="12" xml:space="preserve">{}</text>"#,
            48.0 + 16.0 * k as f64,
            esc(line)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `contents` to `dir/name` through a temporary file and a rename, so
/// readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    if name.contains('/') || name.contains('\\') || name.starts_with('.') {
        return Err(invalid(format!("output name {name:?} must be a plain file name")));
    }
    fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    if let Err(e) = fs::write(&tmp, contents).and_then(|_| fs::rename(&tmp, &target)) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweeps::{RowStatus, SweepRow};

    #[test]
    fn number_format_is_exact_enough() {
        assert_eq!(num(10.0), "1.000000000000e1");
        assert_eq!(num(-0.0018), "-1.800000000000e-3");
        assert_eq!(num(f64::NAN), "NaN");
        let x = 0.123456789123;
        let back: f64 = num(x).parse().unwrap();
        assert!((back - x).abs() < 1e-12 * x);
    }

    #[test]
    fn ratio_csv_has_beat_column() {
        let result = SweepResult {
            axis: SweepAxis::FrequencyRatio,
            rows: vec![SweepRow {
                axis_value: 2.0,
                gain: 10.0,
                amplitude: 10000.0,
                status: RowStatus::Settled,
                periods_used: 5,
                beat_frequency: None,
                modulation_depth: Some(0.0),
                oracle_gain: None,
                required_delta: None,
                oracle_delta: None,
                message: None,
            }],
        };
        let csv = sweep_csv(&result);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "axis_value,gain,amplitude,status,beat_frequency,modulation_depth"
        );
        assert_eq!(
            lines[1],
            "2.000000000000e0,1.000000000000e1,1.000000000000e4,Settled,,0.000000000000e0"
        );
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn svg_log_axis_skips_nonpositive() {
        let s = svg_plot("g", "delta", "gain", &[0.0, 1.0, 2.0], &[0.0, 1.0, 10.0], true).unwrap();
        assert!(s.starts_with("<svg"));
        assert_eq!(s.matches("<polyline").count(), 1);
        assert!(s.contains("(log10)"));
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_atomic(dir.path(), "a.csv", "x\n").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "x\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_atomic(dir.path(), "../b.csv", "x").is_err());
    }
}
