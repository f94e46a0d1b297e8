//! CSV and SVG output of convergence reports.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::{ConvergenceReport, LevelRow, Status, ERROR_FAMILIES};

/// Column header; `status` is 0 for a converged level.
pub const CSV_HEADER: &str = "level,h,ndof_u,ndof_p,ndof_t,iters,err_u_l2,err_u_w1s,err_pi,err_t_h1,status";

fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        // 17 significant digits round-trip every f64
        format!("{v:.16e}")
    }
}

pub fn csv_string(report: &ConvergenceReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.level,
            num(r.h),
            r.ndof_u,
            r.ndof_p,
            r.ndof_t,
            r.iters,
            num(r.err_u_l2),
            num(r.err_u_w1s),
            num(r.err_pi),
            num(r.err_t_h1),
            r.status.code()
        );
    }
    out
}

pub fn emit_csv(report: &ConvergenceReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, csv_string(report)).map_err(|e| Error::io(path, e))
}

/// Parses the rows of a CSV written by [`emit_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<LevelRow>> {
    let bad = |line: usize, message: String| Error::Parse {
        path: "<csv>".into(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(bad(1, "missing or unexpected header".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(bad(i + 1, format!("expected 11 fields, found {}", f.len())));
        }
        let int = |k: usize| f[k].parse::<usize>().map_err(|e| bad(i + 1, format!("field {k}: {e}")));
        let real = |k: usize| f[k].parse::<f64>().map_err(|e| bad(i + 1, format!("field {k}: {e}")));
        let code = f[10].parse::<u8>().map_err(|e| bad(i + 1, format!("status: {e}")))?;
        rows.push(LevelRow {
            level: int(0)?,
            h: real(1)?,
            ndof_u: int(2)?,
            ndof_p: int(3)?,
            ndof_t: int(4)?,
            iters: int(5)?,
            err_u_l2: real(6)?,
            err_u_w1s: real(7)?,
            err_pi: real(8)?,
            err_t_h1: real(9)?,
            status: Status::from_code(code).ok_or_else(|| bad(i + 1, format!("unknown status {code}")))?,
        });
    }
    Ok(rows)
}

/// One polyline of a log-log plot.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub h: Vec<f64>,
    pub err: Vec<f64>,
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 70.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn decade_label(e: i32) -> String {
    format!("1e{e}")
}

/// Standalone log-log SVG. The dotted reference line passes through the
/// finest point of `reference` with the slope of its two finest points.
pub fn render_loglog_svg(title: &str, series: &[Series], reference: &Series) -> Result<String> {
    let finite = |s: &Series| -> Vec<(f64, f64)> {
        s.h.iter()
            .zip(&s.err)
            .filter(|(h, e)| h.is_finite() && e.is_finite() && **h > 0.0 && **e > 0.0)
            .map(|(h, e)| (*h, *e))
            .collect()
    };
    let ref_pts = finite(reference);
    if ref_pts.len() < 2 {
        return Err(Error::invalid("a log-log plot needs at least two successful levels"));
    }
    let (a, b) = (ref_pts[ref_pts.len() - 2], ref_pts[ref_pts.len() - 1]);
    let slope = (a.1 / b.1).ln() / (a.0 / b.0).ln();

    let pts: Vec<Vec<(f64, f64)>> = series.iter().map(finite).collect();
    let all: Vec<(f64, f64)> = pts.iter().flatten().chain(&ref_pts).copied().collect();
    let (mut hmin, mut hmax, mut emin, mut emax) = (f64::INFINITY, 0.0f64, f64::INFINITY, 0.0f64);
    for &(h, e) in &all {
        hmin = hmin.min(h);
        hmax = hmax.max(h);
        emin = emin.min(e);
        emax = emax.max(e);
    }
    let (x0, x1) = (hmin.log10().floor() as i32, hmax.log10().ceil() as i32);
    let (y0, y1) = (emin.log10().floor() as i32, emax.log10().ceil() as i32);
    let (x1, y1) = (x1.max(x0 + 1), y1.max(y0 + 1));
    let px = |h: f64| MARGIN + (h.log10() - x0 as f64) / (x1 - x0) as f64 * (W - 2.0 * MARGIN);
    let py = |e: f64| H - MARGIN - (e.log10() - y0 as f64) / (y1 - y0) as f64 * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    for e in x0..=x1 {
        let x = px(10f64.powi(e));
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{MARGIN}" stroke="#dddddd"/>"##, H - MARGIN);
        let _ = writeln!(
            s,
            r#"<text class="xtick" x="{x:.2}" y="{}" text-anchor="middle" font-size="11">{}</text>"#,
            H - MARGIN + 16.0,
            decade_label(e)
        );
    }
    for e in y0..=y1 {
        let y = py(10f64.powi(e));
        let _ = writeln!(s, r##"<line x1="{MARGIN}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#dddddd"/>"##, W - MARGIN);
        let _ = writeln!(
            s,
            r#"<text class="ytick" x="{}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
            MARGIN - 6.0,
            y + 4.0,
            decade_label(e)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">h</text>"#, W / 2.0, H - 20.0);
    let _ = writeln!(s, r#"<text x="18" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 18 {})">error</text>"#, H / 2.0, H / 2.0);

    for (k, (ser, p)) in series.iter().zip(&pts).enumerate() {
        if p.is_empty() {
            continue;
        }
        let color = COLORS[k % COLORS.len()];
        let coords: Vec<String> = p.iter().map(|&(h, e)| format!("{:.2},{:.2}", px(h), py(e))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, coords.join(" "));
        for &(h, e) in p {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(h), py(e));
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            MARGIN + 10.0,
            MARGIN + 16.0 + 14.0 * k as f64,
            escape(&ser.label)
        );
    }

    // reference line across the reference h range, through its finest point
    let (hf, ef) = b;
    let hc = ref_pts[0].0;
    let ec = ef * (hc / hf).powf(slope);
    let _ = writeln!(
        s,
        r#"<line class="reference" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-dasharray="2,4"/>"#,
        px(hc),
        py(ec),
        px(hf),
        py(ef)
    );
    let _ = writeln!(
        s,
        r#"<text class="slope" x="{:.2}" y="{:.2}" font-size="12">{slope:.2}</text>"#,
        0.5 * (px(hc) + px(hf)),
        0.5 * (py(ec) + py(ef)) - 8.0
    );
    s.push_str("</svg>\n");
    Ok(s)
}

fn report_series(report: &ConvergenceReport, family: usize) -> Series {
    let ok: Vec<&LevelRow> = report.rows.iter().filter(|r| r.is_ok()).collect();
    Series {
        label: ERROR_FAMILIES[family].to_string(),
        h: ok.iter().map(|r| r.h).collect(),
        err: ok.iter().map(|r| r.errors()[family]).collect(),
    }
}

fn write(path: &Path, text: String) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Error-versus-h plot of one report: one polyline per error family and a
/// reference slope taken from the velocity W^{1,s} error on the two finest levels.
pub fn emit_loglog_svg(report: &ConvergenceReport, path: impl AsRef<Path>) -> Result<()> {
    let series: Vec<Series> = (0..ERROR_FAMILIES.len()).map(|f| report_series(report, f)).collect();
    let title = format!("{} p={} sigma={}", report.metadata.get("case").map_or("", String::as_str), report.p, report.sigma);
    write(path.as_ref(), render_loglog_svg(&title, &series, &series[1])?)
}

/// Velocity W^{1,s} error for several sigma values; the reference slope comes
/// from the sigma = 0 series.
pub fn emit_sigma_svg(reports: &[&ConvergenceReport], path: impl AsRef<Path>) -> Result<()> {
    let zero = reports
        .iter()
        .find(|r| r.sigma == 0.0)
        .ok_or_else(|| Error::invalid("sigma sweep plot needs a sigma = 0 series"))?;
    let series: Vec<Series> = reports
        .iter()
        .map(|r| Series {
            label: format!("sigma={}", r.sigma),
            ..report_series(r, 1)
        })
        .collect();
    let title = format!("velocity error, p={}", zero.p);
    write(path.as_ref(), render_loglog_svg(&title, &series, &report_series(zero, 1))?)
}
