//! Log-log SVG chart of `|mc − zeroth|` and `|mc − expansion|` against `n`.

use std::fmt::Write as _;

use ito_edgeworth::estimator::Z95;

use crate::error::{CliError, CliResult};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_Y: f64 = 40.0;

/// One plotted point with its 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub n: f64,
    pub value: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: &'static str,
    pub color: &'static str,
    pub points: Vec<Point>,
}

fn column(headers: &csv::StringRecord, name: &str) -> CliResult<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::parse(format!("report CSV lacks column `{name}`")))
}

/// Reads the two residual series from a report CSV.
pub fn read_series(text: &str) -> CliResult<[Series; 2]> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::parse(format!("malformed report CSV: {e}")))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(CliError::parse("report CSV is empty"));
    }
    let idx = |name| column(&headers, name);
    let (n_i, mc_i, mcse_i, z_i, zse_i) = (idx("n")?, idx("mc_mean")?, idx("mc_stderr")?, idx("zeroth_mean")?, idx("zeroth_stderr")?);
    let (e_i, ese_i, sr_se_i) = (idx("expansion_mean")?, idx("expansion_stderr")?, idx("scaled_residual_stderr")?);
    let mut zeroth = Vec::new();
    let mut expansion = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::parse(format!("malformed report CSV: {e}")))?;
        let get = |i: usize, name: &str| -> CliResult<f64> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::parse(format!("report CSV row {}: bad `{name}` value `{raw}`", line + 1)))
        };
        let n = get(n_i, "n")?;
        if n <= 0.0 {
            return Err(CliError::parse(format!("report CSV row {}: n must be positive", line + 1)));
        }
        let mc = get(mc_i, "mc_mean")?;
        let zeroth_gap = mc - get(z_i, "zeroth_mean")?;
        let zeroth_se = get(mcse_i, "mc_stderr")?.hypot(get(zse_i, "zeroth_stderr")?);
        let expansion_gap = mc - get(e_i, "expansion_mean")?;
        // the residual stderr accounts for coupling; fall back to the sum rule
        let residual_se = get(sr_se_i, "scaled_residual_stderr")? / n.sqrt();
        let expansion_se = if residual_se > 0.0 {
            residual_se
        } else {
            get(mcse_i, "mc_stderr")?.hypot(get(ese_i, "expansion_stderr")?)
        };
        zeroth.push(point(n, zeroth_gap, zeroth_se));
        expansion.push(point(n, expansion_gap, expansion_se));
    }
    if zeroth.is_empty() {
        return Err(CliError::parse("report CSV has no rows"));
    }
    Ok([
        Series {
            label: "|mc − zeroth|",
            color: "#d62728",
            points: zeroth,
        },
        Series {
            label: "|mc − expansion|",
            color: "#1f77b4",
            points: expansion,
        },
    ])
}

fn point(n: f64, gap: f64, se: f64) -> Point {
    let value = gap.abs();
    Point {
        n,
        value,
        low: value - Z95 * se,
        high: value + Z95 * se,
    }
}

fn nice_decades(lo: f64, hi: f64) -> (f64, f64) {
    let lo = lo.log10().floor();
    let hi = hi.log10().ceil();
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

/// Renders the chart. Non-positive values and whisker ends are clipped to
/// the bottom of the axis.
pub fn render_svg(series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (n_min, n_max) = all().fold((f64::INFINITY, 0.0f64), |(a, b), p| (a.min(p.n), b.max(p.n)));
    let y_max = all().fold(0.0f64, |m, p| m.max(p.high).max(p.value));
    let positive_min = all()
        .flat_map(|p| [p.value, p.low])
        .filter(|v| *v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let y_max = if y_max > 0.0 { y_max } else { 1.0 };
    let y_floor = if positive_min.is_finite() { positive_min } else { y_max * 1e-3 };
    let (x0, x1) = nice_decades(n_min, n_max);
    let (y0, y1) = nice_decades(y_floor, y_max);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let sx = |n: f64| MARGIN_LEFT + (n.log10() - x0) / (x1 - x0) * plot_w;
    let sy = |v: f64| {
        let l = if v > 0.0 { v.log10().max(y0) } else { y0 };
        MARGIN_Y + (y1 - l) / (y1 - y0) * plot_h
    };

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    let (left, right, top, bottom) = (MARGIN_LEFT, MARGIN_LEFT + plot_w, MARGIN_Y, MARGIN_Y + plot_h);
    writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for d in (x0 as i32)..=(x1 as i32) {
        let x = sx(10f64.powi(d));
        writeln!(s, r##"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{bottom}" stroke="#ddd"/>"##).unwrap();
        writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"#, bottom + 16.0).unwrap();
    }
    for d in (y0 as i32)..=(y1 as i32) {
        let y = sy(10f64.powi(d));
        writeln!(s, r##"<line x1="{left}" y1="{y:.2}" x2="{right}" y2="{y:.2}" stroke="#ddd"/>"##).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#, left - 6.0, y + 4.0).unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">n</text>"#,
        left + plot_w / 2.0,
        HEIGHT - 6.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">absolute error</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    )
    .unwrap();

    for (i, series) in series.iter().enumerate() {
        writeln!(s, r#"<g class="series" stroke="{}" fill="{}">"#, series.color, series.color).unwrap();
        let coords: Vec<String> = series
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.n), sy(p.value)))
            .collect();
        writeln!(s, r#"<polyline fill="none" stroke-width="2" points="{}"/>"#, coords.join(" ")).unwrap();
        for p in &series.points {
            let x = sx(p.n);
            let (ylo, yhi) = (sy(p.low), sy(p.high));
            writeln!(
                s,
                r#"<line class="whisker" x1="{x:.2}" y1="{ylo:.2}" x2="{x:.2}" y2="{yhi:.2}" stroke-width="1"/>"#
            )
            .unwrap();
            writeln!(s, r#"<circle class="point" cx="{x:.2}" cy="{:.2}" r="3"/>"#, sy(p.value)).unwrap();
        }
        writeln!(s, "</g>").unwrap();
        let ly = top + 16.0 + 18.0 * i as f64;
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"/>"#,
            right + 12.0,
            right + 32.0,
            series.color
        )
        .unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, right + 38.0, ly + 4.0, series.label).unwrap();
    }
    s.push_str("</svg>\n");
    s
}
