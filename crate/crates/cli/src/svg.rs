//! Minimal log-log line chart.

use std::collections::BTreeMap;
use std::fmt::Write;

use rrsgd_core::SweepRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

/// Plots mean squared distance against `K` (or against `n` when every row has
/// the same `K`), one line per remaining key.
pub fn render(rows: &[SweepRow]) -> Result<String, String> {
    let first = rows.first().ok_or("no data rows")?;
    let by_n = rows.iter().all(|r| r.k == first.k) && rows.iter().any(|r| r.n != first.n);
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.mean > 0.0) {
        let (label, x) = if by_n {
            (format!("{} a={} K={}", r.schedule, r.alpha, r.k), r.n as f64)
        } else {
            (format!("{} a={} n={}", r.schedule, r.alpha, r.n), r.k as f64)
        };
        groups.entry(label).or_default().push((x.log10(), r.mean.log10()));
    }
    if groups.is_empty() {
        return Err("no positive means to plot".into());
    }
    let series: Vec<Series> = groups
        .into_iter()
        .map(|(label, mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { label, points }
        })
        .collect();

    let (x_lo, x_hi) = padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y_lo, y_hi) = padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333"/>"##
    );

    for (value, px) in log_ticks(x_lo, x_hi).into_iter().map(|v| (v, sx(v))) {
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="#333"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0,
            tick_label(value)
        );
    }
    for (value, py) in log_ticks(y_lo, y_hi).into_iter().map(|v| (v, sy(v))) {
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{py:.1}" x2="{LEFT}" y2="{py:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            tick_label(value)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        if by_n { "n" } else { "K" }
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(20 {:.1}) rotate(-90)" text-anchor="middle">E‖y_K − x*‖²</text>"#,
        TOP + plot_h / 2.0
    );

    for (j, s) in series.iter().enumerate() {
        let color = PALETTE[j % PALETTE.len()];
        let path: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(svg, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
        }
        let ly = TOP + 10.0 + 18.0 * j as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{:.1}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let pad = ((hi - lo) * 0.05).max(0.05);
    (lo - pad, hi + pad)
}

/// Decade ticks inside `[lo, hi]` (log10 units), or the two ends when no decade fits.
fn log_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let decades: Vec<f64> = (lo.ceil() as i64..=hi.floor() as i64).map(|d| d as f64).collect();
    if decades.len() >= 2 {
        decades
    } else {
        let step = (hi - lo) / 4.0;
        (0..=4).map(|i| lo + step * i as f64).collect()
    }
}

fn tick_label(log_value: f64) -> String {
    if (log_value - log_value.round()).abs() < 1e-9 {
        let e = log_value.round() as i64;
        if (0..=4).contains(&e) {
            format!("{}", 10f64.powi(e as i32))
        } else {
            format!("1e{e}")
        }
    } else {
        format!("{:.3}", 10f64.powf(log_value))
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
