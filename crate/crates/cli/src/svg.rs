//! Minimal log-log line charts.

use std::fmt::Write;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn decade_bounds(lo: f64, hi: f64) -> (f64, f64) {
    let (a, b) = (lo.log10().floor(), hi.log10().ceil());
    if a == b {
        (a, a + 1.0)
    } else {
        (a, b)
    }
}

/// Renders the positive points of each series; non-positive values are skipped.
pub fn log_log(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let pos = |s: &Series| s.points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).copied().collect::<Vec<_>>();
    let all: Vec<(f64, f64)> = series.iter().flat_map(pos).collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{title}</text>"#, W / 2.0);
    if all.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let fold = |f: fn(&(f64, f64)) -> f64| {
        all.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
    };
    let (x0, x1) = decade_bounds(fold(|p| p.0).0, fold(|p| p.0).1);
    let (y0, y1) = decade_bounds(fold(|p| p.1).0, fold(|p| p.1).1);
    let px = |x: f64| MARGIN + (x.log10() - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y.log10() - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    for e in x0 as i32..=x1 as i32 {
        let x = px(10f64.powi(e));
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, H - MARGIN, H - MARGIN + 5.0);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle" font-size="11">1e{e}</text>"#, H - MARGIN + 18.0);
    }
    for e in y0 as i32..=y1 as i32 {
        let y = py(10f64.powi(e));
        let _ = writeln!(svg, r#"<line x1="{}" y1="{y:.2}" x2="{MARGIN}" y2="{y:.2}" stroke="black"/>"#, MARGIN - 5.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="11">1e{e}</text>"#, MARGIN - 8.0, y + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{x_label}</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">{y_label}</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = pos(s).iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        if !pts.is_empty() {
            let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        }
        let ly = MARGIN + 16.0 + 16.0 * i as f64;
        let lx = W - MARGIN - 150.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="11">{}</text>"#, lx + 26.0, ly + 4.0, s.label);
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series() {
        let s = vec![
            Series { label: "a".into(), points: vec![(1e-3, 1e-6), (1e-2, 1e-4)] },
            Series { label: "b".into(), points: vec![(1e-3, 0.0), (1e-2, 1e-5)] },
        ];
        let doc = log_log("t", "x", "y", &s);
        assert_eq!(doc.matches("<polyline").count(), 2);
        assert!(doc.starts_with("<svg") && doc.trim_end().ends_with("</svg>"));
    }
}
