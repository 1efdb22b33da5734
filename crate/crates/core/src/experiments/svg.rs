//! Minimal standalone SVG charts.

use std::fmt::Write as _;

pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

const PALETTE: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Grouped vertical bars on a fixed `[0, 1]` axis.
pub fn bar_chart(title: &str, categories: &[String], series: &[Series]) -> String {
    let (left, top, plot_h, bottom) = (60.0, 40.0, 300.0, 120.0);
    let group_w = 40.0 + 28.0 * series.len() as f64;
    let width = left + 20.0 + group_w * categories.len().max(1) as f64 + 140.0;
    let height = top + plot_h + bottom;
    let y = |v: f64| top + plot_h * (1.0 - v.clamp(0.0, 1.0));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<text x="{left}" y="22" font-size="15">{}</text>"#, escape(title));
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        let (x2, yy, tx, ty) = (width - 140.0, y(v), left - 6.0, y(v) + 4.0);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" x2="{x2}" y1="{yy}" y2="{yy}" stroke="#ddd"/><text x="{tx}" y="{ty}" text-anchor="end">{v:.1}</text>"##
        );
    }
    for (c, label) in categories.iter().enumerate() {
        let x0 = left + 20.0 + group_w * c as f64;
        for (k, ser) in series.iter().enumerate() {
            let v = ser.values.get(c).copied().unwrap_or(f64::NAN);
            if !v.is_finite() {
                continue;
            }
            let x = x0 + 28.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{}" width="24" height="{}" fill="{}"><title>{}: {v:.4}</title></rect>"#,
                y(v),
                top + plot_h - y(v),
                PALETTE[k % PALETTE.len()],
                escape(&ser.name)
            );
        }
        let cx = x0 + 14.0 * series.len() as f64;
        let _ = writeln!(
            s,
            r#"<text transform="translate({cx},{}) rotate(35)">{}</text>"#,
            top + plot_h + 14.0,
            escape(label)
        );
    }
    for (k, ser) in series.iter().enumerate() {
        let lx = width - 130.0;
        let ly = top + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{lx}" y="{ly}" width="12" height="12" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            PALETTE[k % PALETTE.len()],
            lx + 18.0,
            ly + 10.0,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Polylines of per-epoch values, one per series, on a shared y range.
pub fn line_chart(title: &str, series: &[Series]) -> String {
    let (left, top, w, h) = (60.0, 40.0, 520.0, 280.0);
    let finite = || {
        series
            .iter()
            .flat_map(|s| s.values.iter().copied())
            .filter(|v| v.is_finite())
    };
    let lo = finite().fold(f64::INFINITY, f64::min).min(0.0);
    let hi = finite().fold(f64::NEG_INFINITY, f64::max).max(lo + 1e-12);
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(1).max(2);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">"#,
        left + w + 150.0,
        top + h + 40.0
    );
    let _ = writeln!(s, r#"<text x="{left}" y="22" font-size="15">{}</text>"#, escape(title));
    let _ = writeln!(
        s,
        r##"<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="#999"/><text x="{}" y="{}" text-anchor="end">{hi:.3}</text><text x="{}" y="{}" text-anchor="end">{lo:.3}</text>"##,
        left - 4.0,
        top + 10.0,
        left - 4.0,
        top + h
    );
    for (k, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, v)| {
                let x = left + w * i as f64 / (n - 1) as f64;
                let y = top + h * (1.0 - (v - lo) / (hi - lo));
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/><text x="{}" y="{}" fill="{color}">{}</text>"#,
            pts.join(" "),
            left + w + 10.0,
            top + 14.0 + 18.0 * k as f64,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}
