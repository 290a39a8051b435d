use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::runner::BerCurve;

/// Lowest BER shown; zero-BER points are drawn here.
pub const BER_FLOOR: f64 = 1e-6;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn axis_label(sweep: &str) -> &str {
    match sweep {
        "rank" => "rank D",
        "snr_db" => "SNR (dB)",
        "symbols" => "received symbols",
        other => other,
    }
}

/// Self-contained SVG of a BER curve: logarithmic BER axis from the floor
/// to 1, one polyline per scheme, and a legend.
pub fn render_svg(curve: &BerCurve) -> Result<String> {
    if curve.points.is_empty() {
        return Err(Error::Config("cannot plot an empty curve".into()));
    }
    let (mut x_min, mut x_max) = curve
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.value), hi.max(p.value)));
    if x_max - x_min < 1e-12 {
        x_min -= 1.0;
        x_max += 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let decades = -BER_FLOOR.log10();
    let sx = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |ber: f64| TOP + (-ber.max(BER_FLOOR).log10()) / decades * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">BER vs {}</text>"#,
        LEFT + plot_w / 2.0,
        axis_label(&curve.sweep)
    );

    for k in 0..=decades as i32 {
        let y = TOP + k as f64 / decades * plot_h;
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e-{k}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }

    let mut ticks: Vec<f64> = curve.points.iter().map(|p| p.value).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    if ticks.len() > 10 {
        ticks = (0..=5).map(|k| x_min + (x_max - x_min) * k as f64 / 5.0).collect();
    }
    for t in ticks {
        let x = sx(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000000"/>"##,
            TOP + plot_h,
            TOP + plot_h + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            t
        );
    }
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#000000"/>"##
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 18.0,
        axis_label(&curve.sweep)
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">BER</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let mut any_floor = false;
    for (k, scheme) in curve.schemes().into_iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let series = curve.series(scheme);
        let pts: Vec<String> = series
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.value), sy(p.ber)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        for p in &series {
            let fill = if p.ber <= 0.0 {
                any_floor = true;
                "white"
            } else {
                color
            };
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{fill}" stroke="{color}"/>"#,
                sx(p.value),
                sy(p.ber)
            );
        }
        let ly = TOP + 16.0 + 20.0 * k as f64;
        let lx = LEFT + plot_w + 16.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"/>"#,
            lx + 24.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            scheme
        );
    }
    if any_floor {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">hollow markers: BER = 0, drawn at 1e-6</text>"#,
            LEFT + plot_w + 16.0,
            TOP + plot_h
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(curve: &BerCurve, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(curve)?)?;
    Ok(())
}
