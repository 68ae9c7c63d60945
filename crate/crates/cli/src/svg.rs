//! Hand-emitted SVG charts: a reliability diagram over the unit square
//! and a simple line chart for trajectories and sweeps.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use probcal::metrics::ReliabilityCurve;

pub const WIDTH: f64 = 420.0;
pub const HEIGHT: f64 = 420.0;
pub const MARGIN: f64 = 50.0;

/// Map unit-square data coordinates to pixel coordinates of the
/// reliability plot (y axis flipped).
pub fn plot_coords(x: f64, y: f64) -> (f64, f64) {
    let span = WIDTH - 2.0 * MARGIN;
    (MARGIN + x * span, HEIGHT - MARGIN - y * span)
}

/// Reliability diagram: dashed identity diagonal plus one marker per
/// bin at (mean predicted, mean empirical).
pub fn render_reliability_svg(curve: &ReliabilityCurve, path: impl AsRef<Path>) -> std::io::Result<()> {
    if curve.bins.is_empty() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "empty reliability curve",
        ));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )?;
    writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#)?;

    let (x0, y0) = plot_coords(0.0, 0.0);
    let (x1, y1) = plot_coords(1.0, 1.0);
    // axes
    writeln!(w, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#)?;
    writeln!(w, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#)?;
    // dashed identity diagonal
    writeln!(
        w,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="gray" stroke-dasharray="6,4"/>"#
    )?;
    // tick labels
    for t in [0.0, 0.5, 1.0] {
        let (tx, _) = plot_coords(t, 0.0);
        writeln!(
            w,
            r#"<text x="{tx}" y="{}" font-size="12" text-anchor="middle">{t}</text>"#,
            y0 + 18.0
        )?;
        let (lx, ly) = plot_coords(0.0, t);
        writeln!(
            w,
            r#"<text x="{}" y="{ly}" font-size="12" text-anchor="end">{t}</text>"#,
            lx - 8.0
        )?;
    }
    writeln!(
        w,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">mean predicted probability</text>"#,
        WIDTH / 2.0,
        HEIGHT - 8.0
    )?;
    writeln!(
        w,
        r#"<text x="14" y="{}" font-size="14" text-anchor="middle" transform="rotate(-90 14 {})">empirical frequency</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    )?;

    for bin in &curve.bins {
        let (cx, cy) = plot_coords(bin.q_mean, bin.p_emp);
        writeln!(
            w,
            r#"<circle cx="{cx}" cy="{cy}" r="4" fill="steelblue"><title>count {}</title></circle>"#,
            bin.count
        )?;
    }
    writeln!(w, "</svg>")?;
    w.flush()
}

/// Line chart of (x, y) points with autoscaled axes.
pub fn render_line_svg(
    points: &[(f64, f64)],
    x_label: &str,
    y_label: &str,
    path: impl AsRef<Path>,
) -> std::io::Result<()> {
    if points.is_empty() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "empty line series",
        ));
    }
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
    }
    let span = WIDTH - 2.0 * MARGIN;
    let to_px = |x: f64, y: f64| {
        (
            MARGIN + (x - x_min) / (x_max - x_min) * span,
            HEIGHT - MARGIN - (y - y_min) / (y_max - y_min) * span,
        )
    };

    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )?;
    writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#)?;
    let (x0, y0) = to_px(x_min, y_min);
    let (x1, y1) = to_px(x_max, y_max);
    writeln!(w, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#)?;
    writeln!(w, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#)?;
    for (v, label_x) in [(x_min, true), (x_max, true), (y_min, false), (y_max, false)] {
        if label_x {
            let (px, _) = to_px(v, y_min);
            writeln!(
                w,
                r#"<text x="{px}" y="{}" font-size="11" text-anchor="middle">{v}</text>"#,
                y0 + 16.0
            )?;
        } else {
            let (_, py) = to_px(x_min, v);
            writeln!(
                w,
                r#"<text x="{}" y="{py}" font-size="11" text-anchor="end">{v}</text>"#,
                x0 - 6.0
            )?;
        }
    }
    writeln!(
        w,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 8.0
    )?;
    writeln!(
        w,
        r#"<text x="14" y="{}" font-size="14" text-anchor="middle" transform="rotate(-90 14 {})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    )?;

    let path_points: Vec<String> = points
        .iter()
        .map(|&(x, y)| {
            let (px, py) = to_px(x, y);
            format!("{px},{py}")
        })
        .collect();
    writeln!(
        w,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
        path_points.join(" ")
    )?;
    writeln!(w, "</svg>")?;
    w.flush()
}
