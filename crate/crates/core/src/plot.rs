//! Minimal standalone SVG output: line charts for 1-axis sweeps and a heat
//! map for 2-axis sweeps. The CSV stays the authoritative artifact.

use std::fmt::Write;

use crate::sweep::SweepResult;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Line chart for 1-axis sweeps, heat map for 2-axis sweeps.
pub fn render(result: &SweepResult) -> String {
    if result.spec.axes.len() == 2 {
        heat_map(result)
    } else {
        line_chart(result)
    }
}

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn axis_label(result: &SweepResult, i: usize) -> String {
    let a = &result.spec.axes[i];
    match a.name.display_unit() {
        "1" => a.name.to_string(),
        u => format!("{} [{}]", a.name, u),
    }
}

fn frame(out: &mut String, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) {
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let px = LEFT + f * pw;
        let py = TOP + ph - f * ph;
        let _ = writeln!(
            out,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + ph + 16.0,
            tick(x.0 + f * (x.1 - x.0))
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py + 4.0,
            tick(y.0 + f * (y.1 - y.0))
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{:.4}", v)
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo, lo + 1.0)
    } else {
        (lo, hi)
    }
}

pub fn line_chart(result: &SweepResult) -> String {
    let curves = result.curves();
    let x = span(curves.iter().flat_map(|c| c.xs.iter().copied()));
    let y_max = curves
        .iter()
        .flat_map(|c| c.log_negativity.iter().flatten().copied())
        .fold(0.0, f64::max);
    let y = (0.0, if y_max > 0.0 { y_max * 1.05 } else { 1.0 });
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let to_px = |xv: f64, yv: f64| {
        (
            LEFT + (xv - x.0) / (x.1 - x.0) * pw,
            TOP + ph - (yv - y.0) / (y.1 - y.0) * ph,
        )
    };

    let mut out = String::new();
    header(&mut out);
    frame(&mut out, &axis_label(result, 0), "E_N", x, y);
    let family = result.spec.family.as_ref();
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        // Unstable points break the line.
        let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for (&xv, e) in c.xs.iter().zip(&c.log_negativity) {
            match e {
                Some(e) => segments.last_mut().expect("nonempty").push(to_px(xv, *e)),
                None => segments.push(Vec::new()),
            }
        }
        for seg in segments.iter().filter(|s| !s.is_empty()) {
            let pts: Vec<String> = seg.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        if let (Some(f), Some(v)) = (family, c.family) {
            let ly = TOP + 14.0 + 18.0 * i as f64;
            let lx = WIDTH - RIGHT + 12.0;
            let unit = match f.name.display_unit() {
                "1" => String::new(),
                "Gamma" => "Γ".to_string(),
                u => format!(" {u}"),
            };
            let _ = writeln!(
                out,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{} = {}{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                f.name,
                v,
                escape(&unit)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Linear white → dark blue ramp.
fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(255.0, 8.0),
        lerp(255.0, 48.0),
        lerp(255.0, 107.0)
    )
}

pub fn heat_map(result: &SweepResult) -> String {
    let spec = &result.spec;
    let (nx, ny) = (spec.axes[0].points, spec.axes[1].points);
    let x = (spec.axes[0].start, spec.axes[0].end);
    let y = (spec.axes[1].start, spec.axes[1].end);
    let z_max = result
        .records
        .iter()
        .filter_map(|r| r.log_negativity)
        .fold(0.0, f64::max);
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let (cw, ch) = (pw / nx as f64, ph / ny as f64);

    let mut out = String::new();
    header(&mut out);
    // Only the first family member is drawn.
    for r in result.records.iter().take(nx * ny) {
        let (i, j) = (r.point.index / ny, r.point.index % ny);
        let fill = match r.log_negativity {
            Some(e) if z_max > 0.0 => color(e / z_max),
            Some(_) => color(0.0),
            None => "#bbbbbb".to_string(),
        };
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            LEFT + i as f64 * cw,
            TOP + ph - (j + 1) as f64 * ch,
            cw + 0.3,
            ch + 0.3
        );
    }
    frame(
        &mut out,
        &axis_label(result, 0),
        &axis_label(result, 1),
        x,
        y,
    );
    let (bx, bh) = (WIDTH - RIGHT + 20.0, ph);
    for k in 0..50 {
        let f = k as f64 / 50.0;
        let _ = writeln!(
            out,
            r#"<rect x="{bx}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
            TOP + bh - (f + 0.02) * bh,
            bh / 50.0 + 0.3,
            color(f)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}">E_N {}</text><text x="{}" y="{}">0</text><text x="{}" y="{}">grey: unstable</text>"#,
        bx + 20.0,
        TOP + 10.0,
        tick(z_max),
        bx + 20.0,
        TOP + bh,
        bx - 10.0,
        TOP + bh + 30.0
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{preset, run_sweep};

    #[test]
    fn line_chart_has_one_series_per_family_member() {
        let mut s = preset("fig2").unwrap();
        s.axes[0].points = 5;
        let svg = render(&run_sweep(&s, Some(1)).unwrap());
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("beta = ").count(), 3);
        assert!(svg.contains("<polyline"));
    }

    #[test]
    fn heat_map_has_one_cell_per_point() {
        let mut s = preset("fig5").unwrap();
        s.axes[0].points = 3;
        s.axes[1].points = 4;
        let svg = render(&run_sweep(&s, Some(1)).unwrap());
        let cells = svg.matches("<rect x=").count();
        // 12 cells + frame + 50 colour-bar steps.
        assert_eq!(cells, 12 + 1 + 50);
    }
}
