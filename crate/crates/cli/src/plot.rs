//! Minimal SVG line plot of rate against loss on a logarithmic y axis.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct Curve<'a> {
    pub label: &'a str,
    /// `(loss_db, rate)` pairs; nonpositive rates break the line.
    pub points: Vec<(f64, f64)>,
}

/// Decades spanned by the positive rates, at most 14 below the maximum.
fn decades(curves: &[Curve<'_>]) -> (i32, i32) {
    let positive = curves.iter().flat_map(|c| c.points.iter().map(|p| p.1)).filter(|r| *r > 0.0);
    let (lo, hi) = positive.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
    if !lo.is_finite() {
        return (-12, 0);
    }
    let top = hi.log10().ceil() as i32;
    let bottom = (lo.log10().floor() as i32).max(top - 14);
    (bottom, if top == bottom { top + 1 } else { top })
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 8.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|k| k * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn rate_plot(title: &str, curves: &[Curve<'_>]) -> String {
    let (x_min, x_max) = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.0))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (x_min, x_max) = if x_min.is_finite() && x_max > x_min { (x_min, x_max) } else { (0.0, 1.0) };
    let (d_lo, d_hi) = decades(curves);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |r: f64| TOP + (d_hi as f64 - r.log10()) / (d_hi - d_lo) as f64 * plot_h;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    )
    .unwrap();

    for d in d_lo..=d_hi {
        let y = sy(10f64.powi(d));
        writeln!(svg, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + plot_w)
            .unwrap();
        writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#, LEFT - 6.0, y + 4.0).unwrap();
    }
    let step = nice_step(x_max - x_min);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    for k in (x_min / step - 1e-9).ceil() as i64..=(x_max / step + 1e-9).floor() as i64 {
        let tick = k as f64 * step;
        let x = sx(tick);
        writeln!(svg, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#eee"/>"##, TOP + plot_h)
            .unwrap();
        writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{tick:.decimals$}</text>"#,
            TOP + plot_h + 18.0
        )
        .unwrap();
    }
    writeln!(svg, r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#)
        .unwrap();
    writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">loss (dB)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 20.0
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">key rate per pulse</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    )
    .unwrap();

    let floor = 10f64.powi(d_lo);
    for (i, curve) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut segment: Vec<String> = Vec::new();
        let flush = |segment: &mut Vec<String>, svg: &mut String| {
            if segment.len() > 1 {
                writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    segment.join(" ")
                )
                .unwrap();
            }
            segment.clear();
        };
        for &(x, r) in &curve.points {
            if r >= floor {
                segment.push(format!("{:.2},{:.2}", sx(x), sy(r)));
            } else {
                flush(&mut segment, &mut svg);
            }
        }
        flush(&mut segment, &mut svg);
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        )
        .unwrap();
        writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 26.0, ly + 4.0, escape(curve.label)).unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breaks_lines_at_zero_rate() {
        let curves =
            [Curve { label: "a<b", points: vec![(0.0, 1e-2), (1.0, 1e-3), (2.0, 0.0), (3.0, 1e-4), (4.0, 1e-5)] }];
        let svg = rate_plot("t", &curves);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains(">1e-5<") && svg.contains(">1e-2<"));
        assert!(svg.contains(">0.5<") && svg.contains(">4.0<"));
    }

    #[test]
    fn empty_and_all_zero_curves() {
        let svg = rate_plot("t", &[Curve { label: "z", points: vec![(0.0, 0.0), (1.0, 0.0)] }]);
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert!(rate_plot("t", &[]).contains("</svg>"));
    }

    #[test]
    fn ticks() {
        assert_eq!(nice_step(55.0), 10.0);
        assert_eq!(nice_step(10.0), 2.0);
        assert_eq!(decades(&[Curve { label: "", points: vec![(0.0, 0.3), (1.0, 2e-7)] }]), (-7, 0));
    }
}
