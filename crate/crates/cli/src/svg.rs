//! Minimal self-contained SVG line chart for rank-score curves.

use std::fmt::Write as _;

use cfa_core::ranking::RscSeries;

pub const WIDTH: f64 = 1000.0;
pub const HEIGHT: f64 = 600.0;

const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One polyline per series on a fixed 1000×600 canvas, rank on the x axis
/// and normalized score (0 to 1) on the y axis, with a legend of system ids.
pub fn rsc_chart(series: &[RscSeries], title: &str) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let n = series.iter().map(|s| s.points.len()).max().unwrap_or(0);
    let x_of = |rank: usize| {
        if n <= 1 {
            LEFT + plot_w / 2.0
        } else {
            LEFT + plot_w * (rank - 1) as f64 / (n - 1) as f64
        }
    };
    let y_of = |score: f64| TOP + plot_h * (1.0 - score.clamp(0.0, 1.0));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    // axes and ticks
    let _ = writeln!(
        svg,
        r#"<path d="M{LEFT} {TOP} L{LEFT} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#,
        y0 = TOP + plot_h,
        x1 = LEFT + plot_w
    );
    for tick in 0..=4 {
        let v = tick as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{x0}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{tx}" y="{ty:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{v:.2}</text>"##,
            x0 = LEFT - 5.0,
            tx = LEFT - 8.0,
            ty = y + 4.0
        );
    }
    if n > 0 {
        for rank in [1, n.div_ceil(2), n] {
            let x = x_of(rank);
            let _ = writeln!(
                svg,
                r#"<text x="{x:.2}" y="{ty}" font-family="sans-serif" font-size="12" text-anchor="middle">{rank}</text>"#,
                ty = TOP + plot_h + 18.0
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">rank</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{y}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {y})">normalized score</text>"#,
        y = TOP + plot_h / 2.0
    );

    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        svg.push_str(r#"<polyline fill="none" stroke=""#);
        svg.push_str(color);
        svg.push_str(r#"" stroke-width="2" points=""#);
        for (i, &(rank, score)) in s.points.iter().enumerate() {
            if i > 0 {
                svg.push(' ');
            }
            let _ = write!(svg, "{:.2},{:.2}", x_of(rank), y_of(score));
        }
        svg.push_str("\"/>\n");

        let ly = TOP + 10.0 + 22.0 * k as f64;
        let lx = LEFT + plot_w + 20.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{x2}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{tx}" y="{ty}" font-family="sans-serif" font-size="13">{id}</text>"#,
            x2 = lx + 24.0,
            tx = lx + 30.0,
            ty = ly + 4.0,
            id = escape(&s.system_id)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(id: &str, values: &[f64]) -> RscSeries {
        RscSeries { system_id: id.into(), points: values.iter().enumerate().map(|(i, &v)| (i + 1, v)).collect() }
    }

    #[test]
    fn one_polyline_per_series() {
        let svg = rsc_chart(&[series("A", &[1.0, 0.5, 0.0]), series("B<1>", &[0.7, 0.6, 0.2])], "t");
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(r#"viewBox="0 0 1000 600""#));
        assert!(svg.contains("B&lt;1&gt;"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn single_point_is_centered() {
        let svg = rsc_chart(&[series("A", &[0.5])], "");
        assert!(svg.contains("455.00,290.00"));
    }
}
