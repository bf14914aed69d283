//! Static SVG: mean regret against log-scaled rounds, one polyline per cell.

use std::fmt::Write;

use super::sweep::RegretCurve;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 200.0;
const MARGIN_Y: f64 = 40.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders `curves` into a standalone SVG document.
pub fn regret_svg(title: &str, curves: &[RegretCurve]) -> String {
    let max_round = curves
        .iter()
        .flat_map(|c| c.rounds.iter().copied())
        .max()
        .unwrap_or(10)
        .max(10) as f64;
    let max_regret = curves
        .iter()
        .flat_map(|c| c.mean_regret.iter().copied())
        .filter(|r| r.is_finite())
        .fold(0.0, f64::max);
    let max_regret = if max_regret > 0.0 { max_regret * 1.05 } else { 1.0 };
    let decades = max_round.log10().ceil().max(1.0);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let x = |round: f64| MARGIN_LEFT + plot_w * round.log10() / decades;
    let y = |regret: f64| HEIGHT - MARGIN_Y - plot_h * regret / max_regret;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    );
    let (x0, y0) = (MARGIN_LEFT, HEIGHT - MARGIN_Y);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0},{} V{y0} H{}" fill="none" stroke="black"/>"#,
        MARGIN_Y,
        x0 + plot_w
    );
    for d in 0..=decades as u32 {
        let px = x(10f64.powi(d as i32));
        let _ = writeln!(
            svg,
            r##"<line x1="{px}" y1="{y0}" x2="{px}" y2="{}" stroke="#ddd"/><text x="{px}" y="{}" text-anchor="middle">1e{d}</text>"##,
            MARGIN_Y,
            y0 + 16.0
        );
    }
    for k in 0..=4 {
        let v = max_regret * k as f64 / 4.0;
        let py = y(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{x0}" y1="{py}" x2="{}" y2="{py}" stroke="#eee"/><text x="{}" y="{}" text-anchor="end">{v:.3}</text>"##,
            x0 + plot_w,
            x0 - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">round n (log scale)</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 6.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">mean pseudo-regret</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = c
            .rounds
            .iter()
            .zip(&c.mean_regret)
            .filter(|(_, r)| r.is_finite())
            .map(|(&n, &r)| format!("{:.2},{:.2}", x(n as f64), y(r)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let ly = MARGIN_Y + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 16.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{} / {}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&c.instance_id),
            c.algo
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Algorithm;

    #[test]
    fn one_polyline_per_curve() {
        let curve = |algo| RegretCurve {
            instance_id: "a<b".into(),
            algo,
            rounds: vec![1, 10, 100],
            mean_regret: vec![0.0, 1.0, 2.5],
        };
        let svg = regret_svg("t", &[curve(Algorithm::KurtosisUcb), curve(Algorithm::FIndex)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a&lt;b / f_index"));
    }

    #[test]
    fn empty_input_still_renders() {
        assert!(regret_svg("none", &[]).contains("</svg>"));
    }
}
