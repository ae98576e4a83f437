//! Hand-written SVG line plots.

use std::fmt::Write as _;

use ks_core::closed_loop::{linear_fit, SimulationTrace};
use ks_core::KsError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_y: bool,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let y = if self.log_y { y.log10() } else { y };
        TOP + (self.y1 - y) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the series; with `log_y` non-positive values are dropped.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], log_y: bool) -> Result<String, KsError> {
    let keep = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!log_y || y > 0.0);
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied().filter(keep)).collect();
    if all.is_empty() {
        return Err(KsError::Schema("nothing to plot".into()));
    }
    let (mut x0, mut x1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let (mut y0, mut y1) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(ty(p.1)), b.max(ty(p.1))));
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if log_y {
        y0 = y0.floor();
        y1 = y1.ceil();
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
    } else {
        let pad = if y1 > y0 { 0.05 * (y1 - y0) } else { y0.abs().max(1.0) };
        y0 -= pad;
        y1 += pad;
    }
    let f = Frame { x0, x1, y0, y1, log_y };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (bx, by, bw, bh) = (LEFT, TOP, WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let _ = writeln!(svg, r#"<rect x="{bx}" y="{by}" width="{bw}" height="{bh}" fill="none" stroke="black"/>"#);

    for i in 0..=5 {
        let x = x0 + (x1 - x0) * i as f64 / 5.0;
        let px = f.px(x);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            by + bh,
            by + bh + 5.0,
            by + bh + 18.0,
            tick_label(x)
        );
    }
    let y_ticks: Vec<f64> = if log_y {
        let step = ((y1 - y0) / 8.0).ceil().max(1.0);
        let mut v = Vec::new();
        let mut e = y0;
        while e <= y1 + 1e-9 {
            v.push(e);
            e += step;
        }
        v
    } else {
        (0..=5).map(|i| y0 + (y1 - y0) * i as f64 / 5.0).collect()
    };
    for t in y_ticks {
        let value = if log_y { 10f64.powf(t) } else { t };
        let py = f.py(value);
        let label = if log_y { format!("1e{}", t.round() as i64) } else { tick_label(t) };
        let _ = writeln!(
            svg,
            r##"<line x1="{bx}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
            bx + bw,
            bx - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        bx + bw / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        by + bh / 2.0,
        by + bh / 2.0,
        escape(y_label)
    );

    for (k, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .copied()
            .filter(keep)
            .map(|(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-label="{}" fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
            escape(&s.label),
            s.color,
            pts.join(" ")
        );
        let ly = by + 16.0 + 16.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="1.5"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            bx + bw - 170.0,
            bx + bw - 145.0,
            s.color,
            bx + bw - 140.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-3 && v.abs() < 1e4 {
        format!("{:.4}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

/// Decay rate of `norm_w` from a least-squares fit of its logarithm.
pub fn fitted_decay_rate(trace: &SimulationTrace) -> f64 {
    let pts: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(&trace.norm_w)
        .filter(|(_, w)| **w > 0.0)
        .map(|(t, w)| (*t, w.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    -linear_fit(&pts).0
}

/// Semi-log plot of `‖v‖`, `‖(I-K)v‖` and the envelope `‖w(0)‖ e^{-νt}`.
pub fn plot_trace(trace: &SimulationTrace, nu: f64) -> Result<String, KsError> {
    if trace.is_empty() {
        return Err(KsError::Schema("empty trace".into()));
    }
    let t0 = trace.times[0];
    let t1 = *trace.times.last().unwrap();
    let w0 = trace.norm_w[0];
    let zip = |ys: &[f64]| trace.times.iter().copied().zip(ys.iter().copied()).collect::<Vec<_>>();
    let series = [
        Series {
            label: "‖v‖".into(),
            color: "#1f77b4",
            dashed: false,
            points: zip(&trace.norm_v),
        },
        Series {
            label: "‖(I-K)v‖".into(),
            color: "#d62728",
            dashed: false,
            points: zip(&trace.norm_w),
        },
        // Exponential in time, so two points draw it exactly on a log axis.
        Series {
            label: format!("envelope ν = {}", tick_label(nu)),
            color: "black",
            dashed: true,
            points: vec![(t0, w0), (t1, w0 * (-nu * (t1 - t0)).exp())],
        },
    ];
    line_plot("closed-loop decay", "t", "L² norm", &series, true)
}
