//! Static SVG line charts of capital paths.

use std::fmt::Write;

use chrono::NaiveDate;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 48.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub struct Series<'a> {
    pub label: &'a str,
    pub values: &'a [f64],
    /// Peak and trough indices of a band to shade behind the line.
    pub drawdown: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step((hi - lo) / 5.0);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e6).contains(&a) {
        format!("{v:.0e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One chart with a line per series over shared dates. On a log scale
/// non-positive values break the line.
pub fn line_chart(title: &str, dates: &[NaiveDate], series: &[Series<'_>], scale: Scale) -> String {
    let n = dates.len();
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let tf = |v: f64| match scale {
        Scale::Linear => Some(v),
        Scale::Log if v > 0.0 => Some(v.log10()),
        Scale::Log => None,
    };

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for v in s.values.iter().filter(|v| v.is_finite()).filter_map(|v| tf(*v)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        lo -= pad;
        hi += pad;
    }
    let x = |i: usize| LEFT + plot_w * i as f64 / (n.max(2) - 1) as f64;
    let y = |t: f64| TOP + plot_h * (hi - t) / (hi - lo);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    for (i, s) in series.iter().enumerate() {
        if let Some((p, t)) = s.drawdown.filter(|(p, t)| t > p && *t < n) {
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{TOP:.2}" width="{:.2}" height="{plot_h:.2}" fill="{}" fill-opacity="0.12"/>"#,
                x(p),
                x(t) - x(p),
                PALETTE[i % PALETTE.len()]
            );
        }
    }

    let y_ticks: Vec<(f64, String)> = match scale {
        Scale::Linear => linear_ticks(lo, hi).into_iter().map(|t| (t, fmt_tick(t))).collect(),
        Scale::Log if hi - lo >= 1.0 => {
            let every = ((hi.floor() - lo.ceil()) / 6.0).ceil().max(1.0) as i32;
            (lo.ceil() as i32..=hi.floor() as i32)
                .filter(|e| e % every == 0)
                .map(|e| (f64::from(e), fmt_tick(10f64.powi(e))))
                .collect()
        }
        Scale::Log => linear_ticks(10f64.powf(lo), 10f64.powf(hi))
            .into_iter()
            .filter(|v| *v > 0.0)
            .map(|v| (v.log10(), fmt_tick(v)))
            .collect(),
    };
    for (t, label) in &y_ticks {
        let yy = y(*t);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
            LEFT - 6.0,
            yy + 4.0
        );
    }
    if n > 0 {
        let ticks = 6.min(n);
        for j in 0..ticks {
            let i = if ticks == 1 { 0 } else { j * (n - 1) / (ticks - 1) };
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                x(i),
                TOP + plot_h + 18.0,
                dates[i].format("%Y-%m-%d")
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut segment = String::new();
        let flush = |segment: &mut String, svg: &mut String| {
            if !segment.is_empty() {
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    segment.trim_end()
                );
                segment.clear();
            }
        };
        for (t, v) in s.values.iter().enumerate().take(n) {
            match tf(*v).filter(|v| v.is_finite()) {
                Some(v) => {
                    let _ = write!(segment, "{:.2},{:.2} ", x(t), y(v));
                }
                None => flush(&mut segment, &mut svg),
            }
        }
        flush(&mut segment, &mut svg);

        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, lx + 24.0, escape(s.label));
    }
    svg.push_str("</svg>\n");
    svg
}
