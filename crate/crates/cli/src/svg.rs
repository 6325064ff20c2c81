//! Static SVG 1.1 line charts, no external renderer.

use anyhow::Result;
use std::fmt::Write as _;
use std::path::Path;

pub struct PlotOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub width: f64,
    pub height: f64,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            title: String::new(),
            x_label: "t".into(),
            y_label: String::new(),
            log_x: false,
            log_y: false,
            width: 760.0,
            height: 480.0,
        }
    }
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

fn nice_ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let lo_e = lo.log10().floor() as i32;
        let hi_e = hi.log10().ceil() as i32;
        let step = (((hi_e - lo_e) as usize / 8) + 1) as i32;
        return (lo_e..=hi_e)
            .step_by(step as usize)
            .map(|e| 10f64.powi(e))
            .collect();
    }
    let span = (hi - lo).abs().max(1e-300);
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 7.0)
        .unwrap_or(mag * 10.0);
    let start = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = start;
    while t <= hi + 1e-9 * span {
        ticks.push(t);
        t += step;
    }
    ticks
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

/// Render line series to an SVG file. Non-positive values are dropped on
/// logarithmic axes.
pub fn render(path: &Path, series: &[Series], opts: &PlotOptions) -> Result<()> {
    let margin_l = 74.0;
    let margin_r = 16.0;
    let margin_t = if opts.title.is_empty() { 16.0 } else { 40.0 };
    let margin_b = 52.0;
    let plot_w = opts.width - margin_l - margin_r;
    let plot_h = opts.height - margin_t - margin_b;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in series {
        for &(x, y) in &s.points {
            if (opts.log_x && x <= 0.0) || (opts.log_y && y <= 0.0) {
                continue;
            }
            xs.push(x);
            ys.push(y);
        }
    }
    if xs.is_empty() {
        anyhow::bail!("nothing to plot (no finite points on the chosen axes)");
    }
    let (mut x_lo, mut x_hi) = bounds(&xs);
    let (mut y_lo, mut y_hi) = bounds(&ys);
    if opts.log_x {
        x_lo = x_lo.max(1e-300);
    }
    if opts.log_y {
        y_lo = y_lo.max(1e-300);
    }
    if x_lo == x_hi {
        x_hi = x_lo + 1.0;
    }
    if y_lo == y_hi {
        y_hi = y_lo + 1.0;
    }

    let tx = |x: f64| -> f64 {
        let f = if opts.log_x {
            (x.ln() - x_lo.ln()) / (x_hi.ln() - x_lo.ln())
        } else {
            (x - x_lo) / (x_hi - x_lo)
        };
        margin_l + f * plot_w
    };
    let ty = |y: f64| -> f64 {
        let f = if opts.log_y {
            (y.ln() - y_lo.ln()) / (y_hi.ln() - y_lo.ln())
        } else {
            (y - y_lo) / (y_hi - y_lo)
        };
        margin_t + (1.0 - f) * plot_h
    };

    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = opts.width,
        h = opts.height
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");

    // axes frame
    let _ = write!(
        svg,
        r##"<rect x="{margin_l}" y="{margin_t}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333" stroke-width="1"/>"##
    );

    for t in nice_ticks(x_lo, x_hi, opts.log_x) {
        if t < x_lo * 0.999 || t > x_hi * 1.001 {
            continue;
        }
        let x = tx(t);
        let y0 = margin_t + plot_h;
        let _ = write!(
            svg,
            r##"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ccc" stroke-width="0.5"/><text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle" font-family="sans-serif">{}</text>"##,
            margin_t,
            y0 + 16.0,
            fmt_tick(t)
        );
    }
    for t in nice_ticks(y_lo, y_hi, opts.log_y) {
        if t < y_lo * 0.999 || t > y_hi * 1.001 {
            continue;
        }
        let y = ty(t);
        let _ = write!(
            svg,
            r##"<line x1="{margin_l}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ccc" stroke-width="0.5"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end" font-family="sans-serif">{}</text>"##,
            margin_l + plot_w,
            margin_l - 6.0,
            y + 4.0,
            fmt_tick(t)
        );
    }

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in &s.points {
            if (opts.log_x && x <= 0.0) || (opts.log_y && y <= 0.0) || !x.is_finite() || !y.is_finite() {
                pen_down = false;
                continue;
            }
            let cmd = if pen_down { 'L' } else { 'M' };
            let _ = write!(d, "{cmd}{:.2} {:.2} ", tx(x), ty(y));
            pen_down = true;
        }
        let _ = write!(
            svg,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
            d.trim_end()
        );
    }

    // legend
    let mut ly = margin_t + 14.0;
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let lx = margin_l + plot_w - 150.0;
        let _ = write!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-size="11" font-family="sans-serif">{}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(&s.label)
        );
        ly += 16.0;
    }

    if !opts.title.is_empty() {
        let _ = write!(
            svg,
            r#"<text x="{}" y="22" font-size="14" text-anchor="middle" font-family="sans-serif">{}</text>"#,
            margin_l + plot_w / 2.0,
            escape(&opts.title)
        );
    }
    let _ = write!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle" font-family="sans-serif">{}</text>"#,
        margin_l + plot_w / 2.0,
        opts.height - 12.0,
        escape(&opts.x_label)
    );
    if !opts.y_label.is_empty() {
        let _ = write!(
            svg,
            r#"<text x="16" y="{}" font-size="12" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 16 {})">{}</text>"#,
            margin_t + plot_h / 2.0,
            margin_t + plot_h / 2.0,
            escape(&opts.y_label)
        );
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in v {
        if x.is_finite() {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_monotone_curve() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.svg");
        let series = vec![Series {
            label: "entropy".into(),
            points: (0..100)
                .map(|i| (i as f64 * 0.1, (-0.5 * i as f64 * 0.1_f64).exp()))
                .collect(),
        }];
        let opts = PlotOptions {
            log_y: true,
            ..Default::default()
        };
        render(&path, &series, &opts).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.contains("path"));
    }
}
