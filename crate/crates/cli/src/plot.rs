//! Minimal SVG line plots and heat maps.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace("--", "- -")
}

fn comment(header: &[String]) -> String {
    let mut s = String::from("<!--\n");
    for line in header {
        let _ = writeln!(s, "{}", escape(line));
    }
    s.push_str("-->\n");
    s
}

/// About five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn bounds<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&self, s: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let _ = writeln!(s, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
        for t in ticks(self.x.0, self.x.1) {
            let p = self.px(t);
            let _ = writeln!(s, r#"<line x1="{p:.2}" y1="{y0}" x2="{p:.2}" y2="{}" stroke="black"/>"#, y0 + 5.0);
            let _ = writeln!(s, r#"<text x="{p:.2}" y="{}" text-anchor="middle">{}</text>"#, y0 + 20.0, fmt_tick(t));
        }
        for t in ticks(self.y.0, self.y.1) {
            let p = self.py(t);
            let _ = writeln!(s, r#"<line x1="{}" y1="{p:.2}" x2="{x0}" y2="{p:.2}" stroke="black"/>"#, x0 - 5.0);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, p + 4.0, fmt_tick(t));
        }
        let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(title));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 15.0, escape(xlabel));
        let yc = (y0 + y1) / 2.0;
        let _ = writeln!(s, r#"<text x="20" y="{yc}" text-anchor="middle" transform="rotate(-90 20 {yc})">{}</text>"#, escape(ylabel));
    }
}

fn open(header: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    s.push_str(&comment(header));
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    s
}

/// Overlaid line plot; the config header goes into a leading comment.
pub fn line_plot(series: &[Series], title: &str, xlabel: &str, ylabel: &str, header: &[String]) -> String {
    let frame = Frame {
        x: bounds(series.iter().flat_map(|s| s.x.iter())),
        y: {
            let (lo, hi) = bounds(series.iter().flat_map(|s| s.y.iter()));
            (lo.min(0.0), hi + 0.05 * (hi - lo.min(0.0)))
        },
    };
    let mut s = open(header);
    frame.axes(&mut s, title, xlabel, ylabel);
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        for (i, (x, y)) in ser.x.iter().zip(ser.y).enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, frame.px(*x), frame.py(*y));
        }
        let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
        let ly = TOP + 18.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT - 150.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#, ly - 4.0, lx + 20.0, ly - 4.0);
        let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 26.0, escape(ser.label));
    }
    s.push_str("</svg>\n");
    s
}

fn colormap(v: f64) -> (u8, u8, u8) {
    // White through blue to dark red.
    let stops = [(0.0, (255.0, 255.0, 255.0)), (0.35, (70.0, 110.0, 210.0)), (0.7, (220.0, 60.0, 50.0)), (1.0, (110.0, 0.0, 20.0))];
    let v = v.clamp(0.0, 1.0);
    for w in stops.windows(2) {
        let ((a, ca), (b, cb)) = (w[0], w[1]);
        if v <= b {
            let f = (v - a) / (b - a);
            let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
            return (mix(ca.0, cb.0), mix(ca.1, cb.1), mix(ca.2, cb.2));
        }
    }
    (110, 0, 20)
}

/// Heat map of `values` (row-major, `ys.len()` rows by `xs.len()` columns).
pub fn heatmap(xs: &[f64], ys: &[f64], values: &[f64], title: &str, xlabel: &str, ylabel: &str, header: &[String]) -> String {
    let frame = Frame { x: bounds(xs.iter()), y: bounds(ys.iter()) };
    let peak = values.iter().cloned().fold(0.0, f64::max);
    let mut s = open(header);
    let cw = (WIDTH - LEFT - RIGHT) / xs.len().max(1) as f64;
    let ch = (HEIGHT - TOP - BOTTOM) / ys.len().max(1) as f64;
    for (j, _) in ys.iter().enumerate() {
        for (k, _) in xs.iter().enumerate() {
            let v = values[j * xs.len() + k];
            let level = if peak > 0.0 { v / peak } else { 0.0 };
            if level < 1e-3 {
                continue;
            }
            let (r, g, b) = colormap(level);
            let x = LEFT + k as f64 * cw;
            let y = HEIGHT - BOTTOM - (j + 1) as f64 * ch;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="rgb({r},{g},{b})"/>"#,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    frame.axes(&mut s, title, xlabel, ylabel);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_values_are_round() {
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(ticks(-250.0, 250.0), vec![-200.0, -100.0, 0.0, 100.0, 200.0]);
        assert_eq!(fmt_tick(-0.0), "0");
        assert_eq!(fmt_tick(0.25), "0.25");
    }

    #[test]
    fn line_plot_is_wellformed() {
        let x = [0.0, 1.0, 2.0];
        let y = [0.0, 1.0, 0.5];
        let svg = line_plot(&[Series { label: "a<b", x: &x, y: &y }], "t", "x", "y", &["k: v -- w".into()]);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains("<!--\nk: v - - w\n-->"));
        assert!(svg.contains("a&lt;b"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<path").count(), 1);
    }

    #[test]
    fn heatmap_skips_empty_cells() {
        let svg = heatmap(&[0.0, 1.0], &[0.0, 1.0], &[0.0, 1.0, 0.5, 0.0], "m", "x", "y", &[]);
        assert_eq!(svg.matches("fill=\"rgb(").count(), 2);
    }
}
