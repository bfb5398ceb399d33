//! Minimal self-contained SVG charts: line/point plots and box plots.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;

pub const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mark {
    Line,
    Points,
    /// Open ring drawn over other series.
    Ring,
}

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub mark: Mark,
    pub points: Vec<(f64, f64)>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn finite_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = write!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title));
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str, x_ticks: bool) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
    let _ = write!(out, r#"<path d="M{x0} {y1}V{y0}H{x1}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let yv = f.y.0 + t * (f.y.1 - f.y.0);
        let py = f.py(yv);
        let _ = write!(out, r#"<path d="M{} {py:.1}h4" stroke="black"/>"#, x0 - 4.0);
        let _ = write!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, x0 - 6.0, py + 4.0, tick(yv));
        if x_ticks {
            let xv = f.x.0 + t * (f.x.1 - f.x.0);
            let px = f.px(xv);
            let _ = write!(out, r#"<path d="M{px:.1} {y0}v4" stroke="black"/>"#);
            let _ = write!(out, r#"<text x="{px:.1}" y="{}" text-anchor="middle">{}</text>"#, y0 + 16.0, tick(xv));
        }
    }
    let _ = write!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 8.0, esc(xlabel));
    let _ = write!(
        out,
        r#"<text x="14" y="{0}" text-anchor="middle" transform="rotate(-90 14 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        esc(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn legend(out: &mut String, entries: &[(&str, &str)]) {
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = TOP + 6.0 + 16.0 * i as f64;
        let x = W - RIGHT - 150.0;
        let _ = write!(out, r#"<rect x="{x}" y="{}" width="10" height="10" fill="{color}"/>"#, y - 9.0);
        let _ = write!(out, r#"<text x="{}" y="{y}">{}</text>"#, x + 14.0, esc(label));
    }
}

fn legend_row(out: &mut String, entries: &[(&str, &str)]) {
    let mut x = LEFT;
    for (label, color) in entries {
        let _ = write!(out, r#"<rect x="{x}" y="{}" width="10" height="10" fill="{color}"/>"#, TOP - 9.0);
        let _ = write!(out, r#"<text x="{}" y="{TOP}">{}</text>"#, x + 14.0, esc(label));
        x += 30.0 + 7.0 * label.len() as f64;
    }
}

/// Line and scatter series on shared axes.
pub fn xy_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let f = Frame { x: finite_range(all().map(|p| p.0)), y: finite_range(all().map(|p| p.1)) };
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, xlabel, ylabel, true);
    for s in series {
        let pts = s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite());
        match s.mark {
            Mark::Line => {
                let d: Vec<String> = pts.map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
                let _ = write!(out, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#, d.join(" "), s.color);
            }
            Mark::Points => {
                for &(x, y) in pts {
                    let _ = write!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{}" fill-opacity="0.6"/>"#, f.px(x), f.py(y), s.color);
                }
            }
            Mark::Ring => {
                for &(x, y) in pts {
                    let _ = write!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="6" fill="none" stroke="{}" stroke-width="2"/>"#, f.px(x), f.py(y), s.color);
                }
            }
        }
    }
    legend(&mut out, &series.iter().map(|s| (s.label, s.color)).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// Five-number summary with whiskers at the extremes.
fn five(values: &[f64]) -> [f64; 5] {
    use qfi_core::stats::quantile_sorted;
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile_sorted(&v, q))
}

/// One panel per metric, one box per group within each panel. Each panel is
/// scaled to its own range.
pub fn box_panels(title: &str, groups: &[(&str, &str)], panels: &[(&str, Vec<Vec<f64>>)]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let n = panels.len().max(1) as f64;
    let pw = (W - 2.0 * RIGHT) / n;
    let (top, bottom) = (TOP + 24.0, H - BOTTOM);
    for (pi, (name, data)) in panels.iter().enumerate() {
        let x0 = RIGHT + pi as f64 * pw;
        let (lo, hi) = finite_range(data.iter().flatten().copied());
        let py = |v: f64| bottom - (v - lo) / (hi - lo) * (bottom - top);
        let _ = write!(out, r##"<rect x="{x0:.1}" y="{top}" width="{:.1}" height="{}" fill="none" stroke="#ccc"/>"##, pw - 8.0, bottom - top);
        let _ = write!(out, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, x0 + pw / 2.0, bottom + 16.0, esc(name));
        let _ = write!(out, r#"<text x="{:.1}" y="{}" font-size="10">{}</text>"#, x0 + 2.0, top - 4.0, tick(hi));
        let _ = write!(out, r#"<text x="{:.1}" y="{}" font-size="10">{}</text>"#, x0 + 2.0, bottom + 30.0, tick(lo));
        let bw = (pw - 8.0) / (data.len().max(1) as f64 * 2.0);
        for (gi, values) in data.iter().enumerate() {
            if values.is_empty() {
                continue;
            }
            let [mn, q1, med, q3, mx] = five(values);
            let color = groups.get(gi).map_or("#333", |g| g.1);
            let cx = x0 + bw * (2.0 * gi as f64 + 1.0);
            let _ = write!(out, r#"<path d="M{cx:.1} {:.1}V{:.1}M{cx:.1} {:.1}V{:.1}" stroke="{color}"/>"#, py(mx), py(q3), py(q1), py(mn));
            let _ = write!(
                out,
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{color}" fill-opacity="0.3" stroke="{color}"/>"#,
                cx - bw / 2.0,
                py(q3),
                bw,
                (py(q1) - py(q3)).max(0.5)
            );
            let _ = write!(out, r#"<path d="M{:.1} {:.1}h{bw:.1}" stroke="{color}" stroke-width="2"/>"#, cx - bw / 2.0, py(med));
        }
    }
    legend_row(&mut out, groups);
    out.push_str("</svg>\n");
    out
}
