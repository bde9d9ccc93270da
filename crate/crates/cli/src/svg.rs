//! Minimal self-contained SVG line plots.

use std::fmt::Write;

const WIDTH: f64 = 360.0;
const HEIGHT: f64 = 260.0;
const MARGIN_LEFT: f64 = 58.0;
const MARGIN_RIGHT: f64 = 14.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 42.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Style {
    pub color: &'static str,
    pub width: f64,
    pub dashed: bool,
    pub opacity: f64,
    /// Draw crosses at the points instead of joining them.
    pub crosses: bool,
}

impl Style {
    pub const TRACE: Style = Style {
        color: "#e8b90c",
        width: 0.8,
        dashed: false,
        opacity: 0.45,
        crosses: false,
    };
    pub const MEAN: Style = Style {
        color: "#d62728",
        width: 2.0,
        dashed: false,
        opacity: 1.0,
        crosses: false,
    };
    pub const FORMULA: Style = Style {
        color: "#1f4fd6",
        width: 1.6,
        dashed: true,
        opacity: 1.0,
        crosses: false,
    };
    pub const BOUND: Style = Style {
        color: "#d62728",
        width: 1.6,
        dashed: true,
        opacity: 1.0,
        crosses: false,
    };
    pub const POINTS: Style = Style {
        color: "#222222",
        width: 1.4,
        dashed: false,
        opacity: 1.0,
        crosses: true,
    };
    pub const BARS: Style = Style {
        color: "#7f7f7f",
        width: 1.0,
        dashed: false,
        opacity: 1.0,
        crosses: false,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: Option<String>,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn new(points: Vec<(f64, f64)>, style: Style) -> Self {
        Self {
            label: None,
            points,
            style,
        }
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Optional fixed y range.
    pub y_range: Option<(f64, f64)>,
}

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Default::default()
        }
    }

    pub fn add(&mut self, s: Series) -> &mut Self {
        self.series.push(s);
        self
    }
}

/// Step outline of a histogram `(left edge, count)` with the given bin width.
pub fn histogram_outline(bins: &[(f64, f64)], bin_width: f64) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(bins.len() * 4);
    for &(x, c) in bins {
        pts.push((x, 0.0));
        pts.push((x, c));
        pts.push((x + bin_width, c));
        pts.push((x + bin_width, 0.0));
    }
    pts
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-300);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_y: bool,
    ox: f64,
    oy: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        self.ox + MARGIN_LEFT + (x - self.x0) / (self.x1 - self.x0) * w
    }

    fn py(&self, y: f64) -> f64 {
        let h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let y = if self.log_y { y.log10() } else { y };
        self.oy + MARGIN_TOP + (1.0 - (y - self.y0) / (self.y1 - self.y0)) * h
    }
}

fn bounds(plot: &Plot) -> (f64, f64, f64, f64) {
    let mut x0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    let mut y0 = f64::INFINITY;
    let mut y1 = f64::NEG_INFINITY;
    for s in &plot.series {
        for &(x, y) in &s.points {
            if !x.is_finite() || !y.is_finite() || (plot.log_y && y <= 0.0) {
                continue;
            }
            let y = if plot.log_y { y.log10() } else { y };
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    if let Some((lo, hi)) = plot.y_range {
        if plot.log_y {
            y0 = lo.log10();
            y1 = hi.log10();
        } else {
            y0 = lo;
            y1 = hi;
        }
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        let pad = if y0 == 0.0 { 1.0 } else { y0.abs() * 0.1 };
        y0 -= pad;
        y1 += pad;
    } else if plot.y_range.is_none() {
        let pad = (y1 - y0) * 0.05;
        y1 += pad;
        if !(y0 >= 0.0 && y0 - pad < 0.0) || plot.log_y {
            y0 -= pad;
        }
    }
    (x0, x1, y0, y1)
}

fn render_into(out: &mut String, plot: &Plot, ox: f64, oy: f64) {
    let (x0, x1, y0, y1) = bounds(plot);
    let f = Frame {
        x0,
        x1,
        y0,
        y1,
        log_y: plot.log_y,
        ox,
        oy,
    };
    let left = ox + MARGIN_LEFT;
    let right = ox + WIDTH - MARGIN_RIGHT;
    let top = oy + MARGIN_TOP;
    let bottom = oy + HEIGHT - MARGIN_BOTTOM;
    let _ = writeln!(
        out,
        r##"<rect x="{left:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="#ffffff" stroke="#444444" stroke-width="0.8"/>"##,
        right - left,
        bottom - top
    );
    for t in nice_ticks(x0, x1, 5) {
        let x = f.px(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{bottom:.1}" x2="{x:.1}" y2="{:.1}" stroke="#444444" stroke-width="0.8"/><text x="{x:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"##,
            bottom + 4.0,
            bottom + 15.0,
            fmt_tick(t)
        );
    }
    for t in nice_ticks(y0, y1, 5) {
        let label = if plot.log_y { fmt_tick(10f64.powf(t)) } else { fmt_tick(t) };
        let y = f.py(if plot.log_y { 10f64.powf(t) } else { t });
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{left:.1}" y2="{y:.1}" stroke="#444444" stroke-width="0.8"/><text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{label}</text>"##,
            left - 4.0,
            left - 6.0,
            y + 3.5
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        oy + 18.0,
        escape(&plot.title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        oy + HEIGHT - 8.0,
        escape(&plot.x_label)
    );
    let cy = (top + bottom) / 2.0;
    let cx = ox + 14.0;
    let _ = writeln!(
        out,
        r#"<text x="{cx:.1}" y="{cy:.1}" font-size="11" text-anchor="middle" transform="rotate(-90 {cx:.1} {cy:.1})">{}</text>"#,
        escape(&plot.y_label)
    );
    let _ = writeln!(
        out,
        r#"<clipPath id="c{}_{}"><rect x="{left:.1}" y="{top:.1}" width="{:.1}" height="{:.1}"/></clipPath><g clip-path="url(#c{}_{})">"#,
        ox as i64,
        oy as i64,
        right - left,
        bottom - top,
        ox as i64,
        oy as i64
    );
    for s in &plot.series {
        let st = s.style;
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .copied()
            .filter(|&(x, y)| x.is_finite() && y.is_finite() && !(plot.log_y && y <= 0.0))
            .map(|(x, y)| (f.px(x), f.py(y)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        if st.crosses {
            let mut d = String::new();
            for (x, y) in pts {
                let _ = write!(
                    d,
                    "M{:.1} {:.1}L{:.1} {:.1}M{:.1} {:.1}L{:.1} {:.1}",
                    x - 3.5,
                    y - 3.5,
                    x + 3.5,
                    y + 3.5,
                    x - 3.5,
                    y + 3.5,
                    x + 3.5,
                    y - 3.5
                );
            }
            let _ = writeln!(
                out,
                r#"<path d="{d}" stroke="{}" stroke-width="{}" fill="none"/>"#,
                st.color, st.width
            );
            continue;
        }
        let mut d = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{x:.2} {y:.2}", if i == 0 { "M" } else { "L" });
        }
        let dash = if st.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<path d="{d}" stroke="{}" stroke-width="{}" stroke-opacity="{}" fill="none"{dash}/>"#,
            st.color, st.width, st.opacity
        );
    }
    out.push_str("</g>\n");
    let labelled: Vec<&Series> = plot.series.iter().filter(|s| s.label.is_some()).collect();
    for (i, s) in labelled.iter().enumerate() {
        let y = top + 12.0 + 13.0 * i as f64;
        let x = right - 110.0;
        let dash = if s.style.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{}" stroke-width="{}"{dash}/><text x="{:.1}" y="{:.1}" font-size="9">{}</text>"#,
            x + 18.0,
            s.style.color,
            s.style.width,
            x + 22.0,
            y + 3.0,
            escape(s.label.as_deref().unwrap_or(""))
        );
    }
}

/// Lays plots out on a grid with `columns` columns; `note` is embedded as
/// an XML comment.
pub fn render_grid(plots: &[Plot], columns: usize, note: &str) -> String {
    let columns = columns.max(1);
    let rows = plots.len().div_ceil(columns).max(1);
    let w = WIDTH * columns as f64;
    let h = HEIGHT * rows as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, "<!-- {} -->", note.replace("--", "- -"));
    let _ = writeln!(out, r##"<rect width="{w}" height="{h}" fill="#fafafa"/>"##);
    for (i, p) in plots.iter().enumerate() {
        let ox = WIDTH * (i % columns) as f64;
        let oy = HEIGHT * (i / columns) as f64;
        render_into(&mut out, p, ox, oy);
    }
    out.push_str("</svg>\n");
    out
}

pub fn render(plot: &Plot, note: &str) -> String {
    render_grid(std::slice::from_ref(plot), 1, note)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_self_contained_svg() {
        let mut p = Plot::new("sigma <m>", "generation", "sigma");
        p.add(Series::new(vec![(1.0, 0.1), (2.0, 0.2), (3.0, f64::NAN)], Style::MEAN).labelled("mean"));
        p.add(Series::new(vec![(1.0, 0.1), (3.0, 0.3)], Style::FORMULA));
        let s = render(&p, "run abc");
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert!(s.contains("sigma &lt;m&gt;"));
        assert!(s.contains("stroke-dasharray"));
        assert!(s.contains("<!-- run abc -->"));
        assert!(!s.contains("href"));
        assert!(!s.contains("NaN"));
    }

    #[test]
    fn empty_and_log_plots_render() {
        let p = Plot::new("empty", "x", "y");
        assert!(render(&p, "").contains("</svg>"));
        let mut p = Plot::new("log", "x", "y");
        p.log_y = true;
        p.add(Series::new(vec![(0.0, 0.0), (1.0, 1e-3), (2.0, 1.0)], Style::TRACE));
        assert!(render(&p, "").contains("<path"));
    }

    #[test]
    fn ticks_cover_range() {
        let t = nice_ticks(0.0, 1.0, 5);
        assert_eq!(t.first(), Some(&0.0));
        assert!((t.last().unwrap() - 1.0).abs() < 1e-12);
        assert!(nice_ticks(3.0, 3.5, 5).len() >= 2);
    }
}
