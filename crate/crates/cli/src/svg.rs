//! Minimal hand-written SVG plots in problem coordinates.

use std::fmt::Write;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];
pub const RED: &str = "#d62728";
pub const BLACK: &str = "#000000";
pub const BLUE: &str = "#1f77b4";

#[derive(Debug, Clone)]
pub struct Style {
    pub stroke: String,
    pub width: f64,
    pub dashed: bool,
    pub fill: Option<String>,
}

impl Style {
    pub fn line(color: &str) -> Self {
        Self { stroke: color.into(), width: 1.2, dashed: false, fill: None }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn width(mut self, w: f64) -> Self {
        self.width = w;
        self
    }

    pub fn fill(mut self, color: &str) -> Self {
        self.fill = Some(color.into());
        self
    }
}

#[derive(Debug, Clone)]
pub enum Item {
    Polyline(Vec<[f64; 2]>, Style),
    /// Closed rings filled with the even-odd rule, so inner rings become holes.
    Rings(Vec<Vec<[f64; 2]>>, Style),
    /// Marker with a radius in pixels.
    Dot([f64; 2], f64, String),
    Circle([f64; 2], f64, Style),
    HLine(f64, Style),
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    /// Same scale on both axes, for plots in the plane.
    pub equal: bool,
    /// `[xmin, xmax, ymin, ymax]`; fitted to the data when absent.
    pub viewport: Option<[f64; 4]>,
    pub items: Vec<Item>,
}

const MARGIN: f64 = 48.0;

impl Plot {
    pub fn plane(title: impl Into<String>) -> Self {
        Self { title: title.into(), xlabel: "x1".into(), ylabel: "x2".into(), equal: true, ..Self::default() }
    }

    pub fn graph(title: impl Into<String>, xlabel: &str, ylabel: &str) -> Self {
        Self { title: title.into(), xlabel: xlabel.into(), ylabel: ylabel.into(), ..Self::default() }
    }

    pub fn push(&mut self, item: Item) {
        self.items.push(item);
    }

    pub fn vortex_and_start(&mut self, x0: [f64; 2]) {
        self.push(Item::Dot([0.0, 0.0], 3.5, RED.into()));
        self.push(Item::Dot(x0, 3.0, BLACK.into()));
    }

    /// Reeb circle of radius `2|mu|` and the circle of radius `2|mu|/sqrt 3`.
    pub fn reeb_overlay(&mut self, mu: f64) {
        let m = mu.abs();
        self.push(Item::Circle([0.0, 0.0], 2.0 * m, Style::line(RED)));
        self.push(Item::Circle([0.0, 0.0], 2.0 * m / 3f64.sqrt(), Style::line(BLACK).dashed()));
    }

    fn data_bounds(&self) -> [f64; 4] {
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        let mut add = |p: [f64; 2]| {
            if p[0].is_finite() && p[1].is_finite() {
                b[0] = b[0].min(p[0]);
                b[1] = b[1].max(p[0]);
                b[2] = b[2].min(p[1]);
                b[3] = b[3].max(p[1]);
            }
        };
        for it in &self.items {
            match it {
                Item::Polyline(pts, _) => pts.iter().for_each(|p| add(*p)),
                Item::Rings(rings, _) => rings.iter().flatten().for_each(|p| add(*p)),
                Item::Dot(p, _, _) => add(*p),
                Item::Circle(c, r, _) => {
                    add([c[0] - r, c[1] - r]);
                    add([c[0] + r, c[1] + r]);
                }
                Item::HLine(..) => {}
            }
        }
        if !b[0].is_finite() {
            return [-1.0, 1.0, -1.0, 1.0];
        }
        for (lo, hi) in [(0, 1), (2, 3)] {
            let pad = 0.05 * (b[hi] - b[lo]).max(1e-9);
            b[lo] -= pad;
            b[hi] += pad;
        }
        b
    }

    fn size(&self) -> (f64, f64) {
        if self.equal {
            (640.0, 640.0)
        } else {
            (720.0, 450.0)
        }
    }

    fn bounds(&self) -> [f64; 4] {
        let mut b = self.viewport.unwrap_or_else(|| self.data_bounds());
        if self.equal {
            let (w, h) = self.size();
            let sx = (b[1] - b[0]) / (w - 2.0 * MARGIN);
            let sy = (b[3] - b[2]) / (h - 2.0 * MARGIN);
            let s = sx.max(sy);
            let (cx, cy) = (0.5 * (b[0] + b[1]), 0.5 * (b[2] + b[3]));
            let (hx, hy) = (0.5 * s * (w - 2.0 * MARGIN), 0.5 * s * (h - 2.0 * MARGIN));
            b = [cx - hx, cx + hx, cy - hy, cy + hy];
        }
        b
    }

    pub fn to_svg(&self) -> String {
        let (w, h) = self.size();
        let b = self.bounds();
        let sx = (w - 2.0 * MARGIN) / (b[1] - b[0]);
        let sy = (h - 2.0 * MARGIN) / (b[3] - b[2]);
        let px = |p: [f64; 2]| (MARGIN + (p[0] - b[0]) * sx, h - MARGIN - (p[1] - b[2]) * sy);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(s, r#"<!-- viewport x [{}, {}] y [{}, {}] -->"#, b[0], b[1], b[2], b[3]);
        let _ = writeln!(
            s,
            r#"<defs><clipPath id="frame"><rect x="{m}" y="{m}" width="{}" height="{}"/></clipPath></defs>"#,
            w - 2.0 * MARGIN,
            h - 2.0 * MARGIN,
            m = MARGIN
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(s, r#"<g clip-path="url(#frame)" fill="none" stroke-linejoin="round">"#);
        for it in &self.items {
            match it {
                Item::Polyline(pts, st) => {
                    for run in finite_runs(pts) {
                        let d = path_data(&run, &px, false);
                        let _ = writeln!(s, r#"<path d="{d}"{}/>"#, attrs(st));
                    }
                }
                Item::Rings(rings, st) => {
                    let d: Vec<String> = rings
                        .iter()
                        .flat_map(|r| finite_runs(r))
                        .filter(|r| r.len() > 2)
                        .map(|r| path_data(&r, &px, true))
                        .collect();
                    if !d.is_empty() {
                        let _ = writeln!(s, r#"<path d="{}" fill-rule="evenodd"{}/>"#, d.join(" "), attrs(st));
                    }
                }
                Item::Dot(p, r, color) => {
                    let (x, y) = px(*p);
                    let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{color}" stroke="none"/>"#);
                }
                Item::Circle(c, r, st) => {
                    let (x, y) = px(*c);
                    let _ = writeln!(
                        s,
                        r#"<ellipse cx="{x:.2}" cy="{y:.2}" rx="{:.2}" ry="{:.2}"{}/>"#,
                        r * sx,
                        r * sy,
                        attrs(st)
                    );
                }
                Item::HLine(y, st) => {
                    let (_, yy) = px([b[0], *y]);
                    let _ = writeln!(
                        s,
                        r#"<path d="M{:.2} {yy:.2} L{:.2} {yy:.2}"{}/>"#,
                        MARGIN,
                        w - MARGIN,
                        attrs(st)
                    );
                }
            }
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(
            s,
            r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black" stroke-width="0.8"/>"#,
            w - 2.0 * MARGIN,
            h - 2.0 * MARGIN,
            m = MARGIN
        );
        let text = |s: &mut String, x: f64, y: f64, anchor: &str, t: &str| {
            let _ = writeln!(
                s,
                r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{}</text>"#,
                escape(t)
            );
        };
        text(&mut s, MARGIN, h - MARGIN + 14.0, "start", &tick(b[0]));
        text(&mut s, w - MARGIN, h - MARGIN + 14.0, "end", &tick(b[1]));
        text(&mut s, MARGIN - 4.0, h - MARGIN, "end", &tick(b[2]));
        text(&mut s, MARGIN - 4.0, MARGIN + 10.0, "end", &tick(b[3]));
        text(&mut s, 0.5 * w, h - MARGIN + 28.0, "middle", &self.xlabel);
        text(&mut s, 14.0, 0.5 * h, "middle", &self.ylabel);
        text(&mut s, 0.5 * w, MARGIN - 14.0, "middle", &self.title);
        s.push_str("</svg>\n");
        s
    }
}

fn finite_runs(pts: &[[f64; 2]]) -> Vec<Vec<[f64; 2]>> {
    let mut out = vec![vec![]];
    for p in pts {
        if p[0].is_finite() && p[1].is_finite() {
            out.last_mut().unwrap().push(*p);
        } else if !out.last().unwrap().is_empty() {
            out.push(vec![]);
        }
    }
    out.retain(|r| !r.is_empty());
    out
}

fn path_data(pts: &[[f64; 2]], px: &impl Fn([f64; 2]) -> (f64, f64), close: bool) -> String {
    let mut d = String::new();
    for (i, p) in pts.iter().enumerate() {
        let (x, y) = px(*p);
        let _ = write!(d, "{}{x:.2} {y:.2}", if i == 0 { "M" } else { " L" });
    }
    if pts.len() == 1 {
        // A lone point still shows as a round dot.
        let (x, y) = px(pts[0]);
        let _ = write!(d, " L{x:.2} {y:.2}");
    }
    if close {
        d.push_str(" Z");
    }
    d
}

fn attrs(st: &Style) -> String {
    let mut a = format!(r#" stroke="{}" stroke-width="{}""#, st.stroke, st.width);
    if st.dashed {
        a.push_str(r#" stroke-dasharray="5 3""#);
    }
    if let Some(f) = &st.fill {
        let _ = write!(a, r#" fill="{f}" fill-opacity="0.3""#);
    }
    if st.fill.is_none() {
        a.push_str(r#" stroke-linecap="round""#);
    }
    a
}

fn tick(v: f64) -> String {
    format!("{v:.3}")
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_plot_is_a_valid_skeleton() {
        let s = Plot::plane("empty").to_svg();
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert!(!s.contains("<path"));
    }

    #[test]
    fn nan_splits_polylines() {
        let mut p = Plot::graph("g", "t", "y");
        p.push(Item::Polyline(vec![[0.0, 0.0], [1.0, 1.0], [f64::NAN, 0.0], [2.0, 0.0], [3.0, 1.0]], Style::line(BLUE)));
        assert_eq!(p.to_svg().matches("<path").count(), 2);
    }

    #[test]
    fn equal_aspect_keeps_the_viewport_inside() {
        let p = Plot { viewport: Some([0.0, 4.0, 0.0, 1.0]), ..Plot::plane("v") };
        let b = p.bounds();
        assert!(b[0] <= 0.0 && b[1] >= 4.0 && b[2] <= 0.0 && b[3] >= 1.0);
        assert!(((b[1] - b[0]) - (b[3] - b[2])).abs() < 1e-12);
    }
}
