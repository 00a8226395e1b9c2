//! Static SVG line plots with optional logarithmic axes.

use std::fmt::Write;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Solid,
    Dashed,
}

/// One labelled polyline with point markers.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, style: Style::Solid }
    }

    pub fn dashed(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, style: Style::Dashed }
    }
}

/// A single panel.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Vertical markers at data coordinates.
    pub vlines: Vec<(f64, String)>,
}

impl Figure {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Figure {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            series: Vec::new(),
            vlines: Vec::new(),
        }
    }

    pub fn loglog(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn tx(&self, v: f64) -> Option<f64> {
        transform(v, self.log_x)
    }

    fn ty(&self, v: f64) -> Option<f64> {
        transform(v, self.log_y)
    }

    /// Data range in transformed coordinates, padded when degenerate.
    fn bounds(&self) -> Option<((f64, f64), (f64, f64))> {
        let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
        let mut yr = (f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in self.series.iter().flat_map(|s| &s.points) {
            if let (Some(a), Some(b)) = (self.tx(*x), self.ty(*y)) {
                xr = (xr.0.min(a), xr.1.max(a));
                yr = (yr.0.min(b), yr.1.max(b));
            }
        }
        if !xr.0.is_finite() {
            return None;
        }
        let pad = |r: (f64, f64)| if r.1 - r.0 < 1e-12 { (r.0 - 0.5, r.1 + 0.5) } else { r };
        Some((pad(xr), pad(yr)))
    }

    /// Draws the panel into the box `(x0, y0, w, h)`.
    fn render_into(&self, out: &mut String, x0: f64, y0: f64, w: f64, h: f64) {
        let (ml, mr, mt, mb) = (70.0, 150.0, 30.0, 45.0);
        let (pw, ph) = (w - ml - mr, h - mt - mb);
        let (px, py) = (x0 + ml, y0 + mt);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{}</text>"#,
            px + pw / 2.0,
            y0 + 18.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{px:.1}" y="{py:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#333"/>"##
        );
        let Some(((xa, xb), (ya, yb))) = self.bounds() else {
            return;
        };
        let sx = |v: f64| px + (v - xa) / (xb - xa) * pw;
        let sy = |v: f64| py + ph - (v - ya) / (yb - ya) * ph;
        for (v, tick) in ticks(xa, xb, self.log_x) {
            let x = sx(v);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333"/><text x="{x:.1}" y="{:.1}" font-size="10" text-anchor="middle">{tick}</text>"##,
                py + ph,
                py + ph + 4.0,
                py + ph + 16.0
            );
        }
        for (v, tick) in ticks(ya, yb, self.log_y) {
            let y = sy(v);
            let _ = writeln!(
                out,
                r##"<line x1="{:.1}" y1="{y:.1}" x2="{px:.1}" y2="{y:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{tick}</text>"##,
                px - 4.0,
                px - 6.0,
                y + 3.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
            px + pw / 2.0,
            py + ph + 34.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
            px - 52.0,
            py + ph / 2.0,
            px - 52.0,
            py + ph / 2.0,
            escape(&self.y_label)
        );
        for (v, label) in &self.vlines {
            if let Some(t) = self.tx(*v).filter(|t| *t >= xa && *t <= xb) {
                let x = sx(t);
                let _ = writeln!(
                    out,
                    r##"<line x1="{x:.1}" y1="{py:.1}" x2="{x:.1}" y2="{:.1}" stroke="#777" stroke-dasharray="2,3"/><text x="{:.1}" y="{:.1}" font-size="10" fill="#555">{}</text>"##,
                    py + ph,
                    x + 3.0,
                    py + 12.0,
                    escape(label)
                );
            }
        }
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter_map(|(x, y)| Some((sx(self.tx(*x)?), sy(self.ty(*y)?))))
                .collect();
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let dash = if s.style == Style::Dashed { r#" stroke-dasharray="6,4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                path.join(" ")
            );
            if s.style == Style::Solid {
                for (x, y) in &pts {
                    let _ = writeln!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="2.5" fill="{color}"/>"#);
                }
            }
            let ly = py + 12.0 + 16.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
                px + pw + 10.0,
                px + pw + 30.0,
                px + pw + 34.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
    }

    pub fn to_svg(&self) -> String {
        render_panels(std::slice::from_ref(self), 1)
    }
}

/// Lays figures out on a grid with `cols` columns.
pub fn render_panels(figs: &[Figure], cols: usize) -> String {
    let (w, h) = (560.0, 360.0);
    let cols = cols.max(1);
    let rows = figs.len().div_ceil(cols).max(1);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif">"#,
        w * cols as f64,
        h * rows as f64
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, f) in figs.iter().enumerate() {
        f.render_into(&mut out, w * (i % cols) as f64, h * (i / cols) as f64, w, h);
    }
    out.push_str("</svg>\n");
    out
}

fn transform(v: f64, log: bool) -> Option<f64> {
    if !v.is_finite() {
        None
    } else if log {
        (v > 0.0).then(|| v.log10())
    } else {
        Some(v)
    }
}

/// Tick positions in transformed coordinates with their labels.
fn ticks(a: f64, b: f64, log: bool) -> Vec<(f64, String)> {
    if log {
        let (lo, hi) = (a.ceil() as i32, b.floor() as i32);
        let step = ((hi - lo) / 6 + 1).max(1);
        return (lo..=hi).step_by(step as usize).map(|e| (e as f64, format!("1e{e}"))).collect();
    }
    let raw = (b - a) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut v = (a / step).ceil() * step;
    let mut t = Vec::new();
    while v <= b + 1e-9 * step {
        t.push((v, format!("{}", (v / step).round() * step)));
        v += step;
    }
    t
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loglog_plot_is_well_formed_and_skips_nonpositive_points() {
        let f = Figure::new("err", "N", "RelErr")
            .loglog()
            .with(Series::new("s=1", vec![(32.0, 1e-2), (64.0, 5e-3), (128.0, 0.0)]))
            .with(Series::dashed("bound", vec![(32.0, 1.0), (128.0, 0.1)]));
        let svg = f.to_svg();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("1e-2"));
    }

    #[test]
    fn empty_figure_still_renders() {
        assert!(Figure::new("a<b", "x", "y").to_svg().contains("a&lt;b"));
    }
}
