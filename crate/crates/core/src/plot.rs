//! Self-contained SVG line charts.

use std::fmt::Write;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 15.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

#[derive(Debug, Clone, Default)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Symmetric error bar per point.
    pub error: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Dashed horizontal reference lines.
    pub reference: Vec<(f64, String)>,
}

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Scale {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        } else if lo > 0.0 {
            lo = 0.0;
        }
        if hi - lo < 1e-12 {
            hi = lo + 1.0;
        }
        Scale { lo, hi, log }
    }

    /// Position in [0, 1], or `None` for values a log axis cannot show.
    fn frac(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        Some((v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            return (self.lo as i32..=self.hi as i32)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect();
        }
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let mut out = Vec::new();
        let mut t = (self.lo / step).ceil() * step;
        while t <= self.hi + step * 1e-9 {
            out.push((t, format!("{}", (t * 1e6).round() / 1e6)));
            t += step;
        }
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Chart {
    fn render_into(&self, svg: &mut String, ox: f64, oy: f64) {
        let pw = PANEL_W - MARGIN_L - MARGIN_R;
        let ph = PANEL_H - MARGIN_T - MARGIN_B;
        let xs = Scale::new(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.0)),
            false,
        );
        let ys = Scale::new(
            self.series
                .iter()
                .flat_map(|s| {
                    s.points.iter().enumerate().flat_map(move |(i, p)| {
                        let e = s.error.as_ref().map_or(0.0, |e| e[i]);
                        [p.1 + e, p.1 - e]
                    })
                })
                .chain(self.reference.iter().map(|r| r.0)),
            self.log_y,
        );
        let px = |x: f64| ox + MARGIN_L + xs.frac(x).unwrap_or(0.0) * pw;
        let py = |y: f64| ys.frac(y).map(|f| oy + MARGIN_T + (1.0 - f) * ph);

        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{}</text>"#,
            ox + MARGIN_L + pw / 2.0,
            oy + 18.0,
            escape(&self.title)
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{:.1}" y="{:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="black"/>"#,
            ox + MARGIN_L,
            oy + MARGIN_T
        );
        for (t, label) in xs.ticks() {
            let x = px(t);
            let y0 = oy + MARGIN_T + ph;
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="10">{label}</text>"#,
                y0 + 4.0,
                y0 + 15.0
            );
        }
        for (t, label) in ys.ticks() {
            if let Some(y) = py(t) {
                let x0 = ox + MARGIN_L;
                let _ = writeln!(
                    svg,
                    r#"<line x1="{:.1}" y1="{y:.1}" x2="{x0:.1}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{label}</text>"#,
                    x0 - 4.0,
                    x0 - 6.0,
                    y + 3.0
                );
            }
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
            ox + MARGIN_L + pw / 2.0,
            oy + PANEL_H - 8.0,
            escape(&self.x_label)
        );
        let (lx, ly) = (ox + 14.0, oy + MARGIN_T + ph / 2.0);
        let _ = writeln!(
            svg,
            r#"<text x="{lx:.1}" y="{ly:.1}" text-anchor="middle" font-size="12" transform="rotate(-90 {lx:.1} {ly:.1})">{}</text>"#,
            escape(&self.y_label)
        );

        for (value, label) in &self.reference {
            if let Some(y) = py(*value) {
                let _ = writeln!(
                    svg,
                    r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#555" stroke-dasharray="4 3"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="9" fill="#555">{}</text>"##,
                    ox + MARGIN_L,
                    ox + MARGIN_L + pw,
                    ox + MARGIN_L + pw - 3.0,
                    y - 3.0,
                    escape(label)
                );
            }
        }

        for (k, s) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .filter_map(|&(x, y)| py(y).map(|y| format!("{:.1},{:.1}", px(x), y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
            if let Some(err) = &s.error {
                for (&(x, y), &e) in s.points.iter().zip(err) {
                    if let (Some(top), Some(bot)) = (py(y + e), py(y - e)) {
                        let x = px(x);
                        let _ = writeln!(
                            svg,
                            r#"<line x1="{x:.1}" y1="{top:.1}" x2="{x:.1}" y2="{bot:.1}" stroke="{color}" stroke-opacity="0.5"/>"#
                        );
                    }
                }
            }
            let (lx, ly) = (ox + MARGIN_L + 8.0, oy + MARGIN_T + 14.0 + 13.0 * k as f64);
            let _ = writeln!(
                svg,
                r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{ly:.1}" font-size="10">{}</text>"#,
                ly - 3.0,
                lx + 16.0,
                ly - 3.0,
                lx + 20.0,
                escape(&s.name)
            );
        }
    }
}

/// Renders charts side by side into one SVG document.
pub fn render(panels: &[Chart]) -> String {
    let width = PANEL_W * panels.len().max(1) as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{PANEL_H:.0}" viewBox="0 0 {width:.0} {PANEL_H:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, c) in panels.iter().enumerate() {
        c.render_into(&mut svg, PANEL_W * i as f64, 0.0);
    }
    svg.push_str("</svg>\n");
    svg
}
