//! Self-contained SVG figures. Each file carries the plotted data as CSV in
//! a leading comment so the figure can be regenerated from the file alone.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Line,
    Points,
    Steps,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub kind: Kind,
}

impl Series {
    pub fn new(name: impl Into<String>, x: Vec<f64>, y: Vec<f64>, kind: Kind) -> Self {
        Self {
            name: name.into(),
            x,
            y,
            kind,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub series: Vec<Series>,
    pub log_x: bool,
    /// Dashed horizontal reference line.
    pub hline: Option<f64>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, data: &str, stamp: Option<&str>) {
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    if let Some(s) = stamp {
        let _ = writeln!(out, "<!-- {} -->", escape(s));
    }
    let _ = write!(out, "<!-- data\n{}-->\n", data.replace("--", "- -"));
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
    log_x: bool,
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        let (a, b, v) = if self.log_x {
            (self.x.0.log10(), self.x.1.log10(), x.log10())
        } else {
            (self.x.0, self.x.1, x)
        };
        LEFT + (v - a) / (b - a) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn draw(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = writeln!(
            out,
            "<rect x=\"{x0}\" y=\"{y0}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
            x1 - x0,
            y1 - y0
        );
        let xticks: Vec<f64> = if self.log_x {
            let (a, b) = (self.x.0.log10().ceil() as i32, self.x.1.log10().floor() as i32);
            (a..=b).map(|k| 10f64.powi(k)).collect()
        } else {
            ticks(self.x)
        };
        for t in xticks {
            let p = self.px(t);
            let _ = writeln!(out, "<line x1=\"{p:.2}\" y1=\"{y1}\" x2=\"{p:.2}\" y2=\"{:.2}\" stroke=\"black\"/>", y1 + 5.0);
            let _ = writeln!(out, "<text x=\"{p:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>", y1 + 18.0, label(t));
        }
        for t in ticks(self.y) {
            let p = self.py(t);
            let _ = writeln!(out, "<line x1=\"{:.2}\" y1=\"{p:.2}\" x2=\"{x0}\" y2=\"{p:.2}\" stroke=\"black\"/>", x0 - 5.0);
            let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>", x0 - 8.0, p + 4.0, label(t));
        }
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>", WIDTH / 2.0, escape(title));
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>", (x0 + x1) / 2.0, HEIGHT - 12.0, escape(xlabel));
        let _ = writeln!(
            out,
            "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{}</text>",
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(ylabel)
        );
    }
}

fn ticks((lo, hi): (f64, f64)) -> Vec<f64> {
    let step = nice_step(hi - lo);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step && out.len() < 20 {
        out.push(if t.abs() < 1e-9 * step { 0.0 } else { t });
        t += step;
    }
    out
}

pub fn plot(p: &Plot, data: &str, stamp: Option<&str>) -> String {
    let mut out = String::new();
    header(&mut out, data, stamp);
    let xs = p.series.iter().flat_map(|s| s.x.iter().copied()).filter(|x| !p.log_x || *x > 0.0);
    let (mut x0, mut x1) = range(xs);
    if p.log_x {
        x0 = 10f64.powf(x0.log10().floor());
        x1 = 10f64.powf(x1.log10().ceil());
    }
    let (y0, y1) = range(p.series.iter().flat_map(|s| s.y.iter().copied()).chain(p.hline));
    let pad = 0.05 * (y1 - y0);
    let axes = Axes {
        x: (x0, x1),
        y: (y0 - pad, y1 + pad),
        log_x: p.log_x,
    };
    axes.draw(&mut out, &p.title, &p.xlabel, &p.ylabel);
    if let Some(h) = p.hline {
        let y = axes.py(h);
        let _ = writeln!(
            out,
            "<line x1=\"{LEFT}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"gray\" stroke-dasharray=\"5,4\"/>",
            WIDTH - RIGHT
        );
    }
    for (k, s) in p.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s
            .x
            .iter()
            .zip(&s.y)
            .filter(|(x, y)| x.is_finite() && y.is_finite() && (!p.log_x || **x > 0.0))
            .map(|(&x, &y)| (axes.px(x), axes.py(y)))
            .collect();
        match s.kind {
            Kind::Points => {
                for (x, y) in &pts {
                    let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.5\" fill=\"{color}\"/>");
                }
            }
            Kind::Line | Kind::Steps => {
                let mut path = String::new();
                for (i, (x, y)) in pts.iter().enumerate() {
                    if i == 0 {
                        let _ = write!(path, "M{x:.2},{y:.2}");
                    } else if s.kind == Kind::Steps {
                        let _ = write!(path, " H{x:.2} V{y:.2}");
                    } else {
                        let _ = write!(path, " L{x:.2},{y:.2}");
                    }
                }
                let _ = writeln!(out, "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>");
            }
        }
        let ly = TOP + 16.0 + 16.0 * k as f64;
        let lx = WIDTH - RIGHT - 150.0;
        let _ = writeln!(out, "<rect x=\"{lx}\" y=\"{:.2}\" width=\"12\" height=\"4\" fill=\"{color}\"/>", ly - 4.0);
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{ly:.2}\">{}</text>", lx + 18.0, escape(&s.name));
    }
    out.push_str("</svg>\n");
    out
}

/// Color map of `z[row][col]` over columns `x` and rows `y`, values in [0, 1].
pub fn heatmap(title: &str, xlabel: &str, ylabel: &str, x: &[f64], y: &[f64], z: &[Vec<f64>], data: &str, stamp: Option<&str>) -> String {
    let mut out = String::new();
    header(&mut out, data, stamp);
    let axes = Axes {
        x: range(x.iter().copied()),
        y: range(y.iter().copied()),
        log_x: false,
    };
    let cw = (WIDTH - LEFT - RIGHT) / x.len().max(1) as f64;
    let ch = (HEIGHT - TOP - BOTTOM) / y.len().max(1) as f64;
    for (r, row) in z.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let t = v.clamp(0.0, 1.0);
            let (red, green, blue) = ((255.0 * t) as u8, (64.0 + 96.0 * t) as u8, (255.0 * (1.0 - t)) as u8);
            let px = LEFT + c as f64 * cw;
            let py = HEIGHT - BOTTOM - (r + 1) as f64 * ch;
            let _ = writeln!(
                out,
                "<rect x=\"{px:.2}\" y=\"{py:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#{red:02x}{green:02x}{blue:02x}\"/>",
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    axes.draw(&mut out, title, xlabel, ylabel);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_embeds_data_and_is_stable() {
        let p = Plot {
            title: "t".into(),
            xlabel: "x".into(),
            ylabel: "y".into(),
            series: vec![Series::new("a", vec![1.0, 2.0, 4.0], vec![0.9, 0.8, 0.6], Kind::Line)],
            log_x: true,
            hline: Some(0.5),
        };
        let a = plot(&p, "x,y\n1,0.9\n", None);
        assert!(a.contains("<!-- data\nx,y\n1,0.9\n-->"));
        assert_eq!(a, plot(&p, "x,y\n1,0.9\n", None));
        assert!(plot(&p, "", Some("stamp")).contains("<!-- stamp -->"));
        assert!(a.ends_with("</svg>\n"));
    }

    #[test]
    fn ticks_cover_range() {
        let t = ticks((0.0, 1.0));
        assert_eq!(t.len(), 6);
        assert_eq!(t[0], 0.0);
        assert!((t[5] - 1.0).abs() < 1e-12);
        assert!(ticks((-3.0, 7.0)).contains(&0.0));
    }
}
