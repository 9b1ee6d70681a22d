//! Minimal SVG figures. Coordinates are printed with fixed precision so the
//! output is byte-stable.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    out: String,
}

impl Frame {
    fn new(title: &str, xlabel: &str, ylabel: &str, (x0, x1): (f64, f64), (y0, y1): (f64, f64)) -> Frame {
        let x1 = if x1 > x0 { x1 } else { x0 + 1.0 };
        let y1 = if y1 > y0 { y1 } else { y0 + 1.0 };
        let mut f = Frame {
            x0,
            x1,
            y0,
            y1,
            out: String::new(),
        };
        let _ = writeln!(
            f.out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(f.out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            f.out,
            r#"<text x="{:.1}" y="18" text-anchor="middle">{}</text>"#,
            W / 2.0,
            escape(title)
        );
        let _ = writeln!(
            f.out,
            r#"<line x1="{LEFT}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
            H - BOTTOM,
            W - RIGHT,
            H - BOTTOM
        );
        let _ = writeln!(
            f.out,
            r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/>"#,
            H - BOTTOM
        );
        for k in 0..=4 {
            let t = k as f64 / 4.0;
            let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
            let (px, py) = (f.px(xv), f.py(yv));
            let _ = writeln!(
                f.out,
                r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                H - BOTTOM + 16.0,
                tick(xv)
            );
            let _ = writeln!(
                f.out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                py + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            f.out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            (LEFT + W - RIGHT) / 2.0,
            H - 12.0,
            escape(xlabel)
        );
        let _ = writeln!(
            f.out,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            (TOP + H - BOTTOM) / 2.0,
            (TOP + H - BOTTOM) / 2.0,
            escape(ylabel)
        );
        f
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }

    fn hline(&mut self, y: f64, color: &str, label: &str) {
        let py = self.py(y);
        let _ = writeln!(
            self.out,
            r#"<line x1="{LEFT}" y1="{py:.2}" x2="{:.1}" y2="{py:.2}" stroke="{color}" stroke-dasharray="6 4"/>"#,
            W - RIGHT
        );
        let _ = writeln!(
            self.out,
            r#"<text x="{:.1}" y="{:.2}" text-anchor="end" fill="{color}">{}</text>"#,
            W - RIGHT - 4.0,
            py - 4.0,
            escape(label)
        );
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn tick(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e9 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

pub struct ScatterPoint {
    pub kind: String,
    pub x: f64,
    pub y: f64,
}

/// Node F-scores against node size, with dashed baselines.
pub fn scatter(title: &str, points: &[ScatterPoint], baselines: &[(&str, f64)]) -> String {
    let xmax = points.iter().map(|p| p.x).fold(1.0, f64::max);
    let mut f = Frame::new(title, "constructions in node", "weighted F", (0.0, xmax), (0.0, 1.0));
    let mut kinds: Vec<&str> = points.iter().map(|p| p.kind.as_str()).collect();
    kinds.sort_unstable();
    kinds.dedup();
    for p in points {
        let color = PALETTE[kinds.iter().position(|k| *k == p.kind).unwrap_or(0) % PALETTE.len()];
        let _ = writeln!(
            f.out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}" fill-opacity="0.7"/>"#,
            f.px(p.x),
            f.py(p.y)
        );
    }
    for (i, (label, y)) in baselines.iter().enumerate() {
        f.hline(*y, PALETTE[(i + 3) % PALETTE.len()], label);
    }
    legend(&mut f, &kinds);
    f.finish()
}

fn legend(f: &mut Frame, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 14.0 * i as f64;
        let _ = writeln!(
            f.out,
            r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            LEFT + 10.0,
            y,
            PALETTE[i % PALETTE.len()],
            LEFT + 24.0,
            y + 9.0,
            escape(name)
        );
    }
}

/// One polyline per named series over shared x values.
pub fn curves(title: &str, xlabel: &str, x: &[f64], series: &[(String, Vec<f64>)]) -> String {
    let xmax = x.iter().copied().fold(1.0, f64::max);
    let mut f = Frame::new(title, xlabel, "F", (0.0, xmax), (0.0, 1.0));
    for (i, (_, ys)) in series.iter().enumerate() {
        let pts: Vec<String> = x
            .iter()
            .zip(ys)
            .map(|(&a, &b)| format!("{:.2},{:.2}", f.px(a), f.py(b)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let width = if i == 0 { 2.5 } else { 1.0 };
        let _ = writeln!(
            f.out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{width}"/>"#,
            pts.join(" "),
            PALETTE[i % PALETTE.len()]
        );
    }
    let names: Vec<&str> = series.iter().map(|(n, _)| n.as_str()).collect();
    legend(&mut f, &names);
    f.finish()
}

pub struct QuantileRow {
    pub label: String,
    /// min, q1, median, q3, max
    pub q: Option<[f64; 5]>,
}

/// Box-and-whisker summary per group on a [-1, 1] axis.
pub fn quantile_boxes(title: &str, rows: &[QuantileRow]) -> String {
    let n = rows.len().max(1) as f64;
    let mut f = Frame::new(title, "group", "correlation", (0.0, n), (-1.0, 1.0));
    for (i, row) in rows.iter().enumerate() {
        let cx = f.px(i as f64 + 0.5);
        let _ = writeln!(
            f.out,
            r#"<text x="{cx:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
            H - BOTTOM + 30.0,
            escape(&row.label)
        );
        let Some(q) = row.q else { continue };
        let color = PALETTE[i % PALETTE.len()];
        let half = 0.2 * (f.px(1.0) - f.px(0.0));
        let _ = writeln!(
            f.out,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="{color}"/>"#,
            f.py(q[0]),
            f.py(q[4])
        );
        let _ = writeln!(
            f.out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.3" stroke="{color}"/>"#,
            cx - half,
            f.py(q[3]),
            2.0 * half,
            f.py(q[1]) - f.py(q[3])
        );
        let _ = writeln!(
            f.out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="2"/>"#,
            cx - half,
            f.py(q[2]),
            cx + half,
            f.py(q[2])
        );
    }
    f.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scatter_is_a_valid_document() {
        let s = scatter("nodes", &[], &[]);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(!s.contains("<circle"));
    }

    #[test]
    fn points_land_inside_the_plot_area() {
        let pts = [
            ScatterPoint {
                kind: "macro".into(),
                x: 0.0,
                y: 0.0,
            },
            ScatterPoint {
                kind: "micro".into(),
                x: 10.0,
                y: 1.0,
            },
        ];
        let s = scatter("nodes", &pts, &[("full", 0.9)]);
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(s.contains(r#"cx="60.00" cy="350.00""#));
        assert!(s.contains(r#"cx="620.00" cy="30.00""#));
    }

    #[test]
    fn labels_are_escaped() {
        let s = curves("a<b", "x", &[0.0, 1.0], &[("A & B".into(), vec![0.5, 0.6])]);
        assert!(s.contains("a&lt;b") && s.contains("A &amp; B"));
    }
}
