//! Minimal information-plane plots written as plain SVG.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Dashed,
    Dots,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: impl Into<String>, unit: &str) -> Self {
        Plot {
            title: title.into(),
            x_label: format!("I(X;T) [{unit}]"),
            y_label: format!("I(T;Y) [{unit}]"),
            series: Vec::new(),
        }
    }

    pub fn add(
        &mut self,
        label: impl Into<String>,
        color: &'static str,
        style: Style,
        points: Vec<(f64, f64)>,
    ) {
        self.series.push(Series {
            label: label.into(),
            color,
            points,
            style,
        });
    }

    fn extent(&self) -> (f64, f64) {
        let finite = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite());
        let (mx, my) = finite.fold((0.0f64, 0.0f64), |(ax, ay), &(x, y)| (ax.max(x), ay.max(y)));
        let pad = |v: f64| if v > 0.0 { v * 1.05 } else { 1.0 };
        (pad(mx), pad(my))
    }

    pub fn render(&self) -> String {
        let (x_max, y_max) = self.extent();
        let sx = |x: f64| MARGIN + x / x_max * (WIDTH - 2.0 * MARGIN);
        let sy = |y: f64| HEIGHT - MARGIN - y / y_max * (HEIGHT - 2.0 * MARGIN);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let (x0, y0, x1, y1) = (sx(0.0), sy(0.0), sx(x_max), sy(y_max));
        let _ = writeln!(
            s,
            r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let fx = x_max * i as f64 / 4.0;
            let fy = y_max * i as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{fx:.3}</text>"#,
                sx(fx),
                y0 + 16.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{fy:.3}</text>"#,
                x0 - 6.0,
                sy(fy) + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let pts: Vec<(f64, f64)> = series
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| (sx(x), sy(y)))
                .collect();
            match series.style {
                Style::Line | Style::Dashed => {
                    let path: Vec<String> =
                        pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let dash = if series.style == Style::Dashed {
                        r#" stroke-dasharray="6 4""#
                    } else {
                        ""
                    };
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"{dash}/>"#,
                        path.join(" "),
                        series.color
                    );
                }
                Style::Dots => {
                    for (x, y) in &pts {
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{}"/>"#,
                            series.color
                        );
                    }
                }
            }
            let ly = MARGIN + 16.0 * i as f64;
            let lx = WIDTH - MARGIN - 150.0;
            let _ = writeln!(
                s,
                r#"<rect x="{lx}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
                ly - 9.0,
                series.color,
                lx + 16.0,
                ly,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
