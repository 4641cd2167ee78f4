//! Minimal SVG emission: enough for scatter, polyline and bar plots.

use std::fmt::Write;

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

fn num(v: f64) -> String {
    format!("{:.2}", v)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            body: String::new(),
        }
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) -> &mut Self {
        let _ = writeln!(
            self.body,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
            num(x),
            num(y),
            num(w),
            num(h)
        );
        self
    }

    pub fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str, stroke: &str) -> &mut Self {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}" stroke="{stroke}"/>"#,
            num(x),
            num(y),
            num(r)
        );
        self
    }

    pub fn line(&mut self, a: [f64; 2], b: [f64; 2], stroke: &str, width: f64) -> &mut Self {
        let _ = writeln!(
            self.body,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{stroke}" stroke-width="{}"/>"#,
            num(a[0]),
            num(a[1]),
            num(b[0]),
            num(b[1]),
            num(width)
        );
        self
    }

    pub fn polyline(&mut self, points: &[[f64; 2]], stroke: &str, width: f64, opacity: f64) -> &mut Self {
        if points.len() < 2 {
            return self;
        }
        let pts: Vec<String> = points.iter().map(|p| format!("{},{}", num(p[0]), num(p[1]))).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{}" stroke-opacity="{}"/>"#,
            pts.join(" "),
            num(width),
            num(opacity)
        );
        self
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) -> &mut Self {
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="{}" text-anchor="{anchor}">{}</text>"#,
            num(x),
            num(y),
            num(size),
            escape(content)
        );
        self
    }

    pub fn finish(&self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n{}</svg>\n",
            self.body,
            w = num(self.width),
            h = num(self.height)
        )
    }
}

/// Blue-to-red ramp for `t` in [0, 1].
pub fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (40.0 + 200.0 * t) as u8;
    let b = (220.0 - 180.0 * t) as u8;
    format!("rgb({r},70,{b})")
}

/// Axis frame with linear scales; maps data to canvas coordinates.
pub struct Frame {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl Frame {
    pub fn map(&self, x: f64, y: f64) -> [f64; 2] {
        let span_x = if self.x1 > self.x0 { self.x1 - self.x0 } else { 1.0 };
        let span_y = if self.y1 > self.y0 { self.y1 - self.y0 } else { 1.0 };
        [
            self.left + (x - self.x0) / span_x * self.width,
            self.top + self.height - (y - self.y0) / span_y * self.height,
        ]
    }

    pub fn draw_axes(&self, svg: &mut Svg, title: &str, x_label: &str, y_label: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        svg.line([l, t + h], [l + w, t + h], "black", 1.0);
        svg.line([l, t], [l, t + h], "black", 1.0);
        svg.text(l + w / 2.0, t - 10.0, 14.0, "middle", title);
        svg.text(l + w / 2.0, t + h + 35.0, 12.0, "middle", x_label);
        svg.text(l - 45.0, t + h / 2.0, 12.0, "middle", y_label);
        for i in 0..=4 {
            let v = self.y0 + (self.y1 - self.y0) * i as f64 / 4.0;
            let p = self.map(self.x0, v);
            svg.line([l - 4.0, p[1]], [l, p[1]], "black", 1.0);
            svg.text(l - 6.0, p[1] + 4.0, 10.0, "end", &format!("{v:.3}"));
        }
    }
}

/// Bars with symmetric error whiskers.
pub fn bar_chart(title: &str, y_label: &str, labels: &[String], means: &[f64], stds: &[f64]) -> String {
    let width = 120.0 + 90.0 * labels.len().max(1) as f64;
    let mut svg = Svg::new(width, 360.0);
    let top = means
        .iter()
        .zip(stds)
        .map(|(m, s)| m + s)
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        .max(1e-9);
    let frame = Frame {
        x0: 0.0,
        x1: labels.len().max(1) as f64,
        y0: 0.0,
        y1: top * 1.1,
        left: 80.0,
        top: 40.0,
        width: width - 110.0,
        height: 250.0,
    };
    frame.draw_axes(&mut svg, title, "", y_label);
    for (i, label) in labels.iter().enumerate() {
        let m = if means[i].is_finite() { means[i] } else { 0.0 };
        let a = frame.map(i as f64 + 0.2, m);
        let b = frame.map(i as f64 + 0.8, 0.0);
        svg.rect(a[0], a[1], b[0] - a[0], b[1] - a[1], "steelblue");
        if stds[i].is_finite() && stds[i] > 0.0 {
            let hi = frame.map(i as f64 + 0.5, m + stds[i]);
            let lo = frame.map(i as f64 + 0.5, (m - stds[i]).max(0.0));
            svg.line(hi, lo, "black", 1.0);
        }
        let c = frame.map(i as f64 + 0.5, 0.0);
        svg.text(c[0], c[1] + 16.0, 10.0, "middle", label);
    }
    svg.finish()
}

/// Several named series on shared axes.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<[f64; 2]>)]) -> String {
    let mut svg = Svg::new(560.0, 380.0);
    let pts = series.iter().flat_map(|(_, p)| p.iter()).filter(|p| p[0].is_finite() && p[1].is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let frame = Frame {
        x0,
        x1,
        y0: y0.min(0.0),
        y1,
        left: 80.0,
        top: 40.0,
        width: 420.0,
        height: 270.0,
    };
    frame.draw_axes(&mut svg, title, x_label, y_label);
    let colours = ["steelblue", "darkorange", "seagreen", "crimson", "purple", "gray"];
    for (k, (name, points)) in series.iter().enumerate() {
        let colour = colours[k % colours.len()];
        let mapped: Vec<[f64; 2]> = points.iter().map(|p| frame.map(p[0], p[1])).collect();
        svg.polyline(&mapped, colour, 2.0, 1.0);
        svg.text(frame.left + frame.width - 5.0, frame.top + 15.0 * (k + 1) as f64, 11.0, "end", name);
        svg.line(
            [frame.left + frame.width + 2.0, frame.top + 15.0 * (k + 1) as f64 - 4.0],
            [frame.left + frame.width + 14.0, frame.top + 15.0 * (k + 1) as f64 - 4.0],
            colour,
            3.0,
        );
    }
    svg.finish()
}
