//! Minimal deterministic SVG plotting: axes, points, lines, bars, heatmaps
//! and dendrogram brackets. Coordinates are printed with two decimals.

use std::fmt::Write;

use saleslens::redundancy::Dendrogram;

const FONT: &str = "font-family=\"sans-serif\"";

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn tick_label(v: f64, span: f64) -> String {
    let s = if span >= 100.0 {
        format!("{v:.0}")
    } else if span >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.3}")
    };
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Svg {
            width,
            height,
            body: String::new(),
        }
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\"/>",
            num(x),
            num(y),
            num(w.max(0.0)),
            num(h.max(0.0))
        );
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\" stroke-width=\"{}\"/>",
            num(x1),
            num(y1),
            num(x2),
            num(y2),
            num(width)
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{},{}", num(*x), num(*y))).collect();
        let _ = writeln!(
            self.body,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\"/>",
            pts.join(" ")
        );
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\" fill-opacity=\"0.5\"/>",
            num(cx),
            num(cy),
            num(r)
        );
    }

    pub fn text(&mut self, x: f64, y: f64, text: &str, size: f64, anchor: &str) {
        let _ = writeln!(
            self.body,
            "<text x=\"{}\" y=\"{}\" font-size=\"{}\" text-anchor=\"{anchor}\" {FONT}>{}</text>",
            num(x),
            num(y),
            num(size),
            escape(text)
        );
    }

    pub fn vertical_text(&mut self, x: f64, y: f64, text: &str, size: f64) {
        let _ = writeln!(
            self.body,
            "<text x=\"{0}\" y=\"{1}\" font-size=\"{2}\" text-anchor=\"middle\" transform=\"rotate(-90 {0} {1})\" {FONT}>{3}</text>",
            num(x),
            num(y),
            num(size),
            escape(text)
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = num(self.width),
            h = num(self.height)
        )
    }
}

/// Padded data range; degenerate ranges are widened to unit width.
pub fn range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Maps a data window onto a pixel rectangle.
pub struct Axes {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Axes {
    pub fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    pub fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y.0) / (self.y.1 - self.y.0) * self.height
    }

    pub fn draw(&self, svg: &mut Svg, title: &str, xlabel: &str, ylabel: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        svg.line(l, t + h, l + w, t + h, "black", 1.0);
        svg.line(l, t, l, t + h, "black", 1.0);
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let (px, py) = (self.px(xv), self.py(yv));
            svg.line(px, t + h, px, t + h + 4.0, "black", 1.0);
            svg.text(px, t + h + 16.0, &tick_label(xv, self.x.1 - self.x.0), 10.0, "middle");
            svg.line(l - 4.0, py, l, py, "black", 1.0);
            svg.text(l - 6.0, py + 3.0, &tick_label(yv, self.y.1 - self.y.0), 10.0, "end");
        }
        svg.text(l + w / 2.0, t - 10.0, title, 13.0, "middle");
        svg.text(l + w / 2.0, t + h + 34.0, xlabel, 11.0, "middle");
        svg.vertical_text(l - 46.0, t + h / 2.0, ylabel, 11.0);
    }
}

/// Diverging colour for a correlation in [-1, 1]: blue, white, red.
pub fn diverging(c: f64) -> String {
    let c = c.clamp(-1.0, 1.0);
    let fade = |v: f64| (255.0 * (1.0 - v)).round() as u8;
    let (r, g, b) = if c >= 0.0 {
        (255, fade(c), fade(c))
    } else {
        (fade(-c), fade(-c), 255)
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

pub fn heatmap(names: &[String], matrix: &[Vec<f64>], title: &str) -> String {
    let n = names.len();
    let cell = 48.0;
    let (left, top) = (90.0, 60.0);
    let mut svg = Svg::new(left + cell * n as f64 + 30.0, top + cell * n as f64 + 30.0);
    svg.text(left + cell * n as f64 / 2.0, 30.0, title, 14.0, "middle");
    for i in 0..n {
        svg.text(left - 8.0, top + cell * (i as f64 + 0.55), &names[i], 11.0, "end");
        svg.text(left + cell * (i as f64 + 0.5), top - 8.0, &names[i], 11.0, "middle");
        for j in 0..n {
            let (x, y) = (left + cell * j as f64, top + cell * i as f64);
            svg.rect(x, y, cell, cell, &diverging(matrix[i][j]));
            svg.text(
                x + cell / 2.0,
                y + cell / 2.0 + 4.0,
                &format!("{:.2}", matrix[i][j]),
                10.0,
                "middle",
            );
        }
    }
    svg.finish()
}

pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64)]) -> String {
    let mut svg = Svg::new(520.0, 380.0);
    let axes = Axes {
        left: 70.0,
        top: 40.0,
        width: 420.0,
        height: 280.0,
        x: range(points.iter().map(|p| p.0)),
        y: range(points.iter().map(|p| p.1).chain([0.0])),
    };
    axes.draw(&mut svg, title, xlabel, ylabel);
    let px: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (axes.px(x), axes.py(y))).collect();
    svg.polyline(&px, "#1f77b4");
    for &(x, y) in &px {
        svg.circle(x, y, 3.5, "#1f77b4");
    }
    svg.finish()
}

/// Scatter panel at `(left, top)`, optionally with a line `y = a + b x`.
pub fn scatter_panel(
    svg: &mut Svg,
    left: f64,
    top: f64,
    points: &[(f64, f64)],
    line: Option<(f64, f64)>,
    labels: (&str, &str, &str),
) {
    let axes = Axes {
        left: left + 70.0,
        top: top + 40.0,
        width: 380.0,
        height: 280.0,
        x: range(points.iter().map(|p| p.0)),
        y: range(points.iter().map(|p| p.1)),
    };
    axes.draw(svg, labels.0, labels.1, labels.2);
    for &(x, y) in points {
        svg.circle(axes.px(x), axes.py(y), 2.0, "#1f77b4");
    }
    if let Some((a, b)) = line {
        let clip = |v: f64| v.clamp(axes.y.0, axes.y.1);
        let (x0, x1) = axes.x;
        svg.line(
            axes.px(x0),
            axes.py(clip(a + b * x0)),
            axes.px(x1),
            axes.py(clip(a + b * x1)),
            "#d62728",
            2.0,
        );
    }
}

pub const PANEL_WIDTH: f64 = 480.0;
pub const PANEL_HEIGHT: f64 = 380.0;

/// Horizontal bars (already sorted) beside the dendrogram of the same
/// features.
pub fn importance_with_dendrogram(bars: &[(String, f64)], dendrogram: &Dendrogram) -> String {
    let n = bars.len();
    let row = 28.0;
    let top = 50.0;
    let plot_h = row * n as f64;
    let (bar_left, bar_w) = (110.0, 300.0);
    let dendro_left = bar_left + bar_w + 150.0;
    let dendro_w = 220.0;
    let mut svg = Svg::new(dendro_left + dendro_w + 40.0, top + plot_h + 60.0);
    svg.text(
        bar_left + bar_w / 2.0,
        30.0,
        "Global importance (mean |SHAP|)",
        13.0,
        "middle",
    );
    let max = bars.iter().map(|b| b.1).fold(0.0, f64::max);
    for (i, (name, v)) in bars.iter().enumerate() {
        let y = top + row * i as f64;
        let w = if max > 0.0 { v / max * bar_w } else { 0.0 };
        svg.rect(bar_left, y + 4.0, w, row - 8.0, "#1f77b4");
        svg.text(bar_left - 8.0, y + row / 2.0 + 4.0, name, 11.0, "end");
        svg.text(
            bar_left + w + 6.0,
            y + row / 2.0 + 4.0,
            &format!("{v:.4}"),
            10.0,
            "start",
        );
    }
    svg.line(bar_left, top, bar_left, top + plot_h, "black", 1.0);

    svg.text(
        dendro_left + dendro_w / 2.0,
        30.0,
        "Redundancy clustering",
        13.0,
        "middle",
    );
    let leaves = dendrogram.n_leaves();
    if leaves > 0 {
        let order = dendrogram.leaf_order();
        let max_h = dendrogram
            .merges
            .iter()
            .map(|m| m.height)
            .fold(0.0, f64::max)
            .max(1e-12);
        let xh = |h: f64| dendro_left + h / max_h * dendro_w;
        let mut pos = vec![(0.0, 0.0); leaves + dendrogram.merges.len()];
        for (rank, &leaf) in order.iter().enumerate() {
            let y = top + row * (rank as f64 + 0.5) * n as f64 / leaves as f64;
            pos[leaf] = (xh(0.0), y);
            svg.text(dendro_left - 8.0, y + 4.0, &dendrogram.leaf_names[leaf], 11.0, "end");
        }
        for m in &dendrogram.merges {
            let (xa, ya) = pos[m.a];
            let (xb, yb) = pos[m.b];
            let x = xh(m.height);
            svg.line(xa, ya, x, ya, "#444444", 1.5);
            svg.line(xb, yb, x, yb, "#444444", 1.5);
            svg.line(x, ya, x, yb, "#444444", 1.5);
            pos[m.id] = (x, (ya + yb) / 2.0);
        }
        svg.line(
            dendro_left,
            top + plot_h + 8.0,
            dendro_left + dendro_w,
            top + plot_h + 8.0,
            "black",
            1.0,
        );
        svg.text(dendro_left, top + plot_h + 22.0, "0", 10.0, "middle");
        svg.text(
            dendro_left + dendro_w,
            top + plot_h + 22.0,
            &format!("{max_h:.2}"),
            10.0,
            "middle",
        );
        svg.text(
            dendro_left + dendro_w / 2.0,
            top + plot_h + 38.0,
            "merge distance",
            11.0,
            "middle",
        );
    }
    svg.finish()
}
