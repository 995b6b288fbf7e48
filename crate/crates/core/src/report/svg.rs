//! Static SVG 1.1 figures. Output bytes depend only on the input data.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::stats::{box_stats, BoxStats};

const FONT: &str = "font-family=\"Helvetica, Arial, sans-serif\"";
pub const TRAIN_COLOR: &str = "#1f77b4";
pub const TEST_COLOR: &str = "#ff7f0e";
const ACTUAL_COLOR: &str = "#1f77b4";
const PREDICTED_COLOR: &str = "#ff7f0e";
const MODEL_COLORS: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open(width: f64, height: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(s, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    s
}

fn close(mut s: String) -> String {
    s.push_str("</svg>\n");
    s
}

fn text(s: &mut String, x: f64, y: f64, size: f64, anchor: &str, body: &str) {
    let _ = writeln!(
        s,
        "<text x=\"{x:.2}\" y=\"{y:.2}\" font-size=\"{size}\" text-anchor=\"{anchor}\" {FONT}>{}</text>",
        escape(body)
    );
}

/// Affine map from data values to plot coordinates along one axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scale {
    pub d0: f64,
    pub d1: f64,
    pub p0: f64,
    pub p1: f64,
}

impl Scale {
    /// A scale over `[lo, hi]`, padded when the range is degenerate.
    pub fn new(lo: f64, hi: f64, p0: f64, p1: f64) -> Self {
        let (d0, d1) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { d0, d1, p0, p1 }
    }

    pub fn map(&self, v: f64) -> f64 {
        self.p0 + (v - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Plot frame with axis lines, tick labels and axis titles.
struct Frame {
    x: Scale,
    y: Scale,
}

impl Frame {
    fn draw(&self, s: &mut String, x_label: &str, y_label: &str, ticks_x: bool) {
        let (left, right) = (self.x.p0, self.x.p1);
        let (bottom, top) = (self.y.p0, self.y.p1);
        let _ = writeln!(
            s,
            "<path d=\"M{left:.2},{top:.2} L{left:.2},{bottom:.2} L{right:.2},{bottom:.2}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>"
        );
        for k in 0..=4 {
            let v = self.y.d0 + (self.y.d1 - self.y.d0) * k as f64 / 4.0;
            let py = self.y.map(v);
            let _ = writeln!(
                s,
                "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{left:.2}\" y2=\"{py:.2}\" stroke=\"black\"/>",
                left - 4.0
            );
            text(s, left - 6.0, py + 3.0, 10.0, "end", &tick(v, self.y.d1 - self.y.d0));
            if ticks_x {
                let vx = self.x.d0 + (self.x.d1 - self.x.d0) * k as f64 / 4.0;
                let px = self.x.map(vx);
                let _ = writeln!(
                    s,
                    "<line x1=\"{px:.2}\" y1=\"{bottom:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
                    bottom + 4.0
                );
                text(s, px, bottom + 16.0, 10.0, "middle", &tick(vx, self.x.d1 - self.x.d0));
            }
        }
        text(s, (left + right) / 2.0, bottom + 34.0, 12.0, "middle", x_label);
        let cy = (top + bottom) / 2.0;
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{cy:.2}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 {:.2} {cy:.2})\" {FONT}>{}</text>",
            left - 46.0,
            left - 46.0,
            escape(y_label)
        );
    }
}

fn tick(v: f64, range: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if range >= 20.0 && v.abs() < 1e6 {
        format!("{v:.0}")
    } else if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.1e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn polyline(s: &mut String, points: &[(f64, f64)], color: &str, class: &str) {
    let _ = write!(
        s,
        "<polyline class=\"{class}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\""
    );
    for (i, (x, y)) in points.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:.2},{y:.2}");
    }
    s.push_str("\"/>\n");
}

fn legend(s: &mut String, x: f64, y: f64, entries: &[(&str, &str)]) {
    for (k, (label, color)) in entries.iter().enumerate() {
        let yy = y + 16.0 * k as f64;
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{yy:.2}\" x2=\"{:.2}\" y2=\"{yy:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            x + 18.0
        );
        text(s, x + 24.0, yy + 4.0, 11.0, "start", label);
    }
}

/// One named series of `(x, y)` points.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

/// Loss-vs-epoch chart; one polyline per series.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.points.is_empty()) {
        return Err(Error::InvalidArgument(format!("{title}: empty series")));
    }
    let (w, h) = (640.0, 400.0);
    let (x_lo, x_hi) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y_lo, y_hi) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let frame = Frame {
        x: Scale::new(x_lo, x_hi, 70.0, w - 20.0),
        y: Scale::new(y_lo.min(0.0), y_hi, h - 50.0, 40.0),
    };
    let mut s = open(w, h);
    text(&mut s, w / 2.0, 22.0, 14.0, "middle", title);
    frame.draw(&mut s, x_label, y_label, true);
    for (k, se) in series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = se
            .points
            .iter()
            .map(|&(x, y)| (frame.x.map(x), frame.y.map(y)))
            .collect();
        polyline(&mut s, &pts, &se.color, &format!("series series-{k}"));
    }
    let entries: Vec<(&str, &str)> = series.iter().map(|s| (s.label.as_str(), s.color.as_str())).collect();
    legend(&mut s, w - 140.0, 50.0, &entries);
    Ok(close(s))
}

/// Actual and predicted values of one product.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductTrace {
    pub code: String,
    pub times: Vec<usize>,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
}

/// Small multiples of actual (blue) vs predicted (orange) series, with a
/// dashed line at the train/test boundary.
pub fn series_panels(title: &str, traces: &[ProductTrace], boundary: usize) -> Result<String> {
    if traces.is_empty() || traces.iter().any(|t| t.times.is_empty()) {
        return Err(Error::InvalidArgument(format!("{title}: empty series")));
    }
    let cols = 5usize;
    let rows = traces.len().div_ceil(cols);
    let (pw, ph) = (220.0, 120.0);
    let (w, h) = (pw * cols as f64 + 20.0, ph * rows as f64 + 70.0);
    let mut s = open(w, h);
    text(&mut s, w / 2.0, 22.0, 14.0, "middle", title);
    legend(
        &mut s,
        20.0,
        40.0,
        &[("actual", ACTUAL_COLOR), ("predicted", PREDICTED_COLOR)],
    );
    for (k, tr) in traces.iter().enumerate() {
        let ox = 10.0 + pw * (k % cols) as f64;
        let oy = 60.0 + ph * (k / cols) as f64;
        let (t_lo, t_hi) = bounds(tr.times.iter().map(|&t| t as f64));
        let (v_lo, v_hi) = bounds(tr.actual.iter().chain(&tr.predicted).copied());
        let x = Scale::new(t_lo, t_hi, ox + 10.0, ox + pw - 10.0);
        let y = Scale::new(v_lo, v_hi, oy + ph - 15.0, oy + 18.0);
        let _ = writeln!(
            s,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#cccccc\"/>",
            ox + 5.0,
            oy + 5.0,
            pw - 10.0,
            ph - 10.0
        );
        text(&mut s, ox + pw / 2.0, oy + 16.0, 10.0, "middle", &tr.code);
        let bx = x.map(boundary as f64);
        if (x.p0..=x.p1).contains(&bx) {
            let _ = writeln!(
                s,
                "<line x1=\"{bx:.2}\" y1=\"{:.2}\" x2=\"{bx:.2}\" y2=\"{:.2}\" stroke=\"#888888\" stroke-dasharray=\"3,3\"/>",
                y.p1,
                y.p0
            );
        }
        let pts = |vals: &[f64]| -> Vec<(f64, f64)> {
            tr.times
                .iter()
                .zip(vals)
                .map(|(&t, &v)| (x.map(t as f64), y.map(v)))
                .collect()
        };
        polyline(&mut s, &pts(&tr.actual), ACTUAL_COLOR, "actual");
        polyline(&mut s, &pts(&tr.predicted), PREDICTED_COLOR, "predicted");
    }
    Ok(close(s))
}

/// One box of a grouped box plot.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxEntry {
    pub label: String,
    pub stats: BoxStats,
    pub outliers: Vec<f64>,
}

impl BoxEntry {
    /// Tukey box of `values`; outliers lie beyond 1.5 IQR of the quartiles.
    pub fn from_values(label: &str, values: &[f64]) -> Result<Self> {
        let stats = box_stats(values)?;
        let iqr = stats.q3 - stats.q1;
        let outliers = values
            .iter()
            .copied()
            .filter(|v| *v < stats.q1 - 1.5 * iqr || *v > stats.q3 + 1.5 * iqr)
            .collect();
        Ok(Self {
            label: label.to_string(),
            stats,
            outliers,
        })
    }
}

/// Box geometry in plot coordinates, exposed for checking the drawing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxGeometry {
    pub x: f64,
    pub width: f64,
    pub q1_y: f64,
    pub q3_y: f64,
    pub median_y: f64,
    pub whisker_low_y: f64,
    pub whisker_high_y: f64,
}

pub struct BoxPlot {
    pub svg: String,
    pub y_scale: Scale,
    pub geometry: Vec<Vec<BoxGeometry>>,
}

/// Grouped box plots: one cluster per group, one colored box per entry.
pub fn box_plot(title: &str, y_label: &str, groups: &[(String, Vec<BoxEntry>)]) -> Result<BoxPlot> {
    if groups.is_empty() || groups.iter().any(|(_, e)| e.is_empty()) {
        return Err(Error::InvalidArgument(format!("{title}: empty series")));
    }
    let per_group = groups.iter().map(|(_, e)| e.len()).max().unwrap_or(1);
    let box_w = 36.0;
    let group_w = box_w * 1.5 * per_group as f64 + 30.0;
    let w = (90.0 + group_w * groups.len() as f64 + 150.0).max(420.0);
    let h = 420.0;
    let (lo, hi) = bounds(groups.iter().flat_map(|(_, es)| {
        es.iter().flat_map(|e| {
            [e.stats.whisker_low, e.stats.whisker_high]
                .into_iter()
                .chain(e.outliers.iter().copied())
        })
    }));
    let frame = Frame {
        x: Scale::new(0.0, 1.0, 80.0, w - 150.0),
        y: Scale::new(lo.min(0.0), hi, h - 60.0, 40.0),
    };
    let mut s = open(w, h);
    text(&mut s, w / 2.0, 22.0, 14.0, "middle", title);
    frame.draw(&mut s, "", y_label, false);

    let mut geometry = Vec::with_capacity(groups.len());
    let mut legend_entries: Vec<(String, &str)> = Vec::new();
    for (g, (group_label, entries)) in groups.iter().enumerate() {
        let gx = 90.0 + group_w * g as f64;
        let mut row = Vec::with_capacity(entries.len());
        for (k, e) in entries.iter().enumerate() {
            let color = MODEL_COLORS[k % MODEL_COLORS.len()];
            if g == 0 {
                legend_entries.push((e.label.clone(), color));
            }
            let x = gx + 15.0 + box_w * 1.5 * k as f64;
            let cx = x + box_w / 2.0;
            let geo = BoxGeometry {
                x,
                width: box_w,
                q1_y: frame.y.map(e.stats.q1),
                q3_y: frame.y.map(e.stats.q3),
                median_y: frame.y.map(e.stats.median),
                whisker_low_y: frame.y.map(e.stats.whisker_low),
                whisker_high_y: frame.y.map(e.stats.whisker_high),
            };
            let _ = writeln!(
                s,
                "<line class=\"whisker\" x1=\"{cx:.2}\" y1=\"{:.2}\" x2=\"{cx:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
                geo.whisker_low_y, geo.whisker_high_y
            );
            for wy in [geo.whisker_low_y, geo.whisker_high_y] {
                let _ = writeln!(
                    s,
                    "<line x1=\"{:.2}\" y1=\"{wy:.2}\" x2=\"{:.2}\" y2=\"{wy:.2}\" stroke=\"black\"/>",
                    cx - box_w / 4.0,
                    cx + box_w / 4.0
                );
            }
            let _ = writeln!(
                s,
                "<rect class=\"box\" x=\"{x:.2}\" y=\"{:.2}\" width=\"{box_w:.2}\" height=\"{:.2}\" fill=\"{color}\" fill-opacity=\"0.6\" stroke=\"black\"/>",
                geo.q3_y,
                geo.q1_y - geo.q3_y
            );
            let _ = writeln!(
                s,
                "<line class=\"median\" x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"2\"/>",
                geo.median_y,
                x + box_w,
                geo.median_y
            );
            for &o in &e.outliers {
                let _ = writeln!(
                    s,
                    "<circle class=\"outlier\" cx=\"{cx:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"none\" stroke=\"{color}\"/>",
                    frame.y.map(o)
                );
            }
            row.push(geo);
        }
        let width = box_w * 1.5 * entries.len() as f64;
        text(
            &mut s,
            gx + 15.0 + width / 2.0 - box_w * 0.25,
            h - 40.0,
            11.0,
            "middle",
            group_label,
        );
        geometry.push(row);
    }
    let entries: Vec<(&str, &str)> = legend_entries.iter().map(|(l, c)| (l.as_str(), *c)).collect();
    legend(&mut s, w - 130.0, 50.0, &entries);
    Ok(BoxPlot {
        svg: close(s),
        y_scale: frame.y,
        geometry,
    })
}

/// Graph layout (left) and adjacency heat grid (right). `edges` index into
/// `labels`; `positions` are unit-square coordinates.
pub fn adjacency_figure(
    title: &str,
    labels: &[String],
    edges: &[(usize, usize)],
    positions: &[(f64, f64)],
) -> Result<String> {
    let n = labels.len();
    if n == 0 {
        return Err(Error::InvalidArgument(format!("{title}: empty graph")));
    }
    if positions.len() != n {
        return Err(Error::InvalidArgument("layout does not match node count".into()));
    }
    let panel = 440.0;
    let (w, h) = (2.0 * panel + 180.0, panel + 120.0);
    let mut s = open(w, h);
    text(&mut s, w / 2.0, 22.0, 14.0, "middle", title);

    // left: node-link layout
    let (lx, ly) = (30.0, 60.0);
    let px = |p: (f64, f64)| (lx + 20.0 + p.0 * (panel - 40.0), ly + 20.0 + p.1 * (panel - 40.0));
    s.push_str("<g class=\"layout\">\n");
    for &(a, b) in edges {
        let (x1, y1) = px(positions[a]);
        let (x2, y2) = px(positions[b]);
        let _ = writeln!(
            s,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"#999999\" stroke-width=\"0.8\"/>"
        );
    }
    for (i, &p) in positions.iter().enumerate() {
        let (x, y) = px(p);
        let _ = writeln!(
            s,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"6\" fill=\"{TRAIN_COLOR}\" stroke=\"white\"><title>{}</title></circle>",
            escape(&labels[i])
        );
    }
    s.push_str("</g>\n");

    // right: adjacency grid, row = source, column = target
    let gx = lx + panel + 110.0;
    let gy = ly;
    let cell = panel / n as f64;
    let _ = writeln!(
        s,
        "<rect x=\"{gx:.2}\" y=\"{gy:.2}\" width=\"{panel:.2}\" height=\"{panel:.2}\" fill=\"#f4f4f4\" stroke=\"black\"/>"
    );
    for &(a, b) in edges {
        let _ = writeln!(
            s,
            "<rect class=\"cell\" x=\"{:.2}\" y=\"{:.2}\" width=\"{cell:.2}\" height=\"{cell:.2}\" fill=\"#08306b\"/>",
            gx + b as f64 * cell,
            gy + a as f64 * cell
        );
    }
    let label_size = (cell * 0.7).clamp(4.0, 10.0);
    for (i, l) in labels.iter().enumerate() {
        let c = gy + (i as f64 + 0.5) * cell + label_size / 3.0;
        text(&mut s, gx - 4.0, c, label_size, "end", l);
    }
    text(
        &mut s,
        gx + panel / 2.0,
        gy + panel + 20.0,
        12.0,
        "middle",
        "target product",
    );
    text(
        &mut s,
        gx + panel / 2.0,
        gy - 8.0,
        12.0,
        "middle",
        &format!("{} edges", edges.len()),
    );
    Ok(close(s))
}
