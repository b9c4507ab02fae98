//! Self-contained SVG of loss and accuracy curves. Output is a pure
//! function of the input series: fixed layout, fixed number formatting.

use std::fmt::Write;
use std::path::Path;

use fwrnn_core::optim::TrainRecord;

use crate::metrics::read_metrics;
use crate::HarnessError;

const WIDTH: f64 = 960.0;
const PANEL_W: f64 = 400.0;
const PANEL_H: f64 = 290.0;
const TOP: f64 = 50.0;
const LEFTS: [f64; 2] = [70.0, 550.0];
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub epoch: Vec<f64>,
    pub train_loss: Vec<f64>,
    pub test_loss: Vec<f64>,
    /// Fractions in [0, 1]; `None` for regression runs.
    pub accuracy: Vec<Option<f64>>,
}

impl Series {
    pub fn from_records(label: &str, records: &[TrainRecord]) -> Series {
        Series {
            label: label.to_string(),
            epoch: records.iter().map(|r| r.epoch as f64).collect(),
            train_loss: records.iter().map(|r| r.train_loss).collect(),
            test_loss: records.iter().map(|r| r.test_loss).collect(),
            accuracy: records.iter().map(|r| r.test_accuracy).collect(),
        }
    }

    pub fn from_metrics_file(label: &str, path: &Path) -> Result<Series, HarnessError> {
        let m = read_metrics(path)?;
        let req = |name: &str| -> Result<Vec<f64>, HarnessError> {
            m.column(name)
                .into_iter()
                .enumerate()
                .map(|(i, v)| {
                    v.ok_or_else(|| HarnessError::Input(format!("{}: row {} has no {name}", path.display(), i + 1)))
                })
                .collect()
        };
        Ok(Series {
            label: label.to_string(),
            epoch: req("epoch")?,
            train_loss: req("train_loss")?,
            test_loss: req("test_loss")?,
            accuracy: m.column("test_accuracy"),
        })
    }
}

/// `[lo, hi]` covering `values`, widened when degenerate.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + hi.abs()) {
        let pad = if hi == 0.0 { 0.5 } else { 0.1 * hi.abs() };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// About five round-numbered ticks inside `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 4.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn label(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Panel {
    left: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Panel {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * PANEL_W
    }

    fn py(&self, y: f64) -> f64 {
        TOP + PANEL_H - (y - self.y.0) / (self.y.1 - self.y.0) * PANEL_H
    }

    fn axes(&self, svg: &mut String, title: &str, ylabel: &str) {
        let (l, b) = (self.left, TOP + PANEL_H);
        let _ = writeln!(
            svg,
            r##"<rect x="{l:.2}" y="{TOP:.2}" width="{PANEL_W:.2}" height="{PANEL_H:.2}" fill="none" stroke="#333"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
            l + PANEL_W / 2.0,
            TOP - 12.0,
            escape(title)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">epoch</text>"#,
            l + PANEL_W / 2.0,
            b + 38.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
            l - 52.0,
            TOP + PANEL_H / 2.0,
            l - 52.0,
            TOP + PANEL_H / 2.0,
            escape(ylabel)
        );
        for t in ticks(self.x.0, self.x.1) {
            let x = self.px(t);
            let _ = writeln!(
                svg,
                r##"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"##,
                b + 5.0,
                b + 18.0,
                label(t)
            );
        }
        for t in ticks(self.y.0, self.y.1) {
            let y = self.py(t);
            let _ = writeln!(
                svg,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{l:.2}" y2="{y:.2}" stroke="#333"/><line x1="{l:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"##,
                l - 5.0,
                l + PANEL_W,
                l - 8.0,
                y + 4.0,
                label(t)
            );
        }
    }

    fn curve(&self, svg: &mut String, xs: &[f64], ys: &[Option<f64>], color: &str, dashed: bool) {
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(ys)
            .filter_map(|(&x, y)| y.filter(|v| v.is_finite()).map(|y| (self.px(x), self.py(y))))
            .collect();
        if pts.is_empty() {
            return;
        }
        let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
        if pts.len() == 1 {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, pts[0].0, pts[0].1);
            return;
        }
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            path.join(" ")
        );
    }
}

/// Loss panel (solid train, dashed test) and test-accuracy panel, one color per series.
pub fn render_svg(series: &[Series]) -> String {
    let x = range(series.iter().flat_map(|s| s.epoch.iter().copied()));
    let loss_y = range(
        series
            .iter()
            .flat_map(|s| s.train_loss.iter().chain(&s.test_loss).copied()),
    );
    let has_acc = series.iter().any(|s| s.accuracy.iter().any(Option::is_some));
    let acc_y = if has_acc {
        range(series.iter().flat_map(|s| s.accuracy.iter().flatten().map(|a| 100.0 * a)))
    } else {
        (0.0, 100.0)
    };
    let loss = Panel { left: LEFTS[0], x, y: loss_y };
    let acc = Panel { left: LEFTS[1], x, y: acc_y };

    let legend_top = TOP + PANEL_H + 62.0;
    let height = legend_top + 16.0 * series.len() as f64 + 8.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    loss.axes(&mut svg, "loss (solid: train, dashed: test)", "loss");
    acc.axes(&mut svg, "test accuracy", "accuracy (%)");
    if !has_acc {
        let _ = writeln!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12" fill="#888">no class targets</text>"##,
            LEFTS[1] + PANEL_W / 2.0,
            TOP + PANEL_H / 2.0
        );
    }
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let train: Vec<Option<f64>> = s.train_loss.iter().map(|&v| Some(v)).collect();
        let test: Vec<Option<f64>> = s.test_loss.iter().map(|&v| Some(v)).collect();
        let pct: Vec<Option<f64>> = s.accuracy.iter().map(|a| a.map(|a| 100.0 * a)).collect();
        loss.curve(&mut svg, &s.epoch, &train, color, false);
        loss.curve(&mut svg, &s.epoch, &test, color, true);
        acc.curve(&mut svg, &s.epoch, &pct, color, false);
        let ly = legend_top + 16.0 * i as f64;
        let lx = LEFTS[0] + 10.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="3"/><text x="{:.2}" y="{ly:.2}" font-size="12">{}</text>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0,
            lx + 26.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
