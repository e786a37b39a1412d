//! Standalone SVG charts built from rect, polyline and text primitives.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;
const COLOURS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let (mut x0, mut x1) = bounds(xs);
        let (mut y0, mut y1) = bounds(ys);
        if x1 <= x0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 <= y0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        Frame { x0, x1, y0: y0 - pad, y1: y1 + pad }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (bx, by) = (LEFT, H - BOTTOM);
    let _ = writeln!(
        out,
        "<polyline points=\"{bx},{TOP} {bx},{by} {},{by}\" fill=\"none\" stroke=\"black\"/>",
        W - RIGHT
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = f.x0 + t * (f.x1 - f.x0);
        let yv = f.y0 + t * (f.y1 - f.y0);
        let (x, y) = (f.px(xv), f.py(yv));
        let _ = writeln!(out, "<polyline points=\"{x},{by} {x},{}\" stroke=\"black\"/>", by + 4.0);
        let _ = writeln!(out, "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{}</text>", by + 16.0, tick(xv));
        let _ = writeln!(out, "<polyline points=\"{},{y} {bx},{y}\" stroke=\"black\"/>", bx - 4.0);
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>", bx - 6.0, y + 4.0, tick(yv));
    }
    let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", (LEFT + W - RIGHT) / 2.0, H - 10.0, escape(xlabel));
    let _ = writeln!(
        out,
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>",
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 1e-3 && v.abs() < 1e5) {
        format!("{:.3}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn polyline(out: &mut String, f: &Frame, pts: &[(f64, f64)], colour: &str) {
    let coords: Vec<String> = pts
        .iter()
        .filter(|p| p.0.is_finite() && p.1.is_finite())
        .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
        .collect();
    let _ = writeln!(out, "<polyline points=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\"/>", coords.join(" "));
}

fn legend(out: &mut String, labels: &[&str]) {
    for (i, l) in labels.iter().enumerate() {
        let y = TOP + 8.0 + 14.0 * i as f64;
        let c = COLOURS[i % COLOURS.len()];
        let _ = writeln!(out, "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{c}\"/>", W - RIGHT - 150.0, y - 9.0);
        let _ = writeln!(out, "<text x=\"{}\" y=\"{y}\">{}</text>", W - RIGHT - 136.0, escape(l));
    }
}

pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let f = Frame::new(
        series.iter().flat_map(|s| s.points.iter().map(|p| p.0)),
        series.iter().flat_map(|s| s.points.iter().map(|p| p.1)),
    );
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, xlabel, ylabel);
    for (i, s) in series.iter().enumerate() {
        polyline(&mut out, &f, &s.points, COLOURS[i % COLOURS.len()]);
    }
    let labels: Vec<&str> = series.iter().map(|s| s.label.as_str()).collect();
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

/// Density-scaled histogram with an optional reference curve.
pub fn histogram(title: &str, xlabel: &str, xs: &[f64], bins: usize, reference: Option<&Series>) -> String {
    let (lo, mut hi) = bounds(xs.iter().copied());
    let lo = if lo.is_finite() { lo } else { 0.0 };
    if !(hi > lo) {
        hi = lo + 1.0;
    }
    let bins = bins.max(1);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in xs.iter().filter(|x| x.is_finite()) {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let n = xs.len().max(1) as f64;
    let dens: Vec<f64> = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    let ref_pts = reference.map(|r| r.points.clone()).unwrap_or_default();
    let f = Frame::new(
        [lo, hi].into_iter(),
        dens.iter().copied().chain(ref_pts.iter().map(|p| p.1)).chain([0.0]),
    );
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, xlabel, "density");
    for (k, d) in dens.iter().enumerate() {
        let x0 = f.px(lo + k as f64 * width);
        let x1 = f.px(lo + (k + 1) as f64 * width);
        let (ytop, ybase) = (f.py(*d), f.py(0.0));
        let _ = writeln!(
            out,
            "<rect x=\"{x0:.2}\" y=\"{ytop:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\" fill-opacity=\"0.6\" stroke=\"white\"/>",
            (x1 - x0).max(0.5),
            (ybase - ytop).max(0.0),
            COLOURS[0]
        );
    }
    let mut labels = vec!["sample"];
    if let Some(r) = reference {
        polyline(&mut out, &f, &r.points, COLOURS[1]);
        labels.push(&r.label);
    }
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_standalone() {
        let s = line_chart("a<b", "x", "y", &[Series { label: "m".into(), points: vec![(0.0, 1.0), (1.0, 2.0)] }]);
        assert!(s.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
        assert!(s.contains("a&lt;b") && s.trim_end().ends_with("</svg>"));
        assert!(!s.contains("href"));
        let h = histogram("h", "x", &[0.1, 0.2, 0.2, 0.9], 4, None);
        assert_eq!(h.matches("<rect").count(), 1 + 4 + 1);
    }

    #[test]
    fn degenerate_inputs_do_not_panic() {
        histogram("h", "x", &[], 10, None);
        histogram("h", "x", &[3.0; 5], 10, None);
        line_chart("l", "x", "y", &[Series { label: "one".into(), points: vec![(1.0, 1.0)] }]);
    }
}
