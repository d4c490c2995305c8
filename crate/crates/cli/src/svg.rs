//! Minimal SVG output: polylines and histograms with a bounding box.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 40.0;

fn bounds(pts: impl Iterator<Item = (f64, f64)>) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts.filter(|p| p.0.is_finite() && p.1.is_finite()) {
        b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if b.1 - b.0 == 0.0 {
        b.1 += 1.0;
    }
    if b.3 - b.2 == 0.0 {
        b.3 += 1.0;
    }
    b
}

fn frame(title: &str, b: (f64, f64, f64, f64), body: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n\
         <text x=\"{PAD}\" y=\"{}\" font-size=\"14\">{}</text>\n\
         <text x=\"{PAD}\" y=\"{}\" font-size=\"10\">x [{:.4e}, {:.4e}]  y [{:.4e}, {:.4e}]</text>\n{body}</svg>\n",
        W - 2.0 * PAD,
        H - 2.0 * PAD,
        PAD - 12.0,
        escape(title),
        H - 12.0,
        b.0,
        b.1,
        b.2,
        b.3
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn map(b: (f64, f64, f64, f64), x: f64, y: f64) -> (f64, f64) {
    (PAD + (x - b.0) / (b.1 - b.0) * (W - 2.0 * PAD), H - PAD - (y - b.2) / (b.3 - b.2) * (H - 2.0 * PAD))
}

/// One polyline per series.
pub fn line_plot(title: &str, series: &[Vec<(f64, f64)>]) -> String {
    let b = bounds(series.iter().flatten().copied());
    let mut body = String::new();
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| {
                let (u, v) = map(b, x, y);
                format!("{u:.2},{v:.2}")
            })
            .collect();
        let hue = (i * 67) % 360;
        let _ = writeln!(body, "<polyline fill=\"none\" stroke=\"hsl({hue},70%,40%)\" points=\"{}\"/>", pts.join(" "));
    }
    frame(title, b, &body)
}

pub fn histogram(title: &str, values: &[f64], bins: usize) -> String {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let (lo, hi) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &v| (a.0.min(v), a.1.max(v)));
    let bins = bins.max(1);
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (lo.min(0.0), lo.max(0.0) + 1.0) };
    let mut counts = vec![0usize; bins];
    for v in &finite {
        let i = (((v - lo) / (hi - lo)) * bins as f64) as usize;
        counts[i.min(bins - 1)] += 1;
    }
    let top = *counts.iter().max().unwrap_or(&1) as f64;
    let b = (lo, hi, 0.0, top.max(1.0));
    let mut body = String::new();
    let w = (hi - lo) / bins as f64;
    for (i, c) in counts.iter().enumerate() {
        let (x0, y0) = map(b, lo + i as f64 * w, *c as f64);
        let (x1, y1) = map(b, lo + (i + 1) as f64 * w, 0.0);
        let _ = writeln!(body, "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#4a7\"/>", x1 - x0, y1 - y0);
    }
    frame(title, b, &body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plots_are_well_formed() {
        let s = line_plot("a<b", &[vec![(0.0, 0.0), (1.0, 2.0)]]);
        assert!(s.starts_with("<svg") && s.contains("polyline") && s.contains("a&lt;b"));
        let h = histogram("m", &[1.0, 1.0, 2.0, f64::NAN], 4);
        assert_eq!(h.matches("<rect").count(), 5);
    }
}
