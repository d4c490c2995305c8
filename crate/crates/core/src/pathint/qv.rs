use serde::Serialize;

use super::partition::PartitionSequence;
use crate::drivers::DriverPath;
use crate::error::Result;

/// Föllmer bracket along each partition level, evaluated at grid indices
/// `0..=anchor`. Between partition points the bracket is interpolated
/// linearly, so every level path is nondecreasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QVPath {
    pub anchor: usize,
    pub dt: f64,
    /// `levels[l][i]` is `[U]^{pi_l}` at grid index `i`.
    pub levels: Vec<Vec<f64>>,
    /// Finest-level path, used as the limit estimate.
    pub bracket: Vec<f64>,
    /// Finest-level partition points `<= anchor` (the anchor itself included).
    pub nodes: Vec<usize>,
    /// Bracket Lipschitz constant over node pairs at least one finest mesh apart.
    pub kappa_hat: f64,
}

impl QVPath {
    /// `[U]_t` at the anchor, per level.
    pub fn totals(&self) -> Vec<f64> {
        self.levels.iter().map(|l| *l.last().unwrap()).collect()
    }

    pub fn total(&self) -> f64 {
        *self.bracket.last().unwrap()
    }

    pub fn at(&self, i: usize) -> f64 {
        self.bracket[i]
    }

    /// Largest finest-level cell width in time units.
    pub fn finest_mesh(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0) as f64 * self.dt
    }
}

fn level_path(values: &[f64], parts: &PartitionSequence, level: usize, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k + 1];
    let mut acc = 0.0;
    for (a, b) in parts.cells(level, k) {
        let d = values[b] - values[a];
        let next = acc + d * d;
        let w = (b - a) as f64;
        for (i, o) in out.iter_mut().enumerate().take(b + 1).skip(a + 1) {
            *o = acc + (next - acc) * (i - a) as f64 / w;
        }
        acc = next;
    }
    out
}

/// Bracket of a sampled path given by raw values on a grid with step `dt`.
pub fn follmer_qv_values(values: &[f64], dt: f64, parts: &PartitionSequence, k: usize) -> Result<QVPath> {
    parts.check_anchor(k, values.len())?;
    let levels: Vec<Vec<f64>> = (0..parts.level_count()).map(|l| level_path(values, parts, l, k)).collect();
    let bracket = levels.last().unwrap().clone();
    let mut nodes: Vec<usize> = parts.finest().iter().copied().take_while(|&p| p < k).collect();
    nodes.push(k);
    let mut qv = QVPath { anchor: k, dt, levels, bracket, nodes, kappa_hat: 0.0 };
    qv.kappa_hat = bracket_lipschitz_sup_window(&qv, qv.finest_mesh());
    Ok(qv)
}

/// `[U]^pi_t` for every level at the grid time `t`.
pub fn follmer_qv(path: &DriverPath, parts: &PartitionSequence, t: f64) -> Result<QVPath> {
    let k = path.grid().index_of(t)?;
    follmer_qv_values(path.values(), path.grid().dt(), parts, k)
}

/// `sup ([U]_t - [U]_s) / (t - s)` over finest-level node pairs with `t - s`
/// at least one finest mesh.
pub fn bracket_lipschitz_sup(qv: &QVPath) -> f64 {
    qv.kappa_hat
}

/// As [`bracket_lipschitz_sup`] restricted to windows `t - s >= min_window`.
/// Exact over node pairs in `O(P log P)`: for each right end the best left end
/// is a tangent point of the lower convex hull of the admissible left nodes.
pub fn bracket_lipschitz_sup_window(qv: &QVPath, min_window: f64) -> f64 {
    let pts: Vec<(f64, f64)> = qv.nodes.iter().map(|&i| (i as f64 * qv.dt, qv.bracket[i])).collect();
    max_secant_slope(&pts, min_window)
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// `max (y_j - y_i) / (x_j - x_i)` over `x_j - x_i >= w` for points sorted by `x`.
/// Returns 0 when no pair qualifies.
pub(crate) fn max_secant_slope(pts: &[(f64, f64)], w: f64) -> f64 {
    let tol = 1e-12 * pts.last().map_or(1.0, |p| p.0.abs().max(1.0));
    let mut hull: Vec<(f64, f64)> = Vec::new();
    let mut next = 0;
    let mut best = f64::NEG_INFINITY;
    for &q in pts {
        while next < pts.len() && pts[next].0 <= q.0 - w + tol && pts[next].0 < q.0 {
            let p = pts[next];
            while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
            next += 1;
        }
        if hull.is_empty() {
            continue;
        }
        // first hull vertex whose outgoing edge is at least as steep as the secant to q
        let (mut lo, mut hi) = (0, hull.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if cross(hull[mid], hull[mid + 1], q) <= 0.0 {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let h = hull[lo];
        best = best.max((q.1 - h.1) / (q.0 - h.0));
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}
