//! Exact k-nearest-neighbour search (Euclidean) within one point set.
//!
//! Points are clustered around about `sqrt(n)` pivots and each cluster is
//! sorted by distance to its pivot. A query visits clusters nearest pivot
//! first and scans only the annulus the triangle inequality allows. Bounds
//! carry a relative safety margin, so pruning never drops a point that a
//! brute-force scan would keep; equal distances order by index.

use crate::matrix::Matrix;

/// Relative slack on triangle-inequality bounds, far above the rounding
/// error of a distance over any realistic feature count.
const MARGIN: f64 = 1e-9;

struct Cluster {
    pivot: usize,
    radius: f64,
    /// Distances of the members to the pivot, ascending.
    dist: Vec<f64>,
    /// Point indices of the members, in the same order.
    index: Vec<usize>,
    /// Member coordinates, row-major in the same order, so scans are
    /// sequential in memory.
    coords: Vec<f64>,
}

/// Squared Euclidean distance, with four interleaved partial sums so the
/// loop is not bound by one addition chain. The summation order is fixed,
/// so results are reproducible.
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += (x - y) * (x - y);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// [`squared_distance`], or `None` once a partial sum exceeds `limit`. The
/// partial sums only grow, so `None` implies the full distance exceeds
/// `limit`; a returned value is bit-identical to [`squared_distance`].
fn distance_within(a: &[f64], b: &[f64], limit: f64) -> Option<f64> {
    const STRIDE: usize = 16;
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (c, (x, y)) in ca.zip(cb).enumerate() {
        for l in 0..4 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
        if (c + 1) % (STRIDE / 4) == 0 && (acc[0] + acc[1]) + (acc[2] + acc[3]) > limit {
            return None;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += (x - y) * (x - y);
    }
    Some((acc[0] + acc[1]) + (acc[2] + acc[3]) + tail)
}

/// Keeps the `k` smallest `(dist, index)` pairs, sorted.
fn offer(best: &mut Vec<(f64, usize)>, k: usize, dist: f64, j: usize) {
    if best.len() == k {
        let (wd, wj) = best[k - 1];
        if dist > wd || (dist == wd && j > wj) {
            return;
        }
    }
    let pos = best.partition_point(|&(b, i)| b < dist || (b == dist && i < j));
    best.insert(pos, (dist, j));
    best.truncate(k);
}

fn build_clusters(points: &Matrix) -> Vec<Cluster> {
    let n = points.nrows();
    let d = points.ncols();
    let m = ((n as f64).sqrt().ceil() as usize).clamp(1, n);
    let pivots: Vec<usize> = (0..m).map(|c| c * n / m).collect();
    let mut members: Vec<Vec<(f64, usize)>> = vec![Vec::new(); m];
    for i in 0..n {
        let row = points.row(i);
        let (c, d2) = pivots
            .iter()
            .enumerate()
            .map(|(c, &p)| (c, squared_distance(row, points.row(p))))
            .fold((0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
        members[c].push((d2.sqrt(), i));
    }
    pivots
        .into_iter()
        .zip(members)
        .map(|(pivot, mut mem)| {
            mem.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut coords = Vec::with_capacity(mem.len() * d);
            for &(_, i) in &mem {
                coords.extend_from_slice(points.row(i));
            }
            Cluster {
                pivot,
                radius: mem.last().map_or(0.0, |m| m.0),
                dist: mem.iter().map(|m| m.0).collect(),
                index: mem.iter().map(|m| m.1).collect(),
                coords,
            }
        })
        .collect()
}

/// For every row, the indices of its `k` nearest other rows, nearest first.
/// Equal distances order by index. Requires `k < points.nrows()`.
pub(crate) fn nearest_within(points: &Matrix, k: usize) -> Vec<Vec<usize>> {
    let n = points.nrows();
    let d = points.ncols();
    debug_assert!(k < n);
    if n == 0 || k == 0 {
        return vec![Vec::new(); n];
    }
    let clusters = build_clusters(points);
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(clusters.len());
    // radius of the current k-th candidate, padded
    let reach = |best: &Vec<(f64, usize)>, dqc: f64| {
        if best.len() < k {
            f64::INFINITY
        } else {
            let w = best[k - 1].0.sqrt();
            w + MARGIN * (1.0 + w + dqc)
        }
    };
    (0..n)
        .map(|q| {
            let row = points.row(q);
            order.clear();
            order.extend(
                clusters
                    .iter()
                    .enumerate()
                    .map(|(c, cl)| (squared_distance(row, points.row(cl.pivot)).sqrt(), c)),
            );
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            best.clear();
            for &(dqc, c) in &order {
                let cl = &clusters[c];
                if dqc - cl.radius > reach(&best, dqc) {
                    continue;
                }
                let w = reach(&best, dqc);
                let from = cl.dist.partition_point(|&dp| dp < dqc - w);
                for t in from..cl.dist.len() {
                    if cl.dist[t] - dqc > reach(&best, dqc) {
                        break;
                    }
                    let j = cl.index[t];
                    if j == q {
                        continue;
                    }
                    let limit = if best.len() < k {
                        f64::INFINITY
                    } else {
                        best[k - 1].0
                    };
                    if let Some(dist) = distance_within(row, &cl.coords[t * d..(t + 1) * d], limit)
                    {
                        offer(&mut best, k, dist, j);
                    }
                }
            }
            best.iter().map(|&(_, j)| j).collect()
        })
        .collect()
}
