//! Dense-grid defect oracle for dimensions 1 and 2.
//!
//! Everything here is deliberately self-contained: distances, hulls, and
//! candidate generation are reimplemented with plain loops so the oracle
//! shares no code path with the sampled estimator it cross-checks. Cells
//! whose best possible ratio provably cannot beat the running maximum are
//! skipped; the skip never changes the result.

use crate::error::ParaconvexityError;
use crate::exec;
use crate::geom::{Point, PointCloud};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

/// Spacing of the q-grid relative to the sweep resolution.
const Q_REFINE: f64 = 6.0;
/// Hard cap on q evaluations before the oracle gives up.
const EVAL_BUDGET: u64 = 2_000_000_000;

/// The exact (centers, radii) grids the oracle sweeps at this resolution:
/// centers step `resolution` over the bounding box inflated by the diameter,
/// radii arithmetic from `resolution` up to twice the diameter.
pub fn oracle_grids(cloud: &PointCloud, resolution: f64) -> (Vec<Point>, Vec<f64>) {
    let dim = cloud.dim();
    let diam = cloud.diameter();
    let (lo, hi) = cloud.bounding_box();
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for a in 0..dim {
        let from = lo[a] - diam;
        let to = hi[a] + diam;
        let steps = ((to - from) / resolution).ceil().max(1.0) as usize;
        axes.push(
            (0..=steps)
                .map(|k| from + (to - from) * k as f64 / steps as f64)
                .collect(),
        );
    }
    let mut centers = Vec::new();
    match dim {
        1 => {
            for &x in &axes[0] {
                centers.push(Point::from_vec(vec![x]));
            }
        }
        _ => {
            for &x in &axes[0] {
                for &y in &axes[1] {
                    centers.push(Point::from_vec(vec![x, y]));
                }
            }
        }
    }
    let r_count = ((2.0 * diam) / resolution).floor().max(1.0) as usize;
    let radii: Vec<f64> = (1..=r_count).map(|k| k as f64 * resolution).collect();
    (centers, radii)
}

/// Exhaustive sweep estimate of the defect.
pub fn oracle_defect(cloud: &PointCloud, resolution: f64) -> Result<f64, ParaconvexityError> {
    oracle_impl(cloud, resolution, cfg!(feature = "parallel"))
}

/// Sequential variant of [`oracle_defect`], kept public for the benches.
pub fn oracle_defect_seq(cloud: &PointCloud, resolution: f64) -> Result<f64, ParaconvexityError> {
    oracle_impl(cloud, resolution, false)
}

fn oracle_impl(
    cloud: &PointCloud,
    resolution: f64,
    parallel: bool,
) -> Result<f64, ParaconvexityError> {
    let dim = cloud.dim();
    if dim > 2 {
        return Err(ParaconvexityError::UnsupportedDimension(dim));
    }
    if !(resolution > 0.0) {
        return Err(ParaconvexityError::EmptyGrid);
    }
    let diam = cloud.diameter();
    if diam <= 0.0 {
        return Ok(0.0);
    }
    let (centers, radii) = oracle_grids(cloud, resolution);
    let qstep = resolution / Q_REFINE;
    let pts: Vec<&[f64]> = cloud.points().iter().map(|p| p.coords()).collect();

    let best_bits = AtomicU64::new(0.0f64.to_bits());
    let evals = AtomicU64::new(0);
    let over_budget = AtomicBool::new(false);

    #[derive(PartialEq)]
    struct R(f64);
    impl Eq for R {}
    impl PartialOrd for R {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for R {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0)
        }
    }

    let cells = centers.len() * radii.len();
    let eval = |i: usize| -> Option<R> {
        if over_budget.load(Ordering::Relaxed) {
            return None;
        }
        let center = centers[i / radii.len()].coords();
        let radius = radii[i % radii.len()];
        let ratio = eval_cell(
            &pts,
            dim,
            center,
            radius,
            qstep,
            &best_bits,
            &evals,
            &over_budget,
        )?;
        let bits = ratio.to_bits();
        best_bits.fetch_max(bits, Ordering::Relaxed);
        Some(R(ratio))
    };

    let best = if parallel {
        exec::max_indexed(cells, eval)
    } else {
        exec::max_indexed_seq(cells, eval)
    };
    let partial = best.map(|r| r.0).unwrap_or(0.0);
    if over_budget.load(Ordering::Relaxed) {
        return Err(ParaconvexityError::BudgetExceeded { partial });
    }
    Ok(partial)
}

#[allow(clippy::too_many_arguments)]
fn eval_cell(
    pts: &[&[f64]],
    dim: usize,
    center: &[f64],
    radius: f64,
    qstep: f64,
    best_bits: &AtomicU64,
    evals: &AtomicU64,
    over_budget: &AtomicBool,
) -> Option<f64> {
    let dist2 = |a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for (x, y) in a.iter().zip(b) {
            s += (x - y) * (x - y);
        }
        s
    };
    let d_pc = pts
        .iter()
        .map(|p| dist2(center, p))
        .fold(f64::INFINITY, f64::min)
        .sqrt();
    if !(d_pc < radius) {
        return None;
    }
    let inside: Vec<&[f64]> = pts
        .iter()
        .filter(|p| dist2(center, p) < radius * radius)
        .cloned()
        .collect();
    if inside.len() < 2 {
        return Some(0.0);
    }
    // Upper bound on d(q, inside) over conv(inside): half the spread in 1D,
    // Jung's circumradius bound diam/sqrt(3) in 2D. Cells that cannot beat
    // the running best are skipped.
    let mut s_diam2 = 0.0f64;
    for i in 0..inside.len() {
        for j in i + 1..inside.len() {
            s_diam2 = s_diam2.max(dist2(inside[i], inside[j]));
        }
    }
    let bound = if dim == 1 {
        s_diam2.sqrt() / 2.0
    } else {
        s_diam2.sqrt() / 3.0f64.sqrt()
    };
    let best_now = f64::from_bits(best_bits.load(Ordering::Relaxed));
    if bound / radius <= best_now {
        return Some(0.0);
    }

    let d_to_cloud = |q: &[f64]| -> f64 {
        pts.iter()
            .map(|p| dist2(q, p))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    };

    let mut spent = 0u64;
    let mut max_d = 0.0f64;
    match dim {
        1 => {
            let lo = inside.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = inside
                .iter()
                .map(|p| p[0])
                .fold(f64::NEG_INFINITY, f64::max);
            let m = ((hi - lo) / qstep).ceil().max(1.0) as usize;
            for k in 0..=m {
                let q = [lo + (hi - lo) * k as f64 / m as f64];
                max_d = max_d.max(d_to_cloud(&q));
            }
            spent += m as u64 + 1;
        }
        _ => {
            let hull = jarvis_hull(&inside);
            if hull.len() == 2 {
                spent += sample_segment(hull[0], hull[1], qstep, &d_to_cloud, &mut max_d);
            } else {
                for t in 1..hull.len() - 1 {
                    spent += sample_triangle(
                        hull[0],
                        hull[t],
                        hull[t + 1],
                        qstep,
                        &d_to_cloud,
                        &mut max_d,
                    );
                }
            }
        }
    }
    if evals.fetch_add(spent, Ordering::Relaxed) + spent > EVAL_BUDGET {
        over_budget.store(true, Ordering::Relaxed);
    }
    Some(max_d / radius)
}

fn sample_segment(
    a: &[f64],
    b: &[f64],
    qstep: f64,
    d: &impl Fn(&[f64]) -> f64,
    max_d: &mut f64,
) -> u64 {
    let len = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let m = (len / qstep).ceil().max(1.0) as usize;
    for k in 0..=m {
        let t = k as f64 / m as f64;
        let q = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        *max_d = max_d.max(d(&q));
    }
    m as u64 + 1
}

fn sample_triangle(
    a: &[f64],
    b: &[f64],
    c: &[f64],
    qstep: f64,
    d: &impl Fn(&[f64]) -> f64,
    max_d: &mut f64,
) -> u64 {
    let e = |p: &[f64], q: &[f64]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    let longest = e(a, b).max(e(a, c)).max(e(b, c));
    let m = (longest / qstep).ceil().clamp(1.0, 4000.0) as usize;
    let mut n = 0u64;
    for i in 0..=m {
        for j in 0..=(m - i) {
            let s = i as f64 / m as f64;
            let t = j as f64 / m as f64;
            let q = [
                a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]),
                a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1]),
            ];
            *max_d = max_d.max(d(&q));
            n += 1;
        }
    }
    n
}

/// Gift-wrapping hull, counterclockwise; collinear inputs yield the two
/// extreme endpoints.
fn jarvis_hull<'a>(pts: &[&'a [f64]]) -> Vec<&'a [f64]> {
    debug_assert!(pts.len() >= 2);
    let cross = |o: &[f64], a: &[f64], b: &[f64]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let dist2 = |a: &[f64], b: &[f64]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);

    let mut start = 0;
    for (i, p) in pts.iter().enumerate() {
        if (p[0], p[1]) < (pts[start][0], pts[start][1]) {
            start = i;
        }
    }
    let mut hull: Vec<usize> = Vec::new();
    let mut on = start;
    loop {
        hull.push(on);
        let mut next = (on + 1) % pts.len();
        for cand in 0..pts.len() {
            if cand == on {
                continue;
            }
            let c = cross(pts[on], pts[next], pts[cand]);
            if c < -1e-18
                || (c.abs() <= 1e-18 && dist2(pts[on], pts[cand]) > dist2(pts[on], pts[next]))
            {
                next = cand;
            }
        }
        on = next;
        if on == start || hull.len() > pts.len() {
            break;
        }
    }
    hull.into_iter().map(|i| pts[i]).collect()
}
