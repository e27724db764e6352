//! Paraconvexity defect estimation.
//!
//! The defect of a finite set `P` is the supremum of `d(q, P) / r` over
//! admissible triples: a center `p` with `d(p, P) < r`, a radius `r`, and a
//! point `q` in the convex hull of the open-ball intersection `B_r(p) ∩ P`.
//! A closed convex set has defect 0; any set in Euclidean space has defect
//! at most 1. The estimator sweeps a grid of (center, radius) cells, samples
//! the intersection hull (vertices, pair midpoints, random combinations,
//! projected-gradient ascent), and refines around the best cell. Estimates
//! are one-sided: the report is a sampled lower bound for the true sup.

pub mod oracle;

pub use oracle::{oracle_defect, oracle_defect_seq, oracle_grids};

use crate::error::ParaconvexityError;
use crate::exec;
use crate::geom::{
    self, convex_hull, distance_to_cloud, min_norm_point, Point, PointCloud, TOL_GEO,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// How the hull of each admissible intersection is sampled for the inner
/// maximization of `d(q, P)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HullSampling {
    pub random_samples: usize,
    pub ascent_steps: usize,
    pub seed: u64,
}

impl Default for HullSampling {
    fn default() -> Self {
        HullSampling {
            random_samples: 24,
            ascent_steps: 20,
            seed: 0,
        }
    }
}

/// Search grids for [`defect`]: explicit centers and radii plus the hull
/// sampling policy and the number of local refinement rounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefectGrids {
    pub centers: Vec<Point>,
    pub radii: Vec<f64>,
    pub sampling: HullSampling,
    pub refine_rounds: usize,
}

/// Budget knobs for [`default_grids`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridBudget {
    pub centers_per_axis: usize,
    pub radii_count: usize,
    pub refine_rounds: usize,
    pub sampling: HullSampling,
}

impl Default for GridBudget {
    fn default() -> Self {
        GridBudget {
            centers_per_axis: 9,
            radii_count: 12,
            refine_rounds: 2,
            sampling: HullSampling::default(),
        }
    }
}

impl GridBudget {
    /// Small budget for advisory checks inside the selection engine.
    pub fn coarse() -> Self {
        GridBudget {
            centers_per_axis: 5,
            radii_count: 6,
            refine_rounds: 0,
            sampling: HullSampling {
                random_samples: 8,
                ascent_steps: 8,
                seed: 0,
            },
        }
    }
}

/// Default sweep grids: centers on the bounding box inflated by the diameter,
/// radii geometric between `max(min_gap / 2, diameter / 4)` and `2 * diameter`.
///
/// The radius floor keeps the sweep above the sampling scale of the cloud:
/// below half the minimum pairwise gap every two-point midpoint drives the
/// ratio toward 1, which measures the discretization rather than the set.
pub fn default_grids(cloud: &PointCloud, budget: &GridBudget) -> DefectGrids {
    let dim = cloud.dim();
    let diam = cloud.diameter();
    let (lo, hi) = cloud.bounding_box();
    let n = budget.centers_per_axis.max(2);

    let mut centers = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let coords: Vec<f64> = (0..dim)
            .map(|a| {
                let span_lo = lo[a] - diam;
                let span_hi = hi[a] + diam;
                span_lo + (span_hi - span_lo) * idx[a] as f64 / (n - 1) as f64
            })
            .collect();
        centers.push(Point::from_vec(coords));
        let mut axis = 0;
        loop {
            if axis == dim {
                break;
            }
            idx[axis] += 1;
            if idx[axis] < n {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
        if axis == dim {
            break;
        }
    }

    let radii = if diam <= 0.0 {
        vec![1.0]
    } else {
        let r_min = (cloud.min_pairwise_gap() / 2.0).max(diam / 4.0);
        let r_max = 2.0 * diam;
        geometric_grid(r_min, r_max, budget.radii_count.max(2))
    };

    DefectGrids {
        centers,
        radii,
        sampling: budget.sampling.clone(),
        refine_rounds: budget.refine_rounds,
    }
}

fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
    (0..count).map(|k| lo * ratio.powi(k as i32)).collect()
}

/// Defect estimate with the maximizing witness triple.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParaconvexityReport {
    /// Sampled lower estimate of the true defect.
    pub alpha_hat: f64,
    pub witness_center: Point,
    pub witness_radius: f64,
    pub witness_hull_point: Point,
    pub search_resolution: String,
}

impl ParaconvexityReport {
    /// Recompute the witness ratio from scratch through the geometry layer.
    pub fn replay_ratio(&self, cloud: &PointCloud) -> Result<f64, ParaconvexityError> {
        let d = distance_to_cloud(&self.witness_hull_point, cloud)?;
        Ok(d / self.witness_radius)
    }
}

/// Radius-resolved defect profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParaconvexityProfile {
    pub radii: Vec<f64>,
    pub h_hat: Vec<f64>,
}

impl ParaconvexityProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,h_hat\n");
        for (r, h) in self.radii.iter().zip(&self.h_hat) {
            out.push_str(&format!("{r},{h}\n"));
        }
        out
    }
}

/// Decision form of the defect estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaCheck {
    pub alpha: f64,
    pub holds: bool,
    pub witness: Option<ParaconvexityReport>,
}

// A sweep candidate with a total order so parallel max-reduction is
// schedule-independent; ties break lexicographically on the witness.
#[derive(Debug, Clone)]
struct Candidate {
    ratio: f64,
    center: Vec<f64>,
    radius: f64,
    hull_point: Vec<f64>,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.ratio
            .total_cmp(&other.ratio)
            .then_with(|| lex(&self.center, &other.center))
            .then_with(|| self.radius.total_cmp(&other.radius))
            .then_with(|| lex(&self.hull_point, &other.hull_point))
    }
}

fn lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let c = x.total_cmp(y);
        if c != std::cmp::Ordering::Equal {
            return c;
        }
    }
    a.len().cmp(&b.len())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

// Seed the per-cell generator from the cell content (not its index), so the
// draw is identical however the grid is assembled or scheduled.
fn cell_seed(seed: u64, center: &[f64], radius: f64) -> u64 {
    let mut h = splitmix64(seed ^ 0x853c49e6748fea9b);
    for c in center {
        h = splitmix64(h ^ c.to_bits());
    }
    splitmix64(h ^ radius.to_bits())
}

/// Estimate the defect of `cloud` over the given grids.
pub fn defect(
    cloud: &PointCloud,
    grids: &DefectGrids,
) -> Result<ParaconvexityReport, ParaconvexityError> {
    defect_impl(cloud, grids, true, cfg!(feature = "parallel"))
}

/// Sequential variant of [`defect`]; the code path used when the `parallel`
/// feature is off, kept public so the benches can compare the two.
pub fn defect_seq(
    cloud: &PointCloud,
    grids: &DefectGrids,
) -> Result<ParaconvexityReport, ParaconvexityError> {
    defect_impl(cloud, grids, true, false)
}

fn defect_impl(
    cloud: &PointCloud,
    grids: &DefectGrids,
    refine_radii: bool,
    parallel: bool,
) -> Result<ParaconvexityReport, ParaconvexityError> {
    if grids.centers.is_empty() || grids.radii.is_empty() {
        return Err(ParaconvexityError::EmptyGrid);
    }
    for c in &grids.centers {
        if c.dim() != cloud.dim() {
            return Err(ParaconvexityError::Geom(
                crate::error::GeomError::DimensionMismatch {
                    expected: cloud.dim(),
                    got: c.dim(),
                },
            ));
        }
    }
    let r_floor = grids
        .radii
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
        .max(0.0);

    let mut best = sweep(cloud, &grids.centers, &grids.radii, &grids.sampling, parallel)
        .ok_or(ParaconvexityError::NoAdmissibleCell)?;

    // Local refinement: shrink a center box around the best cell and, when
    // allowed, push radii toward the admissibility edge d(p, P) from above,
    // never below the caller's radius floor.
    let mut spacing = center_spacing(&grids.centers);
    for _ in 0..grids.refine_rounds {
        let centers = refine_centers(&best.center, spacing);
        let radii = if refine_radii {
            refine_radii_around(cloud, &best, r_floor)
        } else {
            vec![best.radius]
        };
        if let Some(cand) = sweep(cloud, &centers, &radii, &grids.sampling, parallel) {
            if cand > best {
                best = cand;
            }
        }
        spacing *= 0.2;
    }

    let resolution = format!(
        "centers {} over inflated bbox; radii {} in [{:.6e}, {:.6e}]; \
         q: hull vertices + pair midpoints + {} random + {} ascent steps; \
         {} refine rounds; seed {}; sampled lower estimate",
        grids.centers.len(),
        grids.radii.len(),
        grids.radii.iter().cloned().fold(f64::INFINITY, f64::min),
        grids.radii.iter().cloned().fold(0.0, f64::max),
        grids.sampling.random_samples,
        grids.sampling.ascent_steps,
        grids.refine_rounds,
        grids.sampling.seed,
    );

    Ok(ParaconvexityReport {
        alpha_hat: best.ratio,
        witness_center: Point::from_vec(best.center),
        witness_radius: best.radius,
        witness_hull_point: Point::from_vec(best.hull_point),
        search_resolution: resolution,
    })
}

fn center_spacing(centers: &[Point]) -> f64 {
    if centers.len() < 2 {
        return 1.0;
    }
    let mut s = f64::INFINITY;
    let first = &centers[0];
    for c in centers.iter().skip(1) {
        let d = first.dist(c);
        if d > 0.0 {
            s = s.min(d);
        }
    }
    if s.is_finite() {
        s
    } else {
        1.0
    }
}

fn refine_centers(around: &[f64], halfwidth: f64) -> Vec<Point> {
    let dim = around.len();
    let per_axis = 5usize;
    let mut out = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let coords: Vec<f64> = (0..dim)
            .map(|a| {
                around[a] - halfwidth
                    + 2.0 * halfwidth * idx[a] as f64 / (per_axis - 1) as f64
            })
            .collect();
        out.push(Point::from_vec(coords));
        let mut axis = 0;
        loop {
            if axis == dim {
                break;
            }
            idx[axis] += 1;
            if idx[axis] < per_axis {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
        if axis == dim {
            break;
        }
    }
    out
}

fn refine_radii_around(cloud: &PointCloud, best: &Candidate, r_floor: f64) -> Vec<f64> {
    let base = distance_to_cloud(&Point::from_vec(best.center.clone()), cloud).unwrap_or(0.0);
    let mut out = vec![best.radius];
    for f in [0.003, 0.01, 0.03, 0.08, 0.2, 0.5] {
        let r = (base * (1.0 + f)).max(r_floor);
        if r > 0.0 {
            out.push(r);
        }
        out.push((best.radius * (1.0 + f)).max(r_floor));
        let down = (best.radius / (1.0 + f)).max(r_floor);
        if down > base {
            out.push(down);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn sweep(
    cloud: &PointCloud,
    centers: &[Point],
    radii: &[f64],
    sampling: &HullSampling,
    parallel: bool,
) -> Option<Candidate> {
    let cells = centers.len() * radii.len();
    let eval = |i: usize| {
        let center = &centers[i / radii.len()];
        let radius = radii[i % radii.len()];
        eval_cell(cloud, center, radius, sampling)
    };
    if parallel {
        exec::max_indexed(cells, eval)
    } else {
        exec::max_indexed_seq(cells, eval)
    }
}

fn eval_cell(
    cloud: &PointCloud,
    center: &Point,
    radius: f64,
    sampling: &HullSampling,
) -> Option<Candidate> {
    if !(radius > 0.0) {
        return None;
    }
    let d_pc = distance_to_cloud(center, cloud).ok()?;
    if !(d_pc < radius) {
        return None;
    }
    let inside: Vec<Point> = cloud
        .points()
        .iter()
        .filter(|p| center.dist(p) < radius)
        .cloned()
        .collect();
    debug_assert!(!inside.is_empty());
    let dim = cloud.dim();
    // In three dimensions the extreme-point filter is quadratic; past a
    // size threshold the raw intersection spans the same hull and the
    // projection machinery does not need minimality.
    let verts: Vec<Point> = if dim >= 3 && inside.len() > 48 {
        inside
    } else {
        convex_hull(&PointCloud::new(inside).ok()?)
            .vertices()
            .to_vec()
    };
    let verts = &verts[..];

    let dist_to_cloud = |q: &[f64]| -> f64 {
        cloud
            .points()
            .iter()
            .map(|p| geom::dist(q, p.coords()))
            .fold(f64::INFINITY, f64::min)
    };

    let mut best_q: Vec<f64> = verts[0].coords().to_vec();
    let mut best_d = dist_to_cloud(&best_q);

    let k = verts.len();
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for v in verts.iter().skip(1) {
        candidates.push(v.coords().to_vec());
    }
    if k >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(
            sampling.seed,
            center.coords(),
            radius,
        ));
        // Pair midpoints catch the canonical two-point witnesses exactly.
        let midpoint = |i: usize, j: usize| -> Vec<f64> {
            verts[i]
                .coords()
                .iter()
                .zip(verts[j].coords())
                .map(|(a, b)| 0.5 * (a + b))
                .collect()
        };
        let pair_cap = 256usize;
        if k * (k - 1) / 2 <= pair_cap {
            for i in 0..k {
                for j in i + 1..k {
                    candidates.push(midpoint(i, j));
                }
            }
        } else {
            for _ in 0..pair_cap {
                let i = rng.gen_range(0..k);
                let j = rng.gen_range(0..k);
                if i != j {
                    candidates.push(midpoint(i, j));
                }
            }
        }
        // Random interior samples via normalized exponentials.
        for _ in 0..sampling.random_samples {
            let mut weights: Vec<f64> = (0..k)
                .map(|_| -(rng.gen::<f64>().max(1e-12)).ln())
                .collect();
            let sum: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= sum;
            }
            let mut q = vec![0.0; dim];
            for (w, v) in weights.iter().zip(verts) {
                for (qc, vc) in q.iter_mut().zip(v.coords()) {
                    *qc += w * vc;
                }
            }
            candidates.push(q);
        }
    }
    for q in candidates {
        let d = dist_to_cloud(&q);
        if d > best_d {
            best_d = d;
            best_q = q;
        }
    }

    // Projected-gradient ascent on d(., P) inside the hull: step away from
    // the nearest cloud point, project back, keep improvements.
    if k >= 2 && sampling.ascent_steps > 0 {
        let vert_slices: Vec<&[f64]> = verts.iter().map(|v| v.coords()).collect();
        let mut q = best_q.clone();
        let mut dq = best_d;
        let mut eta = radius * 0.5;
        for _ in 0..sampling.ascent_steps {
            if dq <= 0.0 || eta < 1e-7 * radius {
                break;
            }
            let nearest = cloud
                .points()
                .iter()
                .min_by(|a, b| {
                    geom::dist(&q, a.coords()).total_cmp(&geom::dist(&q, b.coords()))
                })
                .expect("nonempty cloud");
            let mut cand: Vec<f64> = q.clone();
            for (c, (qc, nc)) in cand.iter_mut().zip(q.iter().zip(nearest.coords())) {
                *c = qc + eta * (qc - nc) / dq;
            }
            let proj = min_norm_point(&cand, &vert_slices, TOL_GEO * 0.5);
            let d = dist_to_cloud(&proj.point);
            if d > dq {
                q = proj.point;
                dq = d;
                eta *= 1.6;
            } else {
                eta *= 0.5;
            }
        }
        if dq > best_d {
            best_d = dq;
            best_q = q;
        }
    }

    Some(Candidate {
        ratio: best_d / radius,
        center: center.coords().to_vec(),
        radius,
        hull_point: best_q,
    })
}

/// Radius-resolved defect: for each grid radius, the defect restricted to
/// that single radius (center refinement only, radii held fixed).
pub fn profile(
    cloud: &PointCloud,
    radii_grid: &[f64],
    budget: &GridBudget,
) -> Result<ParaconvexityProfile, ParaconvexityError> {
    if radii_grid.is_empty() {
        return Err(ParaconvexityError::EmptyGrid);
    }
    let base = default_grids(cloud, budget);
    let mut h_hat = Vec::with_capacity(radii_grid.len());
    for &r in radii_grid {
        let grids = DefectGrids {
            centers: base.centers.clone(),
            radii: vec![r],
            sampling: base.sampling.clone(),
            refine_rounds: base.refine_rounds,
        };
        let value = match defect_impl(cloud, &grids, false, cfg!(feature = "parallel")) {
            Ok(rep) => rep.alpha_hat,
            Err(ParaconvexityError::NoAdmissibleCell) => 0.0,
            Err(e) => return Err(e),
        };
        h_hat.push(value);
    }
    Ok(ParaconvexityProfile {
        radii: radii_grid.to_vec(),
        h_hat,
    })
}

/// Decide `alpha`-paraconvexity over the grids; on failure the witness
/// reproduces a ratio above `alpha`.
pub fn is_alpha_paraconvex(
    cloud: &PointCloud,
    alpha: f64,
    grids: &DefectGrids,
) -> Result<AlphaCheck, ParaconvexityError> {
    let report = defect(cloud, grids)?;
    if report.alpha_hat <= alpha + TOL_GEO {
        Ok(AlphaCheck {
            alpha,
            holds: true,
            witness: None,
        })
    } else {
        Ok(AlphaCheck {
            alpha,
            holds: false,
            witness: Some(report),
        })
    }
}

/// Witness soundness check used by tests and reports: the witness must be
/// admissible and its hull point must lie in the intersection hull.
pub fn witness_is_sound(cloud: &PointCloud, report: &ParaconvexityReport) -> bool {
    let center_ok = distance_to_cloud(&report.witness_center, cloud)
        .map(|d| d < report.witness_radius)
        .unwrap_or(false);
    if !center_ok {
        return false;
    }
    let ball = match crate::geom::Ball::new(report.witness_center.clone(), report.witness_radius)
    {
        Ok(b) => b,
        Err(_) => return false,
    };
    let inside = match crate::geom::ball_intersect(cloud, &ball) {
        Ok(Some(c)) => c,
        _ => return false,
    };
    let hull = convex_hull(&inside);
    let verts: Vec<&[f64]> = hull.vertices().iter().map(|v| v.coords()).collect();
    let proj = min_norm_point(report.witness_hull_point.coords(), &verts, TOL_GEO * 0.5);
    if proj.distance > 1e-7 {
        return false;
    }
    let ratio = match report.replay_ratio(cloud) {
        Ok(r) => r,
        Err(_) => return false,
    };
    ratio >= report.alpha_hat - TOL_GEO
}
