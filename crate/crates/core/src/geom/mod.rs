//! Euclidean primitives: points, finite clouds, open balls, polytope hulls,
//! and nearest-point projection.
//!
//! Everything is plain `f64` over arbitrary dimension `d >= 1`. The metric is
//! the Euclidean norm throughout. Tolerances: `TOL_GEO` for projection
//! stationarity, `TOL_HULL` for orientation/extreme-point tests.

mod project;

pub(crate) use project::min_norm_point;

use crate::error::GeomError;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Stationarity tolerance for nearest-point projections.
pub const TOL_GEO: f64 = 1e-9;
/// Tolerance for hull orientation and extreme-point tests.
pub const TOL_HULL: f64 = 1e-12;

/// A point of the ambient Euclidean space. Coordinates are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, GeomError> {
        if coords.is_empty() {
            return Err(GeomError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        Ok(Point { coords })
    }

    /// 1-dimensional convenience constructor.
    pub fn scalar(x: f64) -> Self {
        Point::new(vec![x]).expect("finite scalar")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dist(&self, other: &Point) -> f64 {
        dist(&self.coords, &other.coords)
    }

    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Point { coords }
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coords.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(d)?;
        Point::new(coords).map_err(D::Error::custom)
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A nonempty finite point set, the desk-scale stand-in for a closed set.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
    label: Option<String>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Result<Self, GeomError> {
        let first = points.first().ok_or(GeomError::EmptyCloud)?;
        let dim = first.dim();
        for p in &points {
            if p.dim() != dim {
                return Err(GeomError::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
        }
        Ok(PointCloud {
            points,
            label: None,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, GeomError> {
        let points = rows
            .into_iter()
            .map(Point::new)
            .collect::<Result<Vec<_>, _>>()?;
        PointCloud::new(points)
    }

    /// 1-dimensional convenience constructor.
    pub fn from_scalars(xs: &[f64]) -> Result<Self, GeomError> {
        PointCloud::new(xs.iter().map(|&x| Point::scalar(x)).collect())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Axis-aligned bounding box as (lower, upper) corners.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let dim = self.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in &self.points {
            for (i, &c) in p.coords().iter().enumerate() {
                lo[i] = lo[i].min(c);
                hi[i] = hi[i].max(c);
            }
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                d = d.max(self.points[i].dist(&self.points[j]));
            }
        }
        d
    }

    /// Minimum distance over pairs of distinct points (0 for a singleton).
    pub fn min_pairwise_gap(&self) -> f64 {
        let mut g = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                g = g.min(self.points[i].dist(&self.points[j]));
            }
        }
        if g.is_finite() {
            g
        } else {
            0.0
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CloudJson {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl Serialize for PointCloud {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CloudJson {
            dim: self.dim(),
            points: self.points.iter().map(|p| p.coords.clone()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PointCloud {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = CloudJson::deserialize(d)?;
        let cloud = PointCloud::from_rows(raw.points).map_err(D::Error::custom)?;
        if cloud.dim() != raw.dim {
            return Err(D::Error::custom(format!(
                "declared dim {} but points have dim {}",
                raw.dim,
                cloud.dim()
            )));
        }
        Ok(cloud)
    }
}

/// Open ball `{ y : |y - center| < radius }`.
#[derive(Debug, Clone, Serialize)]
pub struct Ball {
    center: Point,
    radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self, GeomError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GeomError::NonPositiveRadius(radius));
        }
        Ok(Ball { center, radius })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.center.dist(p) < self.radius
    }
}

/// A polytope given by its extreme points (minimal vertex representation).
#[derive(Debug, Clone, Serialize)]
pub struct ConvexBody {
    vertices: Vec<Point>,
}

impl ConvexBody {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }
}

/// Minimum Euclidean distance from `q` to the cloud; 0 exactly when `q` is a member.
pub fn distance_to_cloud(q: &Point, cloud: &PointCloud) -> Result<f64, GeomError> {
    if q.dim() != cloud.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: cloud.dim(),
            got: q.dim(),
        });
    }
    Ok(cloud
        .points()
        .iter()
        .map(|p| q.dist(p))
        .fold(f64::INFINITY, f64::min))
}

/// Points of the cloud strictly inside the open ball; `None` when the
/// intersection is empty (the caller decides how to treat it).
pub fn ball_intersect(cloud: &PointCloud, ball: &Ball) -> Result<Option<PointCloud>, GeomError> {
    if ball.center().dim() != cloud.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: cloud.dim(),
            got: ball.center().dim(),
        });
    }
    let hits: Vec<Point> = cloud
        .points()
        .iter()
        .filter(|p| ball.contains(p))
        .cloned()
        .collect();
    if hits.is_empty() {
        Ok(None)
    } else {
        Ok(Some(PointCloud::new(hits)?))
    }
}

/// Extreme points of `conv(cloud)`.
///
/// Dimensions 1 and 2 use direct extreme-point constructions; higher
/// dimensions fall back to a projection test (a point is kept exactly when it
/// is not within `TOL_HULL`-reach of the hull of the remaining points).
pub fn convex_hull(cloud: &PointCloud) -> ConvexBody {
    let mut pts: Vec<Point> = Vec::new();
    'outer: for p in cloud.points() {
        for q in &pts {
            if p.dist(q) <= TOL_HULL {
                continue 'outer;
            }
        }
        pts.push(p.clone());
    }
    if pts.len() == 1 {
        return ConvexBody { vertices: pts };
    }
    let vertices = match cloud.dim() {
        1 => hull_1d(&pts),
        2 => hull_2d(&pts),
        _ => hull_nd(pts),
    };
    ConvexBody { vertices }
}

fn hull_1d(pts: &[Point]) -> Vec<Point> {
    let mut lo = &pts[0];
    let mut hi = &pts[0];
    for p in pts {
        if p.coords()[0] < lo.coords()[0] {
            lo = p;
        }
        if p.coords()[0] > hi.coords()[0] {
            hi = p;
        }
    }
    if hi.coords()[0] - lo.coords()[0] <= TOL_HULL {
        vec![lo.clone()]
    } else {
        vec![lo.clone(), hi.clone()]
    }
}

fn cross2(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone chain; collinear boundary points are dropped so the output is
/// the set of extreme points only.
fn hull_2d(pts: &[Point]) -> Vec<Point> {
    let mut sorted: Vec<&Point> = pts.iter().collect();
    sorted.sort_by(|a, b| {
        a.coords()[0]
            .total_cmp(&b.coords()[0])
            .then(a.coords()[1].total_cmp(&b.coords()[1]))
    });
    if sorted.len() <= 2 {
        return sorted.into_iter().cloned().collect();
    }
    let turn_left = |chain: &[&Point], p: &Point| {
        let n = chain.len();
        cross2(chain[n - 2].coords(), chain[n - 1].coords(), p.coords()) > TOL_HULL
    };
    let mut lower: Vec<&Point> = Vec::new();
    for p in &sorted {
        while lower.len() >= 2 && !turn_left(&lower, p) {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<&Point> = Vec::new();
    for p in sorted.iter().rev() {
        while upper.len() >= 2 && !turn_left(&upper, p) {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.is_empty() {
        // Everything collinear; fall back to the two endpoints of the sort.
        return vec![sorted[0].clone(), sorted[sorted.len() - 1].clone()];
    }
    lower.into_iter().cloned().collect()
}

/// Keep a point exactly when it is not in the hull of the other survivors.
fn hull_nd(mut pts: Vec<Point>) -> Vec<Point> {
    let mut i = 0;
    while i < pts.len() && pts.len() > 1 {
        let others: Vec<&[f64]> = pts
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, p)| p.coords())
            .collect();
        let out = min_norm_point(pts[i].coords(), &others, TOL_GEO * 0.5);
        if out.distance <= 1e-10 {
            pts.remove(i);
        } else {
            i += 1;
        }
    }
    pts
}

/// Distance from `q` to the polytope together with the nearest point.
#[derive(Debug, Clone, Serialize)]
pub struct HullProjection {
    pub distance: f64,
    pub point: Point,
    /// Residual dual gap certifying stationarity of the nearest point.
    pub gap: f64,
}

/// Nearest point of `conv(body)` to `q` via the minimum-norm-point search.
pub fn distance_to_hull(q: &Point, body: &ConvexBody) -> Result<HullProjection, GeomError> {
    if q.dim() != body.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: body.dim(),
            got: q.dim(),
        });
    }
    let verts: Vec<&[f64]> = body.vertices.iter().map(|v| v.coords()).collect();
    let out = min_norm_point(q.coords(), &verts, TOL_GEO * 0.5);
    if !out.converged && out.gap > TOL_GEO {
        return Err(GeomError::ProjectionStalled {
            best: Point::from_vec(out.point),
            distance: out.distance,
            gap: out.gap,
        });
    }
    Ok(HullProjection {
        distance: out.distance,
        point: Point::from_vec(out.point),
        gap: out.gap,
    })
}

/// Smallest `e` with `A` contained in the `e`-neighborhood of `B`:
/// `max_{a in A} d(a, B)`.
pub fn hausdorff_semidistance(a: &PointCloud, b: &PointCloud) -> Result<f64, GeomError> {
    if a.dim() != b.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: b.dim(),
            got: a.dim(),
        });
    }
    let mut worst = 0.0f64;
    for p in a.points() {
        let mut nearest = f64::INFINITY;
        for q in b.points() {
            nearest = nearest.min(p.dist(q));
        }
        worst = worst.max(nearest);
    }
    Ok(worst)
}
