//! Set-valued mappings on finite metric domains.
//!
//! The domain is a finite vertex set with coordinates, a connected edge
//! graph, and optionally simplices for piecewise-linear interpolation. Each
//! vertex carries either a finite cloud or the whole-space marker. True
//! topological semicontinuity is vacuous on a finite domain; what the
//! selection engine consumes are the per-edge semidistance moduli computed
//! here.

use crate::error::MapError;
use crate::geom::{distance_to_cloud, hausdorff_semidistance, Ball, Point, PointCloud};
use serde::{Deserialize, Serialize};

/// Finite metric domain: vertices with coordinates, edges, optional simplices.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainComplex {
    vertices: Vec<Point>,
    edges: Vec<(usize, usize)>,
    lengths: Vec<f64>,
    simplices: Option<Vec<Vec<usize>>>,
}

impl DomainComplex {
    pub fn new(
        vertices: Vec<Point>,
        edges: Vec<(usize, usize)>,
        simplices: Option<Vec<Vec<usize>>>,
    ) -> Result<Self, MapError> {
        if vertices.is_empty() {
            return Err(MapError::EmptyDomain);
        }
        let n = vertices.len();
        let mut lengths = Vec::with_capacity(edges.len());
        for &(i, j) in &edges {
            if i >= n || j >= n {
                return Err(MapError::BadEdge(i, j));
            }
            let len = vertices[i].dist(&vertices[j]);
            if !(len > 0.0) {
                return Err(MapError::DegenerateEdge(i, j));
            }
            lengths.push(len);
        }
        if let Some(ref sx) = simplices {
            for s in sx {
                for &v in s {
                    if v >= n {
                        return Err(MapError::BadEdge(v, v));
                    }
                }
            }
        }
        // Connectivity over the undirected edge graph.
        if n > 1 {
            let mut adj = vec![Vec::new(); n];
            for &(i, j) in &edges {
                adj[i].push(j);
                adj[j].push(i);
            }
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            let mut count = 1;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        count += 1;
                        stack.push(w);
                    }
                }
            }
            if count != n {
                return Err(MapError::Disconnected);
            }
        }
        Ok(DomainComplex {
            vertices,
            edges,
            lengths,
            simplices,
        })
    }

    /// Path graph over `n` evenly spaced vertices on `[a, b]`, with the edges
    /// doubling as 1-simplices.
    pub fn grid_1d(n: usize, a: f64, b: f64) -> Result<Self, MapError> {
        let vertices: Vec<Point> = (0..n)
            .map(|k| Point::scalar(a + (b - a) * k as f64 / (n - 1).max(1) as f64))
            .collect();
        let edges: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|k| (k, k + 1)).collect();
        let simplices = Some(edges.iter().map(|&(i, j)| vec![i, j]).collect());
        DomainComplex::new(vertices, edges, simplices)
    }

    /// Path graph over explicit 1-d coordinates (must be strictly monotone).
    pub fn path_1d(xs: &[f64]) -> Result<Self, MapError> {
        let vertices: Vec<Point> = xs.iter().map(|&x| Point::scalar(x)).collect();
        let edges: Vec<(usize, usize)> = (0..xs.len().saturating_sub(1))
            .map(|k| (k, k + 1))
            .collect();
        let simplices = Some(edges.iter().map(|&(i, j)| vec![i, j]).collect());
        DomainComplex::new(vertices, edges, simplices)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn simplices(&self) -> Option<&[Vec<usize>]> {
        self.simplices.as_deref()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for &(i, j) in &self.edges {
            if i == v {
                out.push(j);
            } else if j == v {
                out.push(i);
            }
        }
        out
    }
}

/// A value of the mapping: a finite cloud or the whole space.
#[derive(Debug, Clone, PartialEq)]
pub enum SetValue {
    Cloud(PointCloud),
    WholeSpace,
}

impl SetValue {
    pub fn is_whole_space(&self) -> bool {
        matches!(self, SetValue::WholeSpace)
    }

    pub fn as_cloud(&self) -> Option<&PointCloud> {
        match self {
            SetValue::Cloud(c) => Some(c),
            SetValue::WholeSpace => None,
        }
    }

    /// `d(q, value)`: zero for the whole space.
    pub fn distance_to(&self, q: &Point) -> Result<f64, MapError> {
        match self {
            SetValue::Cloud(c) => Ok(distance_to_cloud(q, c)?),
            SetValue::WholeSpace => Ok(0.0),
        }
    }

    /// Whether the value meets the open ball (the whole space meets every ball).
    pub fn meets(&self, ball: &Ball) -> Result<bool, MapError> {
        match self {
            SetValue::Cloud(c) => Ok(distance_to_cloud(ball.center(), c)? < ball.radius()),
            SetValue::WholeSpace => Ok(true),
        }
    }
}

/// A discretized set-valued mapping: one value per domain vertex.
#[derive(Debug, Clone)]
pub struct SetValuedMap {
    domain: DomainComplex,
    values: Vec<SetValue>,
    ambient_dim: usize,
}

impl SetValuedMap {
    pub fn new(
        domain: DomainComplex,
        values: Vec<SetValue>,
        ambient_dim: usize,
    ) -> Result<Self, MapError> {
        if values.len() != domain.len() {
            return Err(MapError::ValueCount {
                vertices: domain.len(),
                values: values.len(),
            });
        }
        for (vertex, v) in values.iter().enumerate() {
            if let SetValue::Cloud(c) = v {
                if c.dim() != ambient_dim {
                    return Err(MapError::ValueDimension {
                        vertex,
                        expected: ambient_dim,
                        got: c.dim(),
                    });
                }
            }
        }
        Ok(SetValuedMap {
            domain,
            values,
            ambient_dim,
        })
    }

    pub fn domain(&self) -> &DomainComplex {
        &self.domain
    }

    pub fn values(&self) -> &[SetValue] {
        &self.values
    }

    pub fn value(&self, vertex: usize) -> &SetValue {
        &self.values[vertex]
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn same_domain(&self, other: &SetValuedMap) -> bool {
        self.domain == other.domain && self.ambient_dim == other.ambient_dim
    }
}

// External JSON schema for SetValuedMap.

#[derive(Serialize, Deserialize)]
struct DomainJson {
    vertices: Vec<Vec<f64>>,
    edges: Vec<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simplices: Option<Vec<Vec<usize>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ValueJson {
    Cloud { points: Vec<Vec<f64>> },
    WholeSpace,
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    domain: DomainJson,
    ambient_dim: usize,
    values: Vec<ValueJson>,
}

impl Serialize for SetValuedMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MapJson {
            domain: DomainJson {
                vertices: self
                    .domain
                    .vertices
                    .iter()
                    .map(|p| p.coords().to_vec())
                    .collect(),
                edges: self.domain.edges.iter().map(|&(i, j)| [i, j]).collect(),
                simplices: self.domain.simplices.clone(),
            },
            ambient_dim: self.ambient_dim,
            values: self
                .values
                .iter()
                .map(|v| match v {
                    SetValue::Cloud(c) => ValueJson::Cloud {
                        points: c.points().iter().map(|p| p.coords().to_vec()).collect(),
                    },
                    SetValue::WholeSpace => ValueJson::WholeSpace,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SetValuedMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MapJson::deserialize(d)?;
        let vertices = raw
            .domain
            .vertices
            .into_iter()
            .map(Point::new)
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        let edges = raw.domain.edges.iter().map(|e| (e[0], e[1])).collect();
        let domain = DomainComplex::new(vertices, edges, raw.domain.simplices)
            .map_err(D::Error::custom)?;
        let values = raw
            .values
            .into_iter()
            .map(|v| match v {
                ValueJson::Cloud { points } => {
                    PointCloud::from_rows(points).map(SetValue::Cloud)
                }
                ValueJson::WholeSpace => Ok(SetValue::WholeSpace),
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        SetValuedMap::new(domain, values, raw.ambient_dim).map_err(D::Error::custom)
    }
}

/// Vertices whose value meets the open ball.
pub fn preimage(phi: &SetValuedMap, ball: &Ball) -> Result<Vec<usize>, MapError> {
    if ball.center().dim() != phi.ambient_dim() {
        return Err(MapError::Geom(crate::error::GeomError::DimensionMismatch {
            expected: phi.ambient_dim(),
            got: ball.center().dim(),
        }));
    }
    let mut out = Vec::new();
    for (i, v) in phi.values().iter().enumerate() {
        if v.meets(ball)? {
            out.push(i);
        }
    }
    Ok(out)
}

/// Per-edge semidistance modulus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeModulus {
    pub edge: (usize, usize),
    pub length: f64,
    /// Semidistance of the value at `edge.0` from the value at `edge.1`.
    pub forward: f64,
    pub backward: f64,
    /// `max(forward, backward) / length`.
    pub modulus: f64,
    pub flagged: bool,
    /// True when a whole-space endpoint makes the edge trivially fine.
    pub vacuous: bool,
}

/// Discrete lower-semicontinuity report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LscReport {
    pub epsilon: f64,
    pub edges: Vec<EdgeModulus>,
    pub max_modulus: f64,
    pub flagged: usize,
}

/// Per-edge semidistance moduli of `phi`, flagging edges where the value
/// moves by more than `epsilon` across the edge.
pub fn lsc_defect(phi: &SetValuedMap, epsilon: f64) -> Result<LscReport, MapError> {
    let mut edges = Vec::with_capacity(phi.domain().edges().len());
    let mut max_modulus = 0.0f64;
    let mut flagged = 0usize;
    for (&(i, j), &len) in phi
        .domain()
        .edges()
        .iter()
        .zip(phi.domain().edge_lengths())
    {
        let m = match (phi.value(i), phi.value(j)) {
            (SetValue::Cloud(a), SetValue::Cloud(b)) => {
                let forward = hausdorff_semidistance(a, b)?;
                let backward = hausdorff_semidistance(b, a)?;
                let modulus = forward.max(backward) / len;
                let is_flagged = modulus > epsilon / len;
                EdgeModulus {
                    edge: (i, j),
                    length: len,
                    forward,
                    backward,
                    modulus,
                    flagged: is_flagged,
                    vacuous: false,
                }
            }
            _ => EdgeModulus {
                edge: (i, j),
                length: len,
                forward: 0.0,
                backward: 0.0,
                modulus: 0.0,
                flagged: false,
                vacuous: true,
            },
        };
        max_modulus = max_modulus.max(m.modulus);
        if m.flagged {
            flagged += 1;
        }
        edges.push(m);
    }
    Ok(LscReport {
        epsilon,
        edges,
        max_modulus,
        flagged,
    })
}

/// Per-vertex record for the proximal-continuity report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VertexGap {
    pub vertex: usize,
    /// Semidistance of `phi(x)` from `psi(x)` (how far phi leaves psi).
    pub inclusion_gap: f64,
    /// Semidistance of `psi(x)` from `phi(x)`; positive when psi is larger.
    pub excess: f64,
    pub differs: bool,
    /// The side condition: where the values differ, phi(x) must be a finite
    /// cloud (hence compact), not the whole space.
    pub compact_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DProximalReport {
    pub epsilon: f64,
    /// Upper-semicontinuity moduli of `psi` per edge.
    pub usc_edges: Vec<EdgeModulus>,
    pub vertices: Vec<VertexGap>,
    pub max_usc_modulus: f64,
}

/// Validate that `phi` is a multi-selection of `psi` and report the
/// upper-semicontinuity moduli of `psi` along with the compactness side
/// condition at vertices where the two differ.
pub fn d_proximal_report(
    phi: &SetValuedMap,
    psi: &SetValuedMap,
    epsilon: f64,
) -> Result<DProximalReport, MapError> {
    if !phi.same_domain(psi) {
        return Err(MapError::DomainMismatch);
    }
    let tol = crate::geom::TOL_GEO;
    let mut vertices = Vec::with_capacity(phi.len());
    for i in 0..phi.len() {
        let (inclusion_gap, excess, differs, compact_ok) = match (phi.value(i), psi.value(i)) {
            (SetValue::Cloud(a), SetValue::Cloud(b)) => {
                let inc = hausdorff_semidistance(a, b)?;
                let exc = hausdorff_semidistance(b, a)?;
                (inc, exc, exc > tol || inc > tol, true)
            }
            (SetValue::Cloud(_), SetValue::WholeSpace) => (0.0, f64::INFINITY, true, true),
            (SetValue::WholeSpace, SetValue::WholeSpace) => (0.0, 0.0, false, true),
            (SetValue::WholeSpace, SetValue::Cloud(_)) => (f64::INFINITY, 0.0, true, false),
        };
        if inclusion_gap > tol {
            return Err(MapError::MultiSelectionViolation {
                vertex: i,
                gap: inclusion_gap,
            });
        }
        vertices.push(VertexGap {
            vertex: i,
            inclusion_gap,
            excess,
            differs,
            compact_ok,
        });
    }
    let usc = lsc_defect(psi, epsilon)?;
    Ok(DProximalReport {
        epsilon,
        max_usc_modulus: usc.max_modulus,
        usc_edges: usc.edges,
        vertices,
    })
}

/// One level of a cover chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverLevel {
    pub n: u32,
    /// Radius of the open ball `V_n` around the origin.
    pub v_radius: f64,
    /// Radius of the closed shrunken ball `F_n` defining `A_n`.
    pub f_radius: f64,
    pub a_set: Vec<usize>,
    pub u_set: Vec<usize>,
}

/// Increasing closed cover of the domain with `A_n` inside the preimage of
/// `V_n = B(0, beta^n)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverChain {
    pub beta: f64,
    pub levels: Vec<CoverLevel>,
}

impl CoverChain {
    /// Check the chain invariants against the map by direct enumeration.
    pub fn validate(&self, phi: &SetValuedMap) -> Result<(), MapError> {
        let n_vertices = phi.len();
        let origin = Point::from_vec(vec![0.0; phi.ambient_dim()]);
        for (k, level) in self.levels.iter().enumerate() {
            let ball = Ball::new(origin.clone(), level.v_radius)
                .map_err(MapError::Geom)?;
            let pre = preimage(phi, &ball)?;
            for &v in &level.a_set {
                if !pre.contains(&v) {
                    return Err(MapError::CoverConstruction { level: level.n });
                }
            }
            for &v in &level.a_set {
                if !level.u_set.contains(&v) {
                    return Err(MapError::CoverConstruction { level: level.n });
                }
            }
            if k + 1 < self.levels.len() {
                let next = &self.levels[k + 1];
                for &v in &level.u_set {
                    if !next.a_set.contains(&v) {
                        return Err(MapError::CoverConstruction { level: level.n });
                    }
                }
                for &v in &level.a_set {
                    if !next.a_set.contains(&v) {
                        return Err(MapError::CoverConstruction { level: level.n });
                    }
                }
            }
        }
        let last = self
            .levels
            .last()
            .ok_or(MapError::CoverConstruction { level: 0 })?;
        if last.a_set.len() != n_vertices {
            return Err(MapError::CoverConstruction { level: last.n });
        }
        Ok(())
    }
}

/// Build the cover chain for `phi` with ratio `beta > 1`.
///
/// `F_n` is the closed ball of radius `beta^n * (1 - 1/(2 beta))`, a fixed
/// geometric shrink of `V_n` that still exhausts the space; `A_n` collects
/// the vertices whose value meets `F_n`; `U_n` dilates `A_n` by one graph
/// neighborhood, truncated to `A_{n+1}` so it stays inside the preimage of
/// `V_{n+1}`.
pub fn build_cover_chain(phi: &SetValuedMap, beta: f64) -> Result<CoverChain, MapError> {
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(MapError::CoverConstruction { level: 0 });
    }
    let origin = vec![0.0; phi.ambient_dim()];
    // Distance from the origin to each value; zero for the whole space.
    let norms: Vec<f64> = phi
        .values()
        .iter()
        .map(|v| match v {
            SetValue::Cloud(c) => c
                .points()
                .iter()
                .map(|p| crate::geom::dist(p.coords(), &origin))
                .fold(f64::INFINITY, f64::min),
            SetValue::WholeSpace => 0.0,
        })
        .collect();
    let shrink = 1.0 - 1.0 / (2.0 * beta);
    let a_at = |n: u32| -> Vec<usize> {
        let f_radius = beta.powi(n as i32) * shrink;
        (0..phi.len()).filter(|&v| norms[v] <= f_radius).collect()
    };

    let mut levels: Vec<CoverLevel> = Vec::new();
    let mut n = 1u32;
    loop {
        let a_set = a_at(n);
        let covered = a_set.len() == phi.len();
        let a_next = if covered { a_set.clone() } else { a_at(n + 1) };
        // One-step graph dilation truncated to the next level.
        let mut u_set = a_set.clone();
        for &v in &a_set {
            for w in phi.domain().neighbors(v) {
                if !u_set.contains(&w) && a_next.contains(&w) {
                    u_set.push(w);
                }
            }
        }
        u_set.sort_unstable();
        levels.push(CoverLevel {
            n,
            v_radius: beta.powi(n as i32),
            f_radius: beta.powi(n as i32) * shrink,
            a_set,
            u_set,
        });
        if covered {
            break;
        }
        n += 1;
        if n > 1024 {
            return Err(MapError::CoverConstruction { level: n });
        }
    }
    Ok(CoverChain { beta, levels })
}
