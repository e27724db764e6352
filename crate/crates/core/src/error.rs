//! Error types, one enum per subsystem.

use crate::geom::Point;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point cloud must be nonempty")]
    EmptyCloud,
    #[error("coordinates must be finite")]
    NonFinite,
    #[error("ball radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("projection did not reach tolerance: distance {distance}, gap bound {gap}")]
    ProjectionStalled {
        best: Point,
        distance: f64,
        gap: f64,
    },
}

#[derive(Debug, Error)]
pub enum ParaconvexityError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("search grids must be nonempty")]
    EmptyGrid,
    #[error("no admissible (center, radius) cell in the given grids")]
    NoAdmissibleCell,
    #[error("oracle supports dimension 1 or 2, got {0}")]
    UnsupportedDimension(usize),
    #[error("evaluation budget exceeded; partial maximum {partial}")]
    BudgetExceeded { partial: f64 },
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("domain must have at least one vertex")]
    EmptyDomain,
    #[error("maps must share a domain and ambient dimension")]
    DomainMismatch,
    #[error("map has {values} values for a domain of {vertices} vertices")]
    ValueCount { vertices: usize, values: usize },
    #[error("edge ({0}, {1}) references a missing vertex")]
    BadEdge(usize, usize),
    #[error("edge ({0}, {1}) has non-positive length")]
    DegenerateEdge(usize, usize),
    #[error("domain graph is not connected")]
    Disconnected,
    #[error("value at vertex {vertex} has dimension {got}, ambient dimension is {expected}")]
    ValueDimension {
        vertex: usize,
        expected: usize,
        got: usize,
    },
    #[error("multi-selection violated at vertex {vertex}: semidistance {gap} exceeds tolerance")]
    MultiSelectionViolation { vertex: usize, gap: f64 },
    #[error("cover chain dilation left the preimage at level {level}")]
    CoverConstruction { level: u32 },
}

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error(
        "hypothesis d(g(x), phi(x)) < r0 fails at vertex {vertex}: distance {distance} >= {r0}"
    )]
    Hypothesis {
        vertex: usize,
        distance: f64,
        r0: f64,
    },
    #[error("empty intersection at vertex {vertex}: phi(x) misses the ball of radius {radius}")]
    EmptyIntersection { vertex: usize, radius: f64 },
    #[error(
        "paraconvexity violation at iteration {iteration}, vertex {vertex}: \
         residual {residual} exceeds bound {bound}"
    )]
    ParaconvexityViolation {
        iteration: usize,
        vertex: usize,
        residual: f64,
        bound: f64,
        /// Partial trace up to the violation; absent for per-vertex glue runs.
        trace: Option<Box<crate::selection::SelectionTrace>>,
    },
    #[error("no convergence within {max_iters} iterations")]
    MaxIters {
        max_iters: usize,
        trace: Option<Box<crate::selection::SelectionTrace>>,
    },
    #[error("glue level {level} failed: {source}")]
    GlueLevel {
        level: u32,
        source: Box<SelectionError>,
    },
    #[error("sample step {step} too coarse to resolve oscillation near 1/{n_max}")]
    Resolution { step: f64, n_max: u32 },
}

#[derive(Debug, Error)]
pub enum SemenovError {
    #[error("scalar function returned {value} at argument {arg}; range must be [0, 1)")]
    RangeViolation { arg: f64, value: f64 },
    #[error("argument grid must be nonempty and positive")]
    BadGrid,
    #[error("property (PS) fails: h is not strictly dominated by H at s = {witness}")]
    PsViolation { witness: f64 },
    #[error("cannot parse scalar function {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error(transparent)]
    Selection(#[from] SelectionError),
}
