//! Gluing partial selections over a cover chain, and the counterexample
//! showing why the chain must come from closures of an open cover.
//!
//! The engine's iteration is independent per vertex, so gluing runs the same
//! per-vertex loop level by level, freezing vertices already assigned. The
//! demo builds the classic oscillation failure: piecewise restrictions of
//! `sin(1/x)` glued over `{0} ∪ [1/n, 1]` oscillate with amplitude 2 at the
//! origin, while a continuous function glued over closures of an open cover
//! stays continuous.

use super::{SelectionConfig, VertexFunction};
use crate::error::SelectionError;
use crate::geom::{Point, TOL_GEO};
use crate::multimap::{CoverChain, DomainComplex, SetValue, SetValuedMap};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Oscillation threshold above which a witness is reported. A glued function
/// whose values near the gap stay within this band is treated as continuous
/// at the sampling scale.
const OSC_EMIT_THRESHOLD: f64 = 0.5;

/// One partial selection: the level's vertex subset and the values there.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GluePiece {
    pub level: u32,
    pub vertices: Vec<usize>,
    pub values: Vec<Point>,
    /// Max stretch over edges with both endpoints in the piece.
    pub internal_modulus: f64,
}

/// Per-edge stretch of the glued function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeStretch {
    pub edge: (usize, usize),
    pub length: f64,
    pub stretch: f64,
}

/// A vertex sequence approaching the gap along which the glued values
/// oscillate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OscillationWitness {
    pub vertices: Vec<usize>,
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub oscillation: f64,
}

impl OscillationWitness {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (x, v) in self.xs.iter().zip(&self.values) {
            out.push_str(&format!("{x},{v}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlueReport {
    pub pieces: Vec<GluePiece>,
    pub glued: VertexFunction,
    pub continuity_moduli: Vec<EdgeStretch>,
    pub max_modulus: f64,
    pub discontinuity_witness: Option<OscillationWitness>,
    pub certified: bool,
}

impl GlueReport {
    fn from_parts(
        domain: &DomainComplex,
        pieces: Vec<(u32, Vec<usize>)>,
        glued: VertexFunction,
        witness: Option<OscillationWitness>,
    ) -> Self {
        let moduli: Vec<EdgeStretch> = domain
            .edges()
            .iter()
            .zip(domain.edge_lengths())
            .map(|(&(i, j), &len)| EdgeStretch {
                edge: (i, j),
                length: len,
                stretch: glued.value(i).dist(glued.value(j)) / len,
            })
            .collect();
        let max_modulus = moduli.iter().map(|m| m.stretch).fold(0.0, f64::max);
        let built: Vec<GluePiece> = pieces
            .into_iter()
            .map(|(level, vertices)| {
                let inside = |v: usize| vertices.binary_search(&v).is_ok();
                let internal = moduli
                    .iter()
                    .filter(|m| inside(m.edge.0) && inside(m.edge.1))
                    .map(|m| m.stretch)
                    .fold(0.0, f64::max);
                GluePiece {
                    level,
                    values: vertices.iter().map(|&v| glued.value(v).clone()).collect(),
                    vertices,
                    internal_modulus: internal,
                }
            })
            .collect();
        let certified = witness.is_none();
        GlueReport {
            pieces: built,
            glued,
            continuity_moduli: moduli,
            max_modulus,
            discontinuity_witness: witness,
            certified,
        }
    }
}

/// Glue partial selections over the chain: level by level, run the engine's
/// per-vertex iteration on the vertices new to `A_n`, holding earlier levels
/// fixed.
pub fn glue(
    chain: &CoverChain,
    phi: &SetValuedMap,
    g: &VertexFunction,
    config: &SelectionConfig,
) -> Result<GlueReport, SelectionError> {
    config.validate()?;
    chain.validate(phi).map_err(SelectionError::Map)?;
    if g.len() != phi.len() {
        return Err(SelectionError::BadConfig(format!(
            "function has {} values for a domain of {} vertices",
            g.len(),
            phi.len()
        )));
    }

    let mut assigned: Vec<Option<Point>> = vec![None; phi.len()];
    let mut pieces: Vec<(u32, Vec<usize>)> = Vec::new();
    for level in &chain.levels {
        for &v in &level.a_set {
            if assigned[v].is_some() {
                continue;
            }
            let x = iterate_vertex(phi.value(v), g.value(v), config)
                .map_err(|e| SelectionError::GlueLevel {
                    level: level.n,
                    source: Box::new(match e {
                        VertexFailure::Hypothesis { distance } => SelectionError::Hypothesis {
                            vertex: v,
                            distance,
                            r0: config.r0,
                        },
                        VertexFailure::Empty { radius } => {
                            SelectionError::EmptyIntersection { vertex: v, radius }
                        }
                        VertexFailure::Violation {
                            iteration,
                            residual,
                            bound,
                        } => SelectionError::ParaconvexityViolation {
                            iteration,
                            vertex: v,
                            residual,
                            bound,
                            trace: None,
                        },
                        VertexFailure::MaxIters => SelectionError::MaxIters {
                            max_iters: config.max_iters,
                            trace: None,
                        },
                        VertexFailure::Geom(ge) => SelectionError::Geom(ge),
                    }),
                })?;
            assigned[v] = Some(x);
        }
        let mut vs = level.a_set.clone();
        vs.sort_unstable();
        pieces.push((level.n, vs));
    }

    let mut values = Vec::with_capacity(phi.len());
    for p in assigned {
        match p {
            Some(point) => values.push(point),
            None => {
                return Err(SelectionError::Map(
                    crate::error::MapError::CoverConstruction {
                        level: chain.levels.last().map(|l| l.n).unwrap_or(0),
                    },
                ))
            }
        }
    }
    let glued = VertexFunction::new(values)?;
    Ok(GlueReport::from_parts(phi.domain(), pieces, glued, None))
}

enum VertexFailure {
    Hypothesis { distance: f64 },
    Empty { radius: f64 },
    Violation {
        iteration: usize,
        residual: f64,
        bound: f64,
    },
    MaxIters,
    Geom(crate::error::GeomError),
}

/// The engine loop at a single vertex with the geometric radius schedule;
/// identical arithmetic to [`super::run`], so gluing agrees with a full run
/// pointwise.
fn iterate_vertex(
    value: &SetValue,
    g_x: &Point,
    config: &SelectionConfig,
) -> Result<Point, VertexFailure> {
    let d0 = value
        .distance_to(g_x)
        .map_err(|e| match e {
            crate::error::MapError::Geom(ge) => VertexFailure::Geom(ge),
            _ => VertexFailure::Hypothesis { distance: f64::NAN },
        })?;
    if !(d0 < config.r0) {
        return Err(VertexFailure::Hypothesis { distance: d0 });
    }
    let mut x = g_x.clone();
    let mut n = 0usize;
    loop {
        let radius = config.gamma.powi(n as i32) * config.r0;
        if radius < config.tol_stop {
            return Ok(x);
        }
        if n >= config.max_iters {
            return Err(VertexFailure::MaxIters);
        }
        let next = match super::project_step(value, &x, radius) {
            Ok(p) => p,
            Err(super::StepFailure::Empty) => return Err(VertexFailure::Empty { radius }),
            Err(super::StepFailure::Geom(e)) => return Err(VertexFailure::Geom(e)),
        };
        let residual = value.distance_to(&next).map_err(|_| VertexFailure::MaxIters)?;
        let bound = config.gamma.powi(n as i32 + 1) * config.r0;
        if residual > bound + TOL_GEO {
            return Err(VertexFailure::Violation {
                iteration: n,
                residual,
                bound,
            });
        }
        x = next;
        n += 1;
    }
}

/// Sampled domain `{0} ∪ [1/n_max, 1]` and the glued restrictions of
/// `sin(1/x)` with `f(0) = 0` over `A_n = {0} ∪ [1/n, 1]`: the pieces are
/// fine on their own sets, but the glued function oscillates at 0.
pub fn demo_glue_failure(n_max: u32, sample_step: f64) -> Result<GlueReport, SelectionError> {
    let (xs, domain) = demo_domain(n_max, sample_step, 1.0 / n_max as f64)?;
    let f = |x: f64| if x == 0.0 { 0.0 } else { (1.0 / x).sin() };
    let values: Vec<Point> = xs.iter().map(|&x| Point::scalar(f(x))).collect();
    let glued = VertexFunction::new(values)?;

    let mut pieces: Vec<(u32, Vec<usize>)> = Vec::new();
    for n in 1..=n_max {
        let lo = 1.0 / n as f64 - 1e-12;
        let subset: Vec<usize> = xs
            .iter()
            .enumerate()
            .filter(|&(i, &x)| i == 0 || x >= lo)
            .map(|(i, _)| i)
            .collect();
        pieces.push((n, subset));
    }

    let witness = oscillation_witness(&xs, &glued);
    Ok(GlueReport::from_parts(&domain, pieces, glued, witness))
}

/// The repaired construction: a function continuous at 0 glued over closures
/// of an open cover `U_n = [0, rho) ∪ (1/(n+1), 1]` with `rho = 1/(n_max+1)`.
/// No witness survives.
pub fn demo_glue_repaired(n_max: u32, sample_step: f64) -> Result<GlueReport, SelectionError> {
    let (xs, domain) = demo_domain(n_max, sample_step, sample_step)?;
    let f = |x: f64| if x == 0.0 { 0.0 } else { x * (1.0 / x).sin() };
    let values: Vec<Point> = xs.iter().map(|&x| Point::scalar(f(x))).collect();
    let glued = VertexFunction::new(values)?;

    let rho = 1.0 / (n_max as f64 + 1.0);
    let mut pieces: Vec<(u32, Vec<usize>)> = Vec::new();
    for n in 1..=n_max {
        let hi_ball = rho + 1e-12;
        let lo_tail = 1.0 / (n as f64 + 1.0) - 1e-12;
        let subset: Vec<usize> = xs
            .iter()
            .enumerate()
            .filter(|&(_, &x)| x <= hi_ball || x >= lo_tail)
            .map(|(i, _)| i)
            .collect();
        pieces.push((n, subset));
    }

    let witness = oscillation_witness(&xs, &glued);
    Ok(GlueReport::from_parts(&domain, pieces, glued, witness))
}

fn demo_domain(
    n_max: u32,
    sample_step: f64,
    x_start: f64,
) -> Result<(Vec<f64>, DomainComplex), SelectionError> {
    if n_max < 2 {
        return Err(SelectionError::BadConfig(format!(
            "n_max must be at least 2, got {n_max}"
        )));
    }
    if !(sample_step > 0.0) {
        return Err(SelectionError::BadConfig(format!(
            "sample step must be positive, got {sample_step}"
        )));
    }
    // Resolving the oscillation near 1/n_max needs steps well under the
    // extremum spacing pi * x^2 at x = 1/n_max.
    let limit = PI / (4.0 * (n_max as f64).powi(2));
    if sample_step > limit {
        return Err(SelectionError::Resolution {
            step: sample_step,
            n_max,
        });
    }
    let mut xs = vec![0.0f64];
    let mut x = x_start;
    while x < 1.0 - 1e-12 {
        xs.push(x);
        x += sample_step;
    }
    xs.push(1.0);
    let domain = DomainComplex::path_1d(&xs).map_err(SelectionError::Map)?;
    Ok((xs, domain))
}

/// Probe the glued values at the extremum abscissas `1/(pi/2 + k*pi)` inside
/// the window `[x_min, 2 * x_min]` just above the smallest positive sample.
/// With at least two resolvable extrema the sequence plus the origin
/// measures the oscillation; otherwise the gap jump to the nearest sample
/// stands in.
fn oscillation_witness(xs: &[f64], glued: &VertexFunction) -> Option<OscillationWitness> {
    if xs.len() < 2 {
        return None;
    }
    let x_min = xs[1];
    let window_hi = 2.0 * x_min;
    let k_lo = ((1.0 / window_hi - PI / 2.0) / PI).ceil().max(0.0) as i64;
    let k_hi = ((1.0 / x_min - PI / 2.0) / PI).floor() as i64;
    let mut indices: Vec<usize> = Vec::new();
    for k in k_lo..=k_hi {
        let xk = 1.0 / (PI / 2.0 + k as f64 * PI);
        if xk < x_min - 1e-15 || xk > window_hi + 1e-15 {
            continue;
        }
        let idx = nearest_index(xs, xk);
        if idx != 0 && !indices.contains(&idx) {
            indices.push(idx);
        }
    }
    if indices.len() < 2 {
        indices = vec![1];
    }
    indices.sort_unstable_by(|a, b| b.cmp(a)); // descending x toward the gap
    let mut vertices = indices.clone();
    vertices.push(0);
    let values: Vec<f64> = vertices
        .iter()
        .map(|&i| glued.value(i).coords()[0])
        .collect();
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let oscillation = hi - lo;
    if oscillation >= OSC_EMIT_THRESHOLD {
        Some(OscillationWitness {
            xs: vertices.iter().map(|&i| xs[i]).collect(),
            vertices,
            values,
            oscillation,
        })
    } else {
        None
    }
}

fn nearest_index(xs: &[f64], target: f64) -> usize {
    // xs[1..] is sorted ascending; xs[0] is the isolated origin.
    let tail = &xs[1..];
    let pos = tail.partition_point(|&x| x < target);
    let mut best = pos.min(tail.len() - 1);
    if pos > 0 && (tail[pos - 1] - target).abs() < (tail[best] - target).abs() {
        best = pos - 1;
    }
    best + 1
}
