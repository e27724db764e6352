//! Successive-approximation selection engine.
//!
//! Starting from `f_0 = g` with `d(g(x), phi(x)) < r0`, each iteration
//! projects the current iterate onto the hull of the value's intersection
//! with a shrinking ball:
//!
//! `f_{n+1}(x) = nearest point of conv(phi(x) ∩ B(f_n(x), rho_n)) to f_n(x)`
//!
//! with `rho_n = gamma^n * r0` (or a functional schedule). The step bound
//! `d(f_n, f_{n+1}) <= rho_n` holds by construction; the residual bound
//! `d(f_{n+1}, phi) <= rho_{n+1}` is certified after every iteration and
//! fails exactly when some value is not paraconvex enough at that scale.
//! [`verify_trace`] replays every inequality from scratch.

mod glue;

pub use glue::{demo_glue_failure, demo_glue_repaired, glue, EdgeStretch, GluePiece, GlueReport,
    OscillationWitness};

use crate::error::SelectionError;
use crate::exec;
use crate::geom::{
    ball_intersect, convex_hull, distance_to_hull, Ball, Point, TOL_GEO,
};
use crate::multimap::{SetValue, SetValuedMap};
use crate::paraconvexity::{self, GridBudget};
use crate::semenov::ScalarFn;
use serde::{Deserialize, Serialize};

/// Parameters of a constant-rate run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Assumed paraconvexity defect of the values.
    pub alpha: f64,
    /// Contraction rate, `alpha < gamma < 1`.
    pub gamma: f64,
    /// Initial proximity radius; the hypothesis is `d(g(x), phi(x)) < r0`.
    pub r0: f64,
    /// Drift budget, must exceed `1 / (1 - gamma)`.
    pub delta: f64,
    pub tol_stop: f64,
    pub max_iters: usize,
}

impl SelectionConfig {
    /// Defaults derived from `alpha`: `gamma = (1 + alpha) / 2` and
    /// `delta = 1 / (1 - gamma) + 0.01`.
    pub fn from_alpha(alpha: f64, r0: f64) -> Self {
        let gamma = (1.0 + alpha) / 2.0;
        SelectionConfig {
            alpha,
            gamma,
            r0,
            delta: 1.0 / (1.0 - gamma) + 0.01,
            tol_stop: 1e-8,
            max_iters: 10_000,
        }
    }

    pub fn with_gamma(alpha: f64, gamma: f64, r0: f64) -> Self {
        SelectionConfig {
            alpha,
            gamma,
            r0,
            delta: 1.0 / (1.0 - gamma) + 0.01,
            tol_stop: 1e-8,
            max_iters: 10_000,
        }
    }

    pub fn validate(&self) -> Result<(), SelectionError> {
        if !(self.alpha >= 0.0 && self.alpha < self.gamma && self.gamma < 1.0) {
            return Err(SelectionError::BadConfig(format!(
                "need 0 <= alpha < gamma < 1, got alpha {} gamma {}",
                self.alpha, self.gamma
            )));
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(SelectionError::BadConfig(format!("bad r0 {}", self.r0)));
        }
        if !(self.delta > 1.0 / (1.0 - self.gamma)) {
            return Err(SelectionError::BadConfig(format!(
                "delta {} must exceed 1/(1-gamma) = {}",
                self.delta,
                1.0 / (1.0 - self.gamma)
            )));
        }
        if !(self.tol_stop > 0.0) || self.max_iters == 0 {
            return Err(SelectionError::BadConfig(
                "tol_stop must be positive and max_iters nonzero".into(),
            ));
        }
        Ok(())
    }
}

/// A single-valued function on the domain vertices, interpolated
/// piecewise-linearly over simplices when present.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction {
    values: Vec<Point>,
}

impl VertexFunction {
    pub fn new(values: Vec<Point>) -> Result<Self, SelectionError> {
        if values.is_empty() {
            return Err(SelectionError::BadConfig(
                "vertex function needs at least one value".into(),
            ));
        }
        let dim = values[0].dim();
        for v in &values {
            if v.dim() != dim {
                return Err(SelectionError::Geom(
                    crate::error::GeomError::DimensionMismatch {
                        expected: dim,
                        got: v.dim(),
                    },
                ));
            }
        }
        Ok(VertexFunction { values })
    }

    pub fn value(&self, vertex: usize) -> &Point {
        &self.values[vertex]
    }

    pub fn values(&self) -> &[Point] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values[0].dim()
    }

    /// Piecewise-linear value at the barycenter of a simplex.
    pub fn simplex_midpoint(&self, simplex: &[usize]) -> Point {
        let dim = self.dim();
        let mut mid = vec![0.0; dim];
        for &v in simplex {
            for (m, c) in mid.iter_mut().zip(self.values[v].coords()) {
                *m += c / simplex.len() as f64;
            }
        }
        Point::from_vec(mid)
    }

    pub fn max_distance_to(&self, other: &VertexFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.dist(b))
            .fold(0.0, f64::max)
    }
}

impl Serialize for VertexFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.values.serialize(s)
    }
}

impl<'de> Deserialize<'de> for VertexFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let values = Vec::<Point>::deserialize(d)?;
        VertexFunction::new(values).map_err(D::Error::custom)
    }
}

/// How per-iteration radii are generated.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiusSchedule {
    /// `rho_n = gamma^n * r0` from the config.
    Geometric,
    /// `rho_n = H_n(r0) * r0` from the damping recursion of the stored
    /// functions; kept in the trace so a verifier can regenerate the radii.
    Functional { h: ScalarFn, cap: ScalarFn },
}

/// Per-iteration maxima recorded by the engine.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterStats {
    pub iteration: usize,
    /// Step radius `rho_n` used by this iteration.
    pub radius: f64,
    /// `max_x d(f_n(x), phi(x))` before the step.
    pub residual_before: f64,
    /// `max_x d(f_n(x), f_{n+1}(x))`.
    pub max_step: f64,
    /// Spot check at simplex midpoints against the union of the simplex's
    /// vertex values; advisory, not gated.
    pub midpoint_residual: Option<f64>,
}

/// The full iterate history with its certificates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub config: SelectionConfig,
    pub schedule: RadiusSchedule,
    /// `f_0 = g, f_1, ..., f_N`.
    pub iterates: Vec<VertexFunction>,
    pub per_iter: Vec<IterStats>,
    /// `max_x d(f_N(x), phi(x))`.
    pub final_residual: f64,
    pub certified: bool,
    pub warnings: Vec<String>,
}

impl SelectionTrace {
    pub fn final_fn(&self) -> &VertexFunction {
        self.iterates.last().expect("trace holds f_0 at least")
    }

    /// Regenerate the per-iteration radius bounds `rho_0..rho_N` from the
    /// schedule, independently of what the engine recorded.
    pub fn bound_radii(&self, count: usize) -> Result<Vec<f64>, SelectionError> {
        match &self.schedule {
            RadiusSchedule::Geometric => Ok((0..count)
                .map(|n| self.config.gamma.powi(n as i32) * self.config.r0)
                .collect()),
            RadiusSchedule::Functional { h: _, cap } => {
                let series = crate::semenov::h_iterates(cap, self.config.r0, count.max(1) - 1)
                    .map_err(|e| SelectionError::BadConfig(e.to_string()))?;
                let radii: Vec<f64> = series
                    .iterates
                    .iter()
                    .take(count)
                    .map(|hn| hn * self.config.r0)
                    .collect();
                // The recursion stops early only below 1e-300, far under any
                // usable tol_stop; a shorter schedule means the trace and
                // its stored functions disagree.
                if radii.len() < count {
                    return Err(SelectionError::BadConfig(format!(
                        "schedule yields {} radii for {} iterates",
                        radii.len(),
                        count
                    )));
                }
                Ok(radii)
            }
        }
    }

    /// CSV with one row per iteration: `iteration,max_residual,max_step,bound_gamma_n_r`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,max_residual,max_step,bound_gamma_n_r\n");
        for s in &self.per_iter {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.iteration, s.residual_before, s.max_step, s.radius
            ));
        }
        out
    }
}

fn check_shapes(phi: &SetValuedMap, f: &VertexFunction) -> Result<(), SelectionError> {
    if f.len() != phi.len() {
        return Err(SelectionError::BadConfig(format!(
            "function has {} values for a domain of {} vertices",
            f.len(),
            phi.len()
        )));
    }
    if f.dim() != phi.ambient_dim() {
        return Err(SelectionError::Geom(
            crate::error::GeomError::DimensionMismatch {
                expected: phi.ambient_dim(),
                got: f.dim(),
            },
        ));
    }
    Ok(())
}

/// One projection step at a single vertex. Whole-space values fix the point.
pub(super) fn project_step(value: &SetValue, from: &Point, radius: f64) -> Result<Point, StepFailure> {
    match value {
        SetValue::WholeSpace => Ok(from.clone()),
        SetValue::Cloud(cloud) => {
            let ball = Ball::new(from.clone(), radius).map_err(StepFailure::Geom)?;
            let inside = ball_intersect(cloud, &ball)
                .map_err(StepFailure::Geom)?
                .ok_or(StepFailure::Empty)?;
            let hull = convex_hull(&inside);
            let proj = distance_to_hull(from, &hull).map_err(StepFailure::Geom)?;
            Ok(proj.point)
        }
    }
}

pub(super) enum StepFailure {
    Empty,
    Geom(crate::error::GeomError),
}

/// The auxiliary-map step of the engine: project every vertex of `f` onto
/// the hull of `phi(x) ∩ B(f(x), radius)`.
pub fn step(
    phi: &SetValuedMap,
    f: &VertexFunction,
    radius: f64,
) -> Result<VertexFunction, SelectionError> {
    check_shapes(phi, f)?;
    if !(radius > 0.0) {
        return Err(SelectionError::BadConfig(format!("bad radius {radius}")));
    }
    let results = exec::map_indexed(phi.len(), |v| {
        project_step(phi.value(v), f.value(v), radius)
    });
    let mut out = Vec::with_capacity(results.len());
    for (v, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => out.push(p),
            Err(StepFailure::Empty) => {
                return Err(SelectionError::EmptyIntersection { vertex: v, radius })
            }
            Err(StepFailure::Geom(e)) => return Err(SelectionError::Geom(e)),
        }
    }
    VertexFunction::new(out)
}

pub(crate) struct RunPlan<'a> {
    pub schedule: RadiusSchedule,
    pub radius_at: &'a dyn Fn(usize) -> f64,
    pub advisory: bool,
}

/// Run the engine with a constant geometric schedule.
pub fn run(
    phi: &SetValuedMap,
    g: &VertexFunction,
    config: &SelectionConfig,
) -> Result<SelectionTrace, SelectionError> {
    run_with_plan(
        phi,
        g,
        config,
        RunPlan {
            schedule: RadiusSchedule::Geometric,
            radius_at: &|n| config.gamma.powi(n as i32) * config.r0,
            advisory: true,
        },
    )
}

pub(crate) fn run_with_plan(
    phi: &SetValuedMap,
    g: &VertexFunction,
    config: &SelectionConfig,
    plan: RunPlan,
) -> Result<SelectionTrace, SelectionError> {
    config.validate()?;
    check_shapes(phi, g)?;

    // Hypothesis: d(g(x), phi(x)) < r0 everywhere.
    let residuals0 = residuals(phi, g)?;
    for (v, &d) in residuals0.iter().enumerate() {
        if !(d < config.r0) {
            return Err(SelectionError::Hypothesis {
                vertex: v,
                distance: d,
                r0: config.r0,
            });
        }
    }

    let mut warnings = Vec::new();
    if plan.advisory {
        warnings = advisory_value_check(phi, config.alpha);
    }

    let mut iterates = vec![g.clone()];
    let mut per_iter: Vec<IterStats> = Vec::new();
    let mut residual_max = residuals0.iter().cloned().fold(0.0, f64::max);
    let mut n = 0usize;
    loop {
        let radius = (plan.radius_at)(n);
        if radius < config.tol_stop {
            // Residuals are already below the last certified bound.
            break;
        }
        if n >= config.max_iters {
            let trace = SelectionTrace {
                config: config.clone(),
                schedule: plan.schedule.clone(),
                iterates,
                per_iter,
                final_residual: residual_max,
                certified: false,
                warnings,
            };
            return Err(SelectionError::MaxIters {
                max_iters: config.max_iters,
                trace: Some(Box::new(trace)),
            });
        }

        let current = iterates.last().expect("nonempty").clone();
        let next = step(phi, &current, radius)?;
        let max_step = current.max_distance_to(&next);
        let next_residuals = residuals(phi, &next)?;
        let (worst_vertex, worst) = argmax(&next_residuals);
        let midpoint_residual = midpoint_spot_check(phi, &next);

        per_iter.push(IterStats {
            iteration: n,
            radius,
            residual_before: residual_max,
            max_step,
            midpoint_residual,
        });
        iterates.push(next);

        let bound_next = (plan.radius_at)(n + 1);
        if worst > bound_next + TOL_GEO {
            let trace = SelectionTrace {
                config: config.clone(),
                schedule: plan.schedule.clone(),
                iterates,
                per_iter,
                final_residual: worst,
                certified: false,
                warnings,
            };
            return Err(SelectionError::ParaconvexityViolation {
                iteration: n,
                vertex: worst_vertex,
                residual: worst,
                bound: bound_next,
                trace: Some(Box::new(trace)),
            });
        }
        residual_max = worst;
        n += 1;
    }

    Ok(SelectionTrace {
        config: config.clone(),
        schedule: plan.schedule,
        iterates,
        per_iter,
        final_residual: residual_max,
        certified: true,
        warnings,
    })
}

fn residuals(phi: &SetValuedMap, f: &VertexFunction) -> Result<Vec<f64>, SelectionError> {
    let out = exec::map_indexed(phi.len(), |v| {
        phi.value(v)
            .distance_to(f.value(v))
            .map_err(SelectionError::Map)
    });
    out.into_iter().collect()
}

fn argmax(xs: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    (best, xs[best])
}

/// Advisory estimate: is every cloud value alpha-paraconvex at a coarse
/// budget? Violations are reported as warnings, not errors; the per-iteration
/// certification is what actually gates the run.
fn advisory_value_check(phi: &SetValuedMap, alpha: f64) -> Vec<String> {
    let budget = GridBudget::coarse();
    let mut warnings = Vec::new();
    for (v, value) in phi.values().iter().enumerate() {
        let SetValue::Cloud(cloud) = value else {
            continue;
        };
        if cloud.len() < 2 {
            continue;
        }
        let grids = paraconvexity::default_grids(cloud, &budget);
        match paraconvexity::is_alpha_paraconvex(cloud, alpha, &grids) {
            Ok(check) if !check.holds => {
                let est = check.witness.map(|w| w.alpha_hat).unwrap_or(f64::NAN);
                warnings.push(format!(
                    "vertex {v}: value defect estimate {est:.4} exceeds alpha {alpha}"
                ));
            }
            Ok(_) => {}
            Err(e) => warnings.push(format!("vertex {v}: advisory defect check failed: {e}")),
        }
        if warnings.len() >= 16 {
            warnings.push("advisory check truncated after 16 findings".into());
            break;
        }
    }
    warnings
}

/// Advisory residual at simplex midpoints, measured against the union of the
/// simplex's vertex values (the map is only sampled at vertices).
fn midpoint_spot_check(phi: &SetValuedMap, f: &VertexFunction) -> Option<f64> {
    let simplices = phi.domain().simplices()?;
    let mut worst = 0.0f64;
    for s in simplices {
        if s.len() < 2 {
            continue;
        }
        let mid = f.simplex_midpoint(s);
        let mut nearest = f64::INFINITY;
        for &v in s {
            let d = phi.value(v).distance_to(&mid).ok()?;
            nearest = nearest.min(d);
        }
        worst = worst.max(nearest);
    }
    Some(worst)
}

/// One inequality family of the replay report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    /// Minimum of `bound - value` over all checks; negative means violated.
    pub worst_slack: f64,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub iteration: usize,
    pub vertex: usize,
    pub value: f64,
    pub bound: f64,
}

/// Independent replay of every inequality in a trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificationReport {
    pub residual_bounds: InequalityCheck,
    pub step_bounds: InequalityCheck,
    pub telescoping: InequalityCheck,
    pub final_drift: InequalityCheck,
    pub certified: bool,
}

impl CertificationReport {
    pub fn violation_count(&self) -> usize {
        self.residual_bounds.violations.len()
            + self.step_bounds.violations.len()
            + self.telescoping.violations.len()
            + self.final_drift.violations.len()
    }
}

/// Replay a trace against the map with no engine state reused: residual
/// bounds `d(f_n(x), phi(x)) <= rho_n`, step bounds
/// `d(f_n(x), f_{n+1}(x)) <= rho_n`, the telescoped drift
/// `d(g(x), f_{n+1}(x)) <= sum_{i<=n} rho_i`, and the final bound
/// `d(g(x), f(x)) <= delta * r0`.
pub fn verify_trace(
    trace: &SelectionTrace,
    phi: &SetValuedMap,
) -> Result<CertificationReport, SelectionError> {
    if trace.iterates.is_empty() {
        return Err(SelectionError::BadConfig("empty trace".into()));
    }
    check_shapes(phi, &trace.iterates[0])?;
    let n_iter = trace.iterates.len() - 1;
    let radii = trace.bound_radii(n_iter + 1)?;

    let mut eq2 = InequalityCheck {
        name: "residual d(f_n, phi) <= rho_n".into(),
        worst_slack: f64::INFINITY,
        violations: Vec::new(),
    };
    let mut eq3 = InequalityCheck {
        name: "step d(f_n, f_{n+1}) <= rho_n".into(),
        worst_slack: f64::INFINITY,
        violations: Vec::new(),
    };
    let mut tele = InequalityCheck {
        name: "drift d(g, f_{n+1}) <= sum rho_i".into(),
        worst_slack: f64::INFINITY,
        violations: Vec::new(),
    };
    let mut fin = InequalityCheck {
        name: "final d(g, f) <= delta * r0".into(),
        worst_slack: f64::INFINITY,
        violations: Vec::new(),
    };

    let g = &trace.iterates[0];
    let mut partial_sum = 0.0f64;
    for n in 0..=n_iter {
        let f_n = &trace.iterates[n];
        for v in 0..phi.len() {
            let d = phi.value(v).distance_to(f_n.value(v))?;
            record(&mut eq2, radii[n], d, n, v);
        }
        if n < n_iter {
            let f_next = &trace.iterates[n + 1];
            partial_sum += radii[n];
            for v in 0..phi.len() {
                let step_len = f_n.value(v).dist(f_next.value(v));
                record(&mut eq3, radii[n], step_len, n, v);
                let drift = g.value(v).dist(f_next.value(v));
                record(&mut tele, partial_sum, drift, n, v);
            }
        }
    }
    let f_final = trace.final_fn();
    let delta_bound = trace.config.delta * trace.config.r0;
    for v in 0..phi.len() {
        let drift = g.value(v).dist(f_final.value(v));
        record(&mut fin, delta_bound, drift, n_iter, v);
    }

    let certified = eq2.violations.is_empty()
        && eq3.violations.is_empty()
        && tele.violations.is_empty()
        && fin.violations.is_empty();
    Ok(CertificationReport {
        residual_bounds: eq2,
        step_bounds: eq3,
        telescoping: tele,
        final_drift: fin,
        certified,
    })
}

fn record(check: &mut InequalityCheck, bound: f64, value: f64, iteration: usize, vertex: usize) {
    let slack = bound - value;
    if slack < check.worst_slack {
        check.worst_slack = slack;
    }
    if slack < -TOL_GEO {
        check.violations.push(Violation {
            iteration,
            vertex,
            value,
            bound,
        });
    }
}
