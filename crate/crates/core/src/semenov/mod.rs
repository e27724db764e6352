//! Functional paraconvexity: the damping recursion, the strict-domination
//! check, and radius schedules for the selection engine.
//!
//! For a damping function `H : (0, inf) -> [0, 1)` the recursion is
//! `H_0(t) = 1`, `H_{n+1}(t) = H(H_n(t) * t) * H_n(t)`. A defect profile `h`
//! qualifies when some `H` strictly dominates it with `sum_n H_n(t)` finite
//! for every `t`; the engine then runs with radii `rho_n = H_n(r0) * r0`.
//! A constant pair `(h, H) = (alpha, gamma)` reproduces the constant-rate
//! engine exactly.

mod scalar_fn;

pub use scalar_fn::ScalarFn;

use crate::error::SemenovError;
use crate::multimap::{SetValue, SetValuedMap};
use crate::paraconvexity::{self, GridBudget};
use crate::selection::{
    run_with_plan, RadiusSchedule, RunPlan, SelectionConfig, SelectionTrace, VertexFunction,
};
use serde::{Deserialize, Serialize};

/// Iterates of the damping recursion at a fixed argument.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HSeries {
    pub t: f64,
    /// `H_0(t), H_1(t), ..., H_n(t)`; always starts at exactly 1.
    pub iterates: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub converged: bool,
    /// Geometric bound on the dropped tail, from the worst ratio seen over
    /// the visited tail.
    pub tail_bound: f64,
}

impl HSeries {
    pub fn sum_estimate(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0) + self.tail_bound
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,h_n,partial_sum\n");
        for (n, (h, s)) in self.iterates.iter().zip(&self.partial_sums).enumerate() {
            out.push_str(&format!("{n},{h},{s}\n"));
        }
        out
    }
}

/// Run the recursion for `n_max` steps (producing `n_max + 1` iterates).
pub fn h_iterates(cap: &ScalarFn, t: f64, n_max: usize) -> Result<HSeries, SemenovError> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(SemenovError::BadGrid);
    }
    let mut iterates = vec![1.0f64];
    let mut partial_sums = vec![1.0f64];
    let mut ratios: Vec<f64> = Vec::new();
    for _ in 0..n_max {
        let current = *iterates.last().expect("nonempty");
        if current <= 1e-300 {
            break;
        }
        let ratio = cap.eval(current * t)?;
        ratios.push(ratio);
        let next = ratio * current;
        iterates.push(next);
        partial_sums.push(partial_sums.last().unwrap() + next);
    }
    // Ratio bound over the visited tail (last quarter of the run).
    let tail_start = ratios.len().saturating_sub((ratios.len() / 4).max(1));
    let q = ratios[tail_start..]
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    let (converged, tail_bound) = if ratios.is_empty() {
        (false, f64::INFINITY)
    } else if q < 1.0 - 1e-12 {
        let last = *iterates.last().unwrap();
        (true, last * q / (1.0 - q))
    } else {
        (false, f64::INFINITY)
    };
    Ok(HSeries {
        t,
        iterates,
        partial_sums,
        converged,
        tail_bound,
    })
}

/// Per-argument entry of the property check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsEntry {
    pub t: f64,
    pub delta_estimate: f64,
    pub converged: bool,
    pub tail_bound: f64,
}

/// Result of checking strict domination plus series convergence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsReport {
    pub satisfied: bool,
    /// Minimum of `H(s) - h(s)` over every sampled argument.
    pub min_gap: f64,
    /// An argument where strict domination fails, when it does.
    pub witness: Option<f64>,
    pub entries: Vec<PsEntry>,
    pub max_delta: f64,
}

/// Check that `cap` strictly dominates `h` on every argument the recursion
/// visits (plus the grid itself) and that the series converges for each `t`.
pub fn check_ps(
    h: &ScalarFn,
    cap: &ScalarFn,
    t_grid: &[f64],
    n_max: usize,
) -> Result<PsReport, SemenovError> {
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(SemenovError::BadGrid);
    }
    let mut min_gap = f64::INFINITY;
    let mut witness = None;
    let mut entries = Vec::with_capacity(t_grid.len());
    let mut max_delta = 0.0f64;
    let mut all_converged = true;
    for &t in t_grid {
        let series = h_iterates(cap, t, n_max)?;
        // Arguments visited by the recursion, plus t itself.
        for hn in &series.iterates {
            let s = hn * t;
            if !(s > 0.0) {
                continue;
            }
            let gap = cap.eval(s)? - h.eval(s)?;
            if gap < min_gap {
                min_gap = gap;
            }
            if gap <= 0.0 && witness.is_none() {
                witness = Some(s);
            }
        }
        let delta = series.sum_estimate();
        max_delta = max_delta.max(delta);
        all_converged &= series.converged;
        entries.push(PsEntry {
            t,
            delta_estimate: delta,
            converged: series.converged,
            tail_bound: series.tail_bound,
        });
    }
    Ok(PsReport {
        satisfied: witness.is_none() && all_converged,
        min_gap,
        witness,
        entries,
        max_delta,
    })
}

/// Run the selection engine with the functional radius schedule
/// `rho_n = H_n(r0) * r0`.
///
/// Preconditions: `d(g(x), phi(x)) < r0` everywhere, and `(h, cap)` passes
/// the property check at `t = r0`. The per-iteration residual gate is
/// `d(f_{n+1}, phi) <= rho_{n+1}`, exactly the constant-rate gate with the
/// recursion's radii in place of `gamma^n * r0`.
pub fn run_functional(
    phi: &SetValuedMap,
    g: &VertexFunction,
    h: &ScalarFn,
    cap: &ScalarFn,
    r0: f64,
    tol_stop: f64,
) -> Result<SelectionTrace, SemenovError> {
    let max_iters = 10_000usize;
    let ps = check_ps(h, cap, &[r0], max_iters)?;
    if !ps.satisfied {
        return Err(SemenovError::PsViolation {
            witness: ps.witness.unwrap_or(r0),
        });
    }
    let series = h_iterates(cap, r0, max_iters + 1)?;
    let radii: Vec<f64> = series.iterates.iter().map(|hn| hn * r0).collect();

    // Trace-level constants derived from the visited arguments: the sup of h
    // plays alpha, the sup of the visited damping ratios plays gamma.
    let mut h_sup = 0.0f64;
    let mut cap_sup = 0.0f64;
    for hn in &series.iterates {
        let s = hn * r0;
        if s > 0.0 {
            h_sup = h_sup.max(h.eval(s)?);
            cap_sup = cap_sup.max(cap.eval(s)?);
        }
    }
    let gamma = cap_sup.clamp(1e-9, 1.0 - 1e-12);
    let delta = (series.sum_estimate() + 0.01).max(1.0 / (1.0 - gamma) + 0.01);
    let config = SelectionConfig {
        alpha: h_sup.min(gamma * (1.0 - 1e-12)),
        gamma,
        r0,
        delta,
        tol_stop,
        max_iters,
    };

    let warnings = advisory_profile_check(phi, h, &radii);
    let radius_at = |n: usize| radii.get(n).copied().unwrap_or(0.0);
    let mut trace = run_with_plan(
        phi,
        g,
        &config,
        RunPlan {
            schedule: RadiusSchedule::Functional {
                h: h.clone(),
                cap: cap.clone(),
            },
            radius_at: &radius_at,
            advisory: false,
        },
    )
    .map_err(SemenovError::Selection)?;
    let mut merged = warnings;
    merged.append(&mut trace.warnings);
    trace.warnings = merged;
    Ok(trace)
}

/// Advisory: sample the radius-resolved defect profile of a representative
/// value and compare it with `h` on the first few scheduled radii.
fn advisory_profile_check(phi: &SetValuedMap, h: &ScalarFn, radii: &[f64]) -> Vec<String> {
    let Some(cloud) = phi.values().iter().find_map(|v| match v {
        SetValue::Cloud(c) if c.len() >= 2 => Some(c),
        _ => None,
    }) else {
        return Vec::new();
    };
    let probe: Vec<f64> = radii.iter().cloned().filter(|r| *r > 0.0).take(4).collect();
    if probe.is_empty() {
        return Vec::new();
    }
    let mut warnings = Vec::new();
    match paraconvexity::profile(cloud, &probe, &GridBudget::coarse()) {
        Ok(profile) => {
            for (r, h_hat) in profile.radii.iter().zip(&profile.h_hat) {
                match h.eval(*r) {
                    Ok(budget) if *h_hat > budget => warnings.push(format!(
                        "profile estimate {h_hat:.4} at radius {r:.6} exceeds h(r) = {budget:.4}"
                    )),
                    Ok(_) => {}
                    Err(e) => warnings.push(format!("h not evaluable at {r}: {e}")),
                }
            }
        }
        Err(e) => warnings.push(format!("advisory profile failed: {e}")),
    }
    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Point, PointCloud};
    use crate::multimap::DomainComplex;
    use crate::selection::run;

    #[test]
    fn constant_half_iterates() {
        let cap = ScalarFn::constant(0.5).unwrap();
        let series = h_iterates(&cap, 1.0, 4).unwrap();
        assert_eq!(series.iterates, vec![1.0, 0.5, 0.25, 0.125, 0.0625]);
        assert_eq!(*series.partial_sums.last().unwrap(), 1.9375);
        assert!(series.converged);
    }

    #[test]
    fn min_cap_recursion_by_hand() {
        // H(s) = min(s, 0.9) at t = 1: 1, 0.9, 0.81, 0.6561, 0.43046721.
        let cap = ScalarFn::expr("min(t, 0.9)").unwrap();
        let series = h_iterates(&cap, 1.0, 4).unwrap();
        let expected = [1.0, 0.9, 0.81, 0.6561, 0.43046721];
        for (got, want) in series.iterates.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        // Re-derive each step directly from the definition.
        for n in 0..series.iterates.len() - 1 {
            let hn = series.iterates[n];
            let expect = cap.eval(hn * 1.0).unwrap() * hn;
            assert_eq!(series.iterates[n + 1], expect);
        }
    }

    #[test]
    fn zero_steps_is_definitional_one() {
        let cap = ScalarFn::expr("min(t, 0.9)").unwrap();
        let series = h_iterates(&cap, 3.0, 0).unwrap();
        assert_eq!(series.iterates, vec![1.0]);
        assert!(!series.converged);
    }

    #[test]
    fn ps_constant_pair_holds_with_delta_two() {
        let h = ScalarFn::constant(0.4).unwrap();
        let cap = ScalarFn::constant(0.5).unwrap();
        let report = check_ps(&h, &cap, &[0.1, 1.0, 7.0], 200).unwrap();
        assert!(report.satisfied);
        assert!((report.min_gap - 0.1).abs() < 1e-12);
        for e in &report.entries {
            assert!((e.delta_estimate - 2.0).abs() < 1e-10, "{e:?}");
        }
    }

    #[test]
    fn ps_requires_strict_domination() {
        let h = ScalarFn::constant(0.5).unwrap();
        let cap = ScalarFn::constant(0.5).unwrap();
        let report = check_ps(&h, &cap, &[1.0], 100).unwrap();
        assert!(!report.satisfied);
        assert!(report.witness.is_some());
        assert_eq!(report.min_gap, 0.0);
    }

    #[test]
    fn ps_nonconstant_cap() {
        let h = ScalarFn::constant(0.3).unwrap();
        let cap = ScalarFn::expr("min(0.4 + t, 0.9)").unwrap();
        let report = check_ps(&h, &cap, &[1.0], 500).unwrap();
        assert!(report.satisfied);
        let series = h_iterates(&cap, 1.0, 500).unwrap();
        assert!(series.tail_bound < 1e-10);
    }

    #[test]
    fn monotone_damping_non_increasing() {
        let cap = ScalarFn::table(vec![(0.0, 0.2), (10.0, 0.9)]).unwrap();
        let series = h_iterates(&cap, 5.0, 50).unwrap();
        for w in series.iterates.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    fn segment_map(n: usize) -> SetValuedMap {
        let rows: Vec<Vec<f64>> = (0..=10).map(|k| vec![k as f64 * 0.05]).collect();
        let cloud = PointCloud::from_rows(rows).unwrap();
        let domain = DomainComplex::grid_1d(n, 0.0, 1.0).unwrap();
        SetValuedMap::new(domain, vec![SetValue::Cloud(cloud); n], 1).unwrap()
    }

    #[test]
    fn constant_pair_matches_constant_engine() {
        let phi = segment_map(4);
        let g = VertexFunction::new(vec![Point::scalar(1.0); 4]).unwrap();
        let h = ScalarFn::constant(0.4).unwrap();
        let cap = ScalarFn::constant(0.5).unwrap();
        let functional = run_functional(&phi, &g, &h, &cap, 0.8, 1e-8).unwrap();
        let config = SelectionConfig {
            alpha: 0.4,
            gamma: 0.5,
            r0: 0.8,
            delta: 1.0 / 0.5 + 0.01,
            tol_stop: 1e-8,
            max_iters: 10_000,
        };
        let constant = run(&phi, &g, &config).unwrap();
        assert_eq!(functional.iterates.len(), constant.iterates.len());
        for (a, b) in functional.iterates.iter().zip(&constant.iterates) {
            assert!(a.max_distance_to(b) <= 1e-12);
        }
        assert!(functional.certified);

        // Total drift stays within r0 times the series estimate.
        let series = h_iterates(&cap, 0.8, 200).unwrap();
        let drift = g.max_distance_to(functional.final_fn());
        assert!(
            drift <= 0.8 * series.sum_estimate() + 1e-9,
            "drift {drift} above r0 * sum {}",
            0.8 * series.sum_estimate()
        );
    }

    #[test]
    fn profile_derived_table_pair_certifies() {
        // Radius-resolved profile of a representative value as h, with the
        // midpoint cap H = (1 + h) / 2 strictly dominating it.
        let (phi, g) = crate::fixtures::v_graph(11, 41);
        let sample = crate::fixtures::v_cloud(0.5, 41);
        let radii = [0.3, 0.6, 1.0, 1.5];
        let prof = paraconvexity::profile(&sample, &radii, &GridBudget::coarse()).unwrap();
        let h_points: Vec<(f64, f64)> = prof
            .radii
            .iter()
            .zip(&prof.h_hat)
            .map(|(r, h)| (*r, h.min(1.0 - 1e-6)))
            .collect();
        let cap_points: Vec<(f64, f64)> = h_points
            .iter()
            .map(|&(r, h)| (r, (1.0 + h) / 2.0))
            .collect();
        let h = ScalarFn::table(h_points).unwrap();
        let cap = ScalarFn::table(cap_points).unwrap();
        let trace = run_functional(&phi, &g, &h, &cap, 1.0, 1e-8).unwrap();
        assert!(trace.certified);
        let report = crate::selection::verify_trace(&trace, &phi).unwrap();
        assert!(report.certified);
    }

    #[test]
    fn failing_ps_rejected_before_iteration() {
        let phi = segment_map(3);
        let g = VertexFunction::new(vec![Point::scalar(0.9); 3]).unwrap();
        let h = ScalarFn::constant(0.5).unwrap();
        let cap = ScalarFn::constant(0.5).unwrap();
        assert!(matches!(
            run_functional(&phi, &g, &h, &cap, 0.8, 1e-8),
            Err(SemenovError::PsViolation { .. })
        ));
    }
}
