//! Nearest-point projection onto the convex hull of a finite vertex set.
//!
//! Implements Wolfe's minimum-norm-point scheme: grow a corral of vertices,
//! project onto its affine hull (a small dense solve), and walk the weights
//! back into the simplex when the affine minimizer leaves it. The dual gap
//! `max_v (q - x) . (v - x)` certifies stationarity on exit.

/// Outcome of a minimum-norm-point search.
#[derive(Debug, Clone)]
pub(crate) struct MnpOutcome {
    pub point: Vec<f64>,
    pub distance: f64,
    /// Worst stationarity violation `max_v (q - x) . (v - x)` at the returned point.
    pub gap: f64,
    pub converged: bool,
}

const WEIGHT_DROP: f64 = 1e-14;
const NEG_WEIGHT_TOL: f64 = 1e-12;

/// Nearest point of `conv(verts)` to `q`, to within dual gap `stop_gap`.
pub(crate) fn min_norm_point(q: &[f64], verts: &[&[f64]], stop_gap: f64) -> MnpOutcome {
    debug_assert!(!verts.is_empty());
    let dim = q.len();

    // Work with shifted vertices u_i = v_i - q; we minimize |x| over conv(u).
    let shifted: Vec<Vec<f64>> = verts
        .iter()
        .map(|v| v.iter().zip(q).map(|(a, b)| a - b).collect())
        .collect();

    if shifted.len() == 1 {
        let x = shifted[0].clone();
        return finish(q, &x, &shifted);
    }

    // Corral state: member indices and matching simplex weights.
    let start = argmin_norm(&shifted);
    let mut corral: Vec<usize> = vec![start];
    let mut weights: Vec<f64> = vec![1.0];
    let mut x = shifted[start].clone();

    let max_major = 200 + 20 * shifted.len();
    let mut best: Option<MnpOutcome> = None;

    for _ in 0..max_major {
        // Most inward vertex relative to the current iterate.
        let mut s = 0;
        let mut min_dot = f64::INFINITY;
        for (i, u) in shifted.iter().enumerate() {
            let d = dot(&x, u);
            if d < min_dot {
                min_dot = d;
                s = i;
            }
        }
        let xx = dot(&x, &x);
        let gap = xx - min_dot;

        let here = finish(q, &x, &shifted);
        if best.as_ref().map_or(true, |b| here.gap < b.gap) {
            best = Some(here.clone());
        }
        if gap <= stop_gap {
            return MnpOutcome {
                converged: true,
                ..here
            };
        }
        if corral.contains(&s) {
            // The affine solve already made the corral stationary; a corral
            // member reappearing with positive gap means we are at the limit
            // of floating point, so stop with the best iterate seen.
            break;
        }
        corral.push(s);
        weights.push(0.0);

        // Minor cycle: project onto the affine hull of the corral, shrinking
        // the corral until the affine minimizer has nonnegative weights.
        let mut minor_guard = corral.len() + 2;
        loop {
            match affine_minimizer(&shifted, &corral) {
                Some(w_aff) => {
                    let min_w = w_aff.iter().cloned().fold(f64::INFINITY, f64::min);
                    if min_w >= -NEG_WEIGHT_TOL {
                        weights = w_aff.iter().map(|w| w.max(0.0)).collect();
                        normalize(&mut weights);
                        break;
                    }
                    // Step from the current weights toward w_aff until the
                    // first coordinate hits zero, then drop it.
                    let mut theta = 1.0f64;
                    for (wi, ai) in weights.iter().zip(&w_aff) {
                        if ai < wi {
                            theta = theta.min(wi / (wi - ai));
                        }
                    }
                    for (wi, ai) in weights.iter_mut().zip(&w_aff) {
                        *wi = (1.0 - theta) * *wi + theta * ai;
                    }
                }
                None => {
                    // Singular corral (affinely dependent); drop the lightest
                    // member other than the newest and retry.
                    let drop = lightest(&weights, corral.len() - 1);
                    corral.remove(drop);
                    weights.remove(drop);
                    normalize(&mut weights);
                    if corral.len() <= 1 {
                        break;
                    }
                    continue;
                }
            }
            // Remove zeroed members.
            let mut i = 0;
            let mut dropped = false;
            while i < corral.len() {
                if weights[i] <= WEIGHT_DROP && corral.len() > 1 {
                    corral.remove(i);
                    weights.remove(i);
                    dropped = true;
                } else {
                    i += 1;
                }
            }
            normalize(&mut weights);
            if !dropped {
                break;
            }
            minor_guard -= 1;
            if minor_guard == 0 {
                break;
            }
        }

        x = combine(&shifted, &corral, &weights, dim);
    }

    best.unwrap_or_else(|| finish(q, &x, &shifted))
}

fn finish(q: &[f64], x: &[f64], shifted: &[Vec<f64>]) -> MnpOutcome {
    let xx = dot(x, x);
    let min_dot = shifted
        .iter()
        .map(|u| dot(x, u))
        .fold(f64::INFINITY, f64::min);
    MnpOutcome {
        point: x.iter().zip(q).map(|(a, b)| a + b).collect(),
        distance: xx.sqrt(),
        gap: xx - min_dot,
        converged: false,
    }
}

fn argmin_norm(us: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_n = f64::INFINITY;
    for (i, u) in us.iter().enumerate() {
        let n = dot(u, u);
        if n < best_n {
            best_n = n;
            best = i;
        }
    }
    best
}

fn lightest(weights: &[f64], skip: usize) -> usize {
    if weights.len() == 1 {
        return 0;
    }
    let mut best = if skip == 0 { 1 } else { 0 };
    for (i, w) in weights.iter().enumerate() {
        if i != skip && *w < weights[best] {
            best = i;
        }
    }
    best
}

fn combine(us: &[Vec<f64>], corral: &[usize], weights: &[f64], dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for (&i, &w) in corral.iter().zip(weights) {
        for (xj, uj) in x.iter_mut().zip(&us[i]) {
            *xj += w * uj;
        }
    }
    x
}

fn normalize(weights: &mut [f64]) {
    let sum: f64 = weights.iter().sum();
    if sum > 0.0 {
        for w in weights.iter_mut() {
            *w /= sum;
        }
    }
}

/// Minimizer of `|sum w_i u_i|` subject to `sum w_i = 1` over the corral,
/// via the KKT system `[G 1; 1^T 0] [w; lambda] = [0; 1]`.
fn affine_minimizer(us: &[Vec<f64>], corral: &[usize]) -> Option<Vec<f64>> {
    let k = corral.len();
    let n = k + 1;
    let mut a = vec![vec![0.0f64; n + 1]; n];
    let mut scale = 0.0f64;
    for r in 0..k {
        for c in 0..k {
            let g = dot(&us[corral[r]], &us[corral[c]]);
            a[r][c] = g;
            scale = scale.max(g.abs());
        }
        a[r][k] = 1.0;
        a[k][r] = 1.0;
    }
    a[k][n] = 1.0;
    let pivot_floor = 1e-13 * scale.max(1.0);
    solve_in_place(&mut a, pivot_floor).map(|sol| sol[..k].to_vec())
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_in_place(a: &mut [Vec<f64>], pivot_floor: f64) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        if a[piv][col].abs() < pivot_floor {
            return None;
        }
        a.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..=n {
                let upper = a[col][c];
                a[row][c] -= f * upper;
            }
        }
    }
    let mut sol = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = a[row][n];
        for c in row + 1..n {
            acc -= a[row][c] * sol[c];
        }
        sol[row] = acc / a[row][row];
    }
    Some(sol)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projects_onto_triangle_edge() {
        let q = [1.0, 1.0];
        let verts: Vec<&[f64]> = vec![&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]];
        let out = min_norm_point(&q, &verts, 5e-10);
        assert!(out.converged);
        assert!((out.distance - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!((out.point[0] - 0.5).abs() < 1e-9);
        assert!((out.point[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn interior_query_reaches_zero() {
        let q = [0.25, 0.25];
        let verts: Vec<&[f64]> = vec![&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]];
        let out = min_norm_point(&q, &verts, 5e-10);
        assert!(out.distance < 1e-7, "distance {}", out.distance);
    }

    #[test]
    fn single_vertex() {
        let q = [2.0, 0.0];
        let verts: Vec<&[f64]> = vec![&[0.0, 0.0]];
        let out = min_norm_point(&q, &verts, 5e-10);
        assert_eq!(out.point, vec![0.0, 0.0]);
        assert!((out.distance - 2.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_vertices_do_not_stall() {
        let q = [3.0, 4.0];
        let verts: Vec<&[f64]> = vec![&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]];
        let out = min_norm_point(&q, &verts, 5e-10);
        assert!((out.distance - (2.0f64 * 2.0 + 16.0).sqrt()).abs() < 1e-9);
    }
}
