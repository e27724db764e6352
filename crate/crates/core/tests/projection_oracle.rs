//! Cross-checks of the nearest-point projection against two independent
//! routes: an exact active-subset solver (every candidate face solved in
//! closed form) and a dense grid over convex-combination weights.

use paraselect_core::{convex_hull, distance_to_hull, Point, PointCloud, TOL_GEO};
use proptest::prelude::*;

/// Exact distance from `q` to `conv(verts)` by enumerating affine subsets
/// up to dimension + 1, solving the equality-constrained projection on each,
/// and keeping feasible (nonnegative-weight) solutions. Carathéodory
/// guarantees the minimizing face shows up among them.
fn subset_projection_distance(q: &[f64], verts: &[Vec<f64>]) -> f64 {
    let dim = q.len();
    let max_k = (dim + 1).min(verts.len());
    let mut best = f64::INFINITY;
    let mut subset: Vec<usize> = Vec::new();
    enumerate(verts.len(), max_k, &mut subset, &mut |chosen: &[usize]| {
        if let Some(d) = face_distance(q, verts, chosen) {
            if d < best {
                best = d;
            }
        }
    });
    best
}

fn enumerate(n: usize, max_k: usize, current: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    fn rec(
        start: usize,
        n: usize,
        max_k: usize,
        current: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if !current.is_empty() {
            visit(current);
        }
        if current.len() == max_k {
            return;
        }
        for i in start..n {
            current.push(i);
            rec(i + 1, n, max_k, current, visit);
            current.pop();
        }
    }
    rec(0, n, max_k, current, visit);
}

/// Projection of `q` onto the affine hull of the chosen vertices via the
/// KKT system; `None` when the system is singular or the weights leave the
/// simplex.
fn face_distance(q: &[f64], verts: &[Vec<f64>], chosen: &[usize]) -> Option<f64> {
    let k = chosen.len();
    let shifted: Vec<Vec<f64>> = chosen
        .iter()
        .map(|&i| verts[i].iter().zip(q).map(|(a, b)| a - b).collect())
        .collect();
    if k == 1 {
        return Some(norm(&shifted[0]));
    }
    let n = k + 1;
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for r in 0..k {
        for c in 0..k {
            a[r][c] = dot(&shifted[r], &shifted[c]);
        }
        a[r][k] = 1.0;
        a[k][r] = 1.0;
    }
    a[k][n] = 1.0;
    let sol = gauss(&mut a)?;
    let weights = &sol[..k];
    if weights.iter().any(|w| *w < -1e-10) {
        return None;
    }
    let mut x = vec![0.0; q.len()];
    for (w, u) in weights.iter().zip(&shifted) {
        for (xc, uc) in x.iter_mut().zip(u) {
            *xc += w * uc;
        }
    }
    Some(norm(&x))
}

fn gauss(a: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = a.len();
    let scale = a
        .iter()
        .flat_map(|row| row.iter().take(n))
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        if a[piv][col].abs() < 1e-12 * scale.max(1.0) {
            return None;
        }
        a.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
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

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Dense sweep over the weight simplex for up to three vertices.
fn grid_projection_distance(q: &[f64], verts: &[Vec<f64>], step: f64) -> f64 {
    let m = (1.0 / step).round() as usize;
    let mut best = f64::INFINITY;
    match verts.len() {
        1 => best = dist(q, &verts[0]),
        2 => {
            for i in 0..=m {
                let w = i as f64 / m as f64;
                let x: Vec<f64> = verts[0]
                    .iter()
                    .zip(&verts[1])
                    .map(|(a, b)| w * a + (1.0 - w) * b)
                    .collect();
                best = best.min(dist(q, &x));
            }
        }
        3 => {
            for i in 0..=m {
                for j in 0..=(m - i) {
                    let (w0, w1) = (i as f64 / m as f64, j as f64 / m as f64);
                    let w2 = 1.0 - w0 - w1;
                    let x: Vec<f64> = (0..q.len())
                        .map(|c| w0 * verts[0][c] + w1 * verts[1][c] + w2 * verts[2][c])
                        .collect();
                    best = best.min(dist(q, &x));
                }
            }
        }
        _ => unreachable!("grid oracle is for <= 3 vertices"),
    }
    best
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn mnp_distance(q: &[f64], verts: &[Vec<f64>]) -> f64 {
    let cloud = PointCloud::from_rows(verts.to_vec()).unwrap();
    let hull = convex_hull(&cloud);
    let proj = distance_to_hull(&Point::new(q.to_vec()).unwrap(), &hull).unwrap();
    proj.distance
}

#[test]
fn frozen_analytic_cases() {
    // Projection of (1,1) onto the unit triangle lands on x + y = 1.
    let verts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
    let q = [1.0, 1.0];
    let exact = std::f64::consts::FRAC_1_SQRT_2;
    assert!((mnp_distance(&q, &verts) - exact).abs() < 1e-9);
    assert!((subset_projection_distance(&q, &verts) - exact).abs() < 1e-12);

    // Segment endpoint.
    let seg = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
    assert!((mnp_distance(&[2.0, 0.0], &seg) - 1.0).abs() < 1e-9);
    assert!((subset_projection_distance(&[2.0, 0.0], &seg) - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn matches_subset_solver(
        dim in 1usize..=3,
        n in 1usize..=8,
        seed_coords in prop::collection::vec(-5.0f64..5.0, 4 * 9),
    ) {
        let verts: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..dim).map(|d| seed_coords[i * 4 + d]).collect())
            .collect();
        let q: Vec<f64> = (0..dim).map(|d| seed_coords[8 * 4 + d]).collect();
        let ours = mnp_distance(&q, &verts);
        let exact = subset_projection_distance(&q, &verts);
        prop_assert!(
            (ours - exact).abs() <= 1e-8 * (1.0 + exact),
            "ours {ours} vs exact {exact}"
        );
    }

    #[test]
    fn bounded_by_grid_oracle(
        dim in 2usize..=3,
        n in 1usize..=3,
        seed_coords in prop::collection::vec(-3.0f64..3.0, 4 * 4),
    ) {
        let verts: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..dim).map(|d| seed_coords[i * 4 + d]).collect())
            .collect();
        let q: Vec<f64> = (0..dim).map(|d| seed_coords[3 * 4 + d]).collect();
        let ours = mnp_distance(&q, &verts);
        let grid = grid_projection_distance(&q, &verts, 1e-3);
        // The grid overestimates the true minimum by at most its spacing
        // times the vertex spread; ours must sit at or below it.
        prop_assert!(ours <= grid + TOL_GEO, "ours {ours} above grid {grid}");
        let spread = verts
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |a, b| a.max(b.abs()));
        prop_assert!(grid - ours <= 4e-3 * (1.0 + spread), "grid {grid} far from ours {ours}");
    }
}
