//! Property tests for the geometric and estimation invariants.

use paraselect_core::geom::{
    ball_intersect, convex_hull, distance_to_cloud, distance_to_hull, hausdorff_semidistance,
    Ball, Point, PointCloud, TOL_GEO,
};
use paraselect_core::multimap::{preimage, DomainComplex, SetValue, SetValuedMap};
use paraselect_core::paraconvexity::{
    default_grids, defect, DefectGrids, GridBudget, HullSampling,
};
use paraselect_core::selection::{run, step, SelectionConfig, VertexFunction};
use paraselect_core::semenov::{h_iterates, ScalarFn};
use proptest::prelude::*;

fn cloud_strategy(dim: usize, max_points: usize) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec(
        prop::collection::vec(-4.0f64..4.0, dim),
        1..=max_points,
    )
    .prop_map(|rows| PointCloud::from_rows(rows).unwrap())
}

// Geometric radii bounded away from the admissibility edge d(p, P) = r.
fn robust_radii(cloud: &PointCloud) -> Vec<f64> {
    let diam = cloud.diameter();
    let lo = 0.55 * diam.max(1e-6);
    (0..8)
        .map(|k| lo * (2.0 * diam / lo).powf(k as f64 / 7.0))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn member_distance_zero_nonmember_positive(cloud in cloud_strategy(2, 8), idx in 0usize..8) {
        let p = cloud.points()[idx % cloud.len()].clone();
        prop_assert_eq!(distance_to_cloud(&p, &cloud).unwrap(), 0.0);
        let away = Point::new(vec![p.coords()[0] + 9.5, p.coords()[1]]).unwrap();
        prop_assert!(distance_to_cloud(&away, &cloud).unwrap() > 0.0);
    }

    #[test]
    fn hull_projection_dominated_by_vertex_distance(
        cloud in cloud_strategy(2, 8),
        qx in -6.0f64..6.0,
        qy in -6.0f64..6.0,
    ) {
        let q = Point::new(vec![qx, qy]).unwrap();
        let hull = convex_hull(&cloud);
        let proj = distance_to_hull(&q, &hull).unwrap();
        let vert_cloud = PointCloud::new(hull.vertices().to_vec()).unwrap();
        let to_verts = distance_to_cloud(&q, &vert_cloud).unwrap();
        prop_assert!(proj.distance <= to_verts + TOL_GEO);
        // Stationarity of the nearest point.
        for v in hull.vertices() {
            let lhs: f64 = q
                .coords()
                .iter()
                .zip(proj.point.coords())
                .map(|(a, b)| a - b)
                .zip(v.coords().iter().zip(proj.point.coords()).map(|(a, b)| a - b))
                .map(|(x, y)| x * y)
                .sum();
            prop_assert!(lhs <= TOL_GEO, "stationarity violated: {lhs}");
        }
    }

    #[test]
    fn hull_idempotent_and_contains_inputs(cloud in cloud_strategy(2, 9)) {
        let h1 = convex_hull(&cloud);
        let again = PointCloud::new(h1.vertices().to_vec()).unwrap();
        let h2 = convex_hull(&again);
        prop_assert_eq!(h1.vertices().len(), h2.vertices().len());
        for p in cloud.points() {
            let proj = distance_to_hull(p, &h1).unwrap();
            prop_assert!(proj.distance <= 1e-7, "input point {:?} left the hull", p);
        }
    }

    #[test]
    fn semidistance_zero_both_ways_means_equal(a in cloud_strategy(2, 6), b in cloud_strategy(2, 6)) {
        let ab = hausdorff_semidistance(&a, &b).unwrap();
        let ba = hausdorff_semidistance(&b, &a).unwrap();
        if ab == 0.0 && ba == 0.0 {
            // Equal as point sets: every point of each is a member of the other.
            for p in a.points() {
                prop_assert_eq!(distance_to_cloud(p, &b).unwrap(), 0.0);
            }
            for p in b.points() {
                prop_assert_eq!(distance_to_cloud(p, &a).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn ball_intersect_respects_strictness(cloud in cloud_strategy(2, 8), r in 0.1f64..5.0) {
        let center = cloud.points()[0].clone();
        let ball = Ball::new(center.clone(), r).unwrap();
        if let Some(hit) = ball_intersect(&cloud, &ball).unwrap() {
            for p in hit.points() {
                prop_assert!(center.dist(p) < r);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // Every point set in Euclidean space has defect at most 1.
    #[test]
    fn defect_never_exceeds_one(cloud in cloud_strategy(2, 8)) {
        let grids = default_grids(&cloud, &GridBudget::coarse());
        let report = defect(&cloud, &grids).unwrap();
        prop_assert!(report.alpha_hat <= 1.0 + 1e-9, "alpha {}", report.alpha_hat);
        prop_assert!(report.alpha_hat >= 0.0);
    }

    // The ratio d(q, P) / r is scale-free, so scaling the cloud and grids
    // together leaves the estimate unchanged. Radii sit clearly off the
    // admissibility boundary d(p, P) = r, where a half-ulp of rounding can
    // flip a knife-edge cell in exactly one of the two sweeps.
    #[test]
    fn defect_scale_invariance(cloud in cloud_strategy(2, 6), scale in 0.5f64..3.0) {
        prop_assume!(cloud.diameter() > 0.1);
        let mut grids = default_grids(&cloud, &GridBudget::coarse());
        grids.radii = robust_radii(&cloud);
        grids.sampling = HullSampling { random_samples: 0, ascent_steps: 12, seed: 0 };
        grids.refine_rounds = 0;
        let base = defect(&cloud, &grids).unwrap();

        let scaled_cloud = PointCloud::from_rows(
            cloud.points().iter().map(|p| p.coords().iter().map(|c| c * scale).collect()).collect(),
        ).unwrap();
        let scaled_grids = DefectGrids {
            centers: grids
                .centers
                .iter()
                .map(|p| Point::new(p.coords().iter().map(|c| c * scale).collect()).unwrap())
                .collect(),
            radii: grids.radii.iter().map(|r| r * scale).collect(),
            sampling: grids.sampling.clone(),
            refine_rounds: 0,
        };
        let scaled = defect(&scaled_cloud, &scaled_grids).unwrap();
        prop_assert!(
            (base.alpha_hat - scaled.alpha_hat).abs() <= 1e-7,
            "{} vs {}", base.alpha_hat, scaled.alpha_hat
        );
    }

    // Isometry invariance of the deterministic candidate set (random
    // interior draws are seeded by cell content, so they are reproducible
    // but not rotation-paired; they are disabled here). Radii avoid the
    // admissibility knife edge for the same reason as above.
    #[test]
    fn defect_isometry_invariance(cloud in cloud_strategy(2, 6), theta in 0.0f64..std::f64::consts::TAU, tx in -2.0f64..2.0) {
        prop_assume!(cloud.diameter() > 0.1);
        let mut grids = default_grids(&cloud, &GridBudget::coarse());
        grids.radii = robust_radii(&cloud);
        grids.sampling = HullSampling { random_samples: 0, ascent_steps: 12, seed: 0 };
        grids.refine_rounds = 0;
        let base = defect(&cloud, &grids).unwrap();

        let rot = |p: &[f64]| -> Vec<f64> {
            vec![
                theta.cos() * p[0] - theta.sin() * p[1] + tx,
                theta.sin() * p[0] + theta.cos() * p[1],
            ]
        };
        let moved_cloud = PointCloud::from_rows(
            cloud.points().iter().map(|p| rot(p.coords())).collect(),
        ).unwrap();
        let moved_grids = DefectGrids {
            centers: grids.centers.iter().map(|p| Point::new(rot(p.coords())).unwrap()).collect(),
            radii: grids.radii.clone(),
            sampling: grids.sampling.clone(),
            refine_rounds: 0,
        };
        let moved = defect(&moved_cloud, &moved_grids).unwrap();
        prop_assert!(
            (base.alpha_hat - moved.alpha_hat).abs() <= 1e-7,
            "{} vs {}", base.alpha_hat, moved.alpha_hat
        );
    }

    // Refining a grid only ever raises the sampled maximum.
    #[test]
    fn defect_grid_monotonicity(cloud in cloud_strategy(1, 6), extra_radius in 0.3f64..4.0) {
        let mut grids = default_grids(&cloud, &GridBudget::coarse());
        grids.refine_rounds = 0;
        let base = defect(&cloud, &grids).unwrap();
        let mut richer = grids.clone();
        richer.radii.push(extra_radius * (1.0 + cloud.diameter()));
        let denser: Vec<Point> = richer
            .centers
            .windows(2)
            .map(|w| {
                Point::new(
                    w[0].coords()
                        .iter()
                        .zip(w[1].coords())
                        .map(|(a, b)| 0.5 * (a + b))
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        richer.centers.extend(denser);
        let refined = defect(&cloud, &richer).unwrap();
        prop_assert!(refined.alpha_hat >= base.alpha_hat - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn preimage_monotone_in_radius(r1 in 0.2f64..3.0, r2 in 0.2f64..3.0) {
        let (small, large) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let domain = DomainComplex::grid_1d(6, 0.0, 1.0).unwrap();
        let values: Vec<SetValue> = domain
            .vertices()
            .iter()
            .map(|p| {
                SetValue::Cloud(
                    PointCloud::from_rows(vec![vec![p.coords()[0] * 3.0]]).unwrap(),
                )
            })
            .collect();
        let phi = SetValuedMap::new(domain, values, 1).unwrap();
        let b_small = Ball::new(Point::scalar(0.0), small).unwrap();
        let b_large = Ball::new(Point::scalar(0.0), large).unwrap();
        let inner = preimage(&phi, &b_small).unwrap();
        let outer = preimage(&phi, &b_large).unwrap();
        for v in inner {
            prop_assert!(outer.contains(&v));
        }
    }

    #[test]
    fn step_displacement_bounded_by_radius(offset in 0.05f64..0.9, radius in 0.1f64..1.5) {
        let rows: Vec<Vec<f64>> = (0..=10).map(|k| vec![k as f64 * 0.1, 0.0]).collect();
        let cloud = PointCloud::from_rows(rows).unwrap();
        let domain = DomainComplex::grid_1d(3, 0.0, 1.0).unwrap();
        let phi = SetValuedMap::new(domain, vec![SetValue::Cloud(cloud); 3], 2).unwrap();
        let f = VertexFunction::new(vec![Point::new(vec![0.5, offset]).unwrap(); 3]).unwrap();
        if offset < radius {
            let next = step(&phi, &f, radius).unwrap();
            for v in 0..3 {
                prop_assert!(f.value(v).dist(next.value(v)) <= radius + TOL_GEO);
            }
        }
    }

    #[test]
    fn constant_cap_reduces_to_powers(gamma_m in 1u32..=9, t in 0.1f64..10.0) {
        let gamma = gamma_m as f64 / 10.0;
        let cap = ScalarFn::constant(gamma).unwrap();
        let series = h_iterates(&cap, t, 40).unwrap();
        for (n, h) in series.iterates.iter().enumerate() {
            prop_assert!((h - gamma.powi(n as i32)).abs() <= 1e-12 * (1.0 + h.abs()));
        }
        prop_assert_eq!(series.iterates[0], 1.0);
        let sum: f64 = series.partial_sums.last().copied().unwrap();
        prop_assert!((sum - (1.0 - gamma.powi(41)) / (1.0 - gamma)).abs() < 1e-9);
    }
}

// Certified traces satisfy the Cauchy bound
// max_x d(f_n(x), f_m(x)) <= r0 * gamma^min(n,m) / (1 - gamma).
#[test]
fn certified_trace_is_cauchy() {
    let rows: Vec<Vec<f64>> = (0..=20).map(|k| vec![k as f64 * 0.05, 0.0]).collect();
    let cloud = PointCloud::from_rows(rows).unwrap();
    let domain = DomainComplex::grid_1d(5, 0.0, 1.0).unwrap();
    let phi = SetValuedMap::new(domain, vec![SetValue::Cloud(cloud); 5], 2).unwrap();
    let g = VertexFunction::new(vec![Point::new(vec![0.3, 0.8]).unwrap(); 5]).unwrap();
    let config = SelectionConfig::with_gamma(0.2, 0.6, 1.0);
    let trace = run(&phi, &g, &config).unwrap();
    assert!(trace.certified);
    let n_it = trace.iterates.len();
    for i in 0..n_it {
        for j in i..n_it {
            let d = trace.iterates[i].max_distance_to(&trace.iterates[j]);
            let bound = config.r0 * config.gamma.powi(i as i32) / (1.0 - config.gamma);
            assert!(d <= bound + TOL_GEO, "d(f_{i}, f_{j}) = {d} > {bound}");
        }
    }
}
