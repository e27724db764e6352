//! Canonical benchmark inputs shared by tests and benches.

use crate::geom::{Point, PointCloud};
use crate::multimap::{DomainComplex, SetValue, SetValuedMap};
use crate::selection::VertexFunction;

/// Sampled graph of `u -> |u - x| / 2` over `[0, 1]`: a V-shaped cloud with
/// its apex at `x`. Lipschitz constant 1/2, so the defect sits strictly
/// between 0 and 1 (about `0.5 / sqrt(1.25)`).
pub fn v_cloud(apex: f64, samples: usize) -> PointCloud {
    let rows: Vec<Vec<f64>> = (0..samples)
        .map(|k| {
            let u = k as f64 / (samples - 1) as f64;
            vec![u, (u - apex).abs() / 2.0]
        })
        .collect();
    PointCloud::from_rows(rows).expect("valid V cloud")
}

/// The V-graph benchmark map: a 1-d grid domain on `[0, 1]` whose value at
/// `x` is [`v_cloud`]`(x)`, together with the start function
/// `g(x) = (x, -0.9)`.
///
/// The start sits below the graph, inside the normal cone of each apex, so
/// the nearest-point step lands on the apex sample itself and the residuals
/// contract to exact zero. Starts on the convex side of the graph instead
/// settle onto hull chords between adjacent samples, where the residual
/// freezes near half the sample gap; a finite sample of a curve is not
/// paraconvex below its sampling scale, so such runs cannot certify once
/// the radius schedule passes that scale.
pub fn v_graph(domain_vertices: usize, value_samples: usize) -> (SetValuedMap, VertexFunction) {
    let domain = DomainComplex::grid_1d(domain_vertices, 0.0, 1.0).expect("grid domain");
    let values: Vec<SetValue> = domain
        .vertices()
        .iter()
        .map(|p| SetValue::Cloud(v_cloud(p.coords()[0], value_samples)))
        .collect();
    let g = VertexFunction::new(
        domain
            .vertices()
            .iter()
            .map(|p| Point::new(vec![p.coords()[0], -0.9]).expect("finite"))
            .collect(),
    )
    .expect("start function");
    let phi = SetValuedMap::new(domain, values, 2).expect("V-graph map");
    (phi, g)
}

/// V-graph variant whose values drift away from the origin along the domain,
/// so a cover chain needs more than one level. The start keeps the
/// concave-side placement of [`v_graph`].
pub fn v_graph_shifted(
    domain_vertices: usize,
    value_samples: usize,
    max_offset: f64,
) -> (SetValuedMap, VertexFunction) {
    let domain = DomainComplex::grid_1d(domain_vertices, 0.0, 1.0).expect("grid domain");
    let values: Vec<SetValue> = domain
        .vertices()
        .iter()
        .map(|p| {
            let x = p.coords()[0];
            let base = v_cloud(x, value_samples);
            let rows: Vec<Vec<f64>> = base
                .points()
                .iter()
                .map(|q| vec![q.coords()[0] + max_offset * x, q.coords()[1]])
                .collect();
            SetValue::Cloud(PointCloud::from_rows(rows).expect("shifted V cloud"))
        })
        .collect();
    let g = VertexFunction::new(
        domain
            .vertices()
            .iter()
            .map(|p| {
                let x = p.coords()[0];
                Point::new(vec![x + max_offset * x, -0.9]).expect("finite")
            })
            .collect(),
    )
    .expect("start function");
    let phi = SetValuedMap::new(domain, values, 2).expect("shifted V-graph map");
    (phi, g)
}
