use std::sync::Arc;

use serde::Serialize;

use crate::fem;
use crate::fields::MagneticField;
use crate::geometry::polygon::closest_on_segment;
use crate::geometry::{generate_mesh, ImplicitDomain, Point2};
use crate::potential::{normal_derivative, solve_poisson, ScalarField};
use crate::Result;

/// Outcome of the boundary flux test on `∂ω ∩ Ω`.
#[derive(Debug, Clone, Serialize)]
pub struct Pushability {
    pub max_normal_derivative: f64,
    pub min_normal_derivative: f64,
    pub witness: Option<Point2>,
    /// Largest change of a sample between `mesh_h` and `2·mesh_h`.
    pub flux_error: f64,
    /// `3 · flux_error`.
    pub positivity_margin: f64,
    /// Some sample exceeds the margin.
    pub pushable: bool,
    /// Every sample exceeds the margin.
    pub all_positive: bool,
    /// Regular samples `(point, ∂_νψ)` on the interior part of the boundary.
    pub samples: Vec<(Point2, f64)>,
}

/// Outward normal derivative of `psi` at boundary point `p`, using the
/// closest boundary edge of the mesh.
fn flux_at(psi: &ScalarField, grads: &[Point2], loop_: &[usize], p: Point2) -> f64 {
    let mesh = psi.mesh();
    let v = mesh.vertices();
    let n = loop_.len();
    let mut best = (f64::INFINITY, 0, 0.0);
    for e in 0..n {
        let (a, b) = (v[loop_[e]], v[loop_[(e + 1) % n]]);
        let (q, t) = closest_on_segment(p, a, b);
        let d = q.dist(p);
        if d < best.0 {
            best = (d, e, t);
        }
    }
    let (_, e, t) = best;
    let (ia, ib) = (loop_[e], loop_[(e + 1) % n]);
    let d = v[ib] - v[ia];
    let normal = Point2::new(d.x2, -d.x1).normalized();
    grads[ia].lerp(grads[ib], t).dot(normal)
}

/// Tests whether `ω` can be enlarged while keeping its Dirichlet potential
/// negative: `∂_νψ_ω > 0` somewhere on `∂ω` inside the container.
///
/// The container is the field's default domain. Samples closer than
/// `max(5·mesh_h, 0.05)` to the container boundary are discarded, which also
/// removes the corners where `∂ω` meets `∂Ω`.
pub fn pushability_check(domain: &ImplicitDomain, field: &MagneticField, mesh_h: f64, samples: usize) -> Result<Pushability> {
    let container = field.default_domain()?;
    let exclusion = (5.0 * mesh_h).max(0.05);
    let fine_mesh = Arc::new(generate_mesh(domain, mesh_h)?);
    let fine = solve_poisson(&fine_mesh, field)?;
    let regular: Vec<(Point2, f64)> = normal_derivative(&fine, samples)
        .into_iter()
        .filter(|(p, _)| container.signed_distance(*p) < -exclusion)
        .collect();
    if regular.is_empty() {
        return Ok(Pushability {
            max_normal_derivative: f64::NAN,
            min_normal_derivative: f64::NAN,
            witness: None,
            flux_error: 0.0,
            positivity_margin: 0.0,
            pushable: false,
            all_positive: false,
            samples: Vec::new(),
        });
    }

    let coarse_mesh = Arc::new(generate_mesh(domain, 2.0 * mesh_h)?);
    let coarse = solve_poisson(&coarse_mesh, field)?;
    let cgrads = fem::recovered_gradients(&coarse_mesh, coarse.values());
    let cloop = coarse_mesh
        .boundary_loops()
        .into_iter()
        .max_by_key(|l| l.len())
        .unwrap_or_default();
    let flux_error = regular
        .iter()
        .map(|&(p, f)| (f - flux_at(&coarse, &cgrads, &cloop, p)).abs())
        .fold(0.0, f64::max);

    let (witness, max) = regular
        .iter()
        .fold((regular[0].0, f64::NEG_INFINITY), |acc, &(p, f)| if f > acc.1 { (p, f) } else { acc });
    let min = regular.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let margin = 3.0 * flux_error;
    Ok(Pushability {
        max_normal_derivative: max,
        min_normal_derivative: min,
        witness: Some(witness),
        flux_error,
        positivity_margin: margin,
        pushable: max > margin,
        all_positive: min > margin,
        samples: regular,
    })
}
