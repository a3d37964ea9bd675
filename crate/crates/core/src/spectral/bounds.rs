use serde::Serialize;

use crate::fem::{subdivide, TriangleRule};
use crate::geometry::{Point2, TriMesh};
use crate::potential::ScalarField;
use crate::{Error, Result};

/// `λᴰ · h² · exp(−2·osc/h)`, a lower bound for both spin components.
pub fn ekp_lower_bound(lambda_d: f64, osc: f64, h: f64) -> f64 {
    lambda_d * h * h * (-2.0 * osc / h).exp()
}

/// Rayleigh quotient of the trial state `u = v_η e^{−ψ/h}` for `P₋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialBound {
    pub value: f64,
    /// Difference between two quadrature refinement levels.
    pub quadrature_error: f64,
    pub eta: f64,
    pub h: f64,
}

/// Largest distance from a mesh vertex to the domain boundary.
pub fn inradius(mesh: &TriMesh) -> f64 {
    let dom = mesh.domain();
    mesh.vertices()
        .iter()
        .map(|&p| -dom.signed_distance(p))
        .fold(0.0, f64::max)
}

struct Sums {
    num: f64,
    den: f64,
}

fn accumulate(mesh: &TriMesh, psi: &ScalarField, h: f64, eta: f64, psi_min: f64, level: u32) -> Sums {
    let dom = mesh.domain();
    let rule = TriangleRule::degree5();
    let grad2 = 1.0 / (4.0 * eta * eta);
    let mut sums = Sums { num: 0.0, den: 0.0 };
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let corners = mesh.corners(t);
        let vals = [psi.values()[tri[0]], psi.values()[tri[1]], psi.values()[tri[2]]];
        let origin = corners[0];
        let e1 = corners[1] - origin;
        let e2 = corners[2] - origin;
        let det = e1.cross(e2);
        let psi_at = |p: Point2| {
            let d = p - origin;
            let l1 = d.cross(e2) / det;
            let l2 = e1.cross(d) / det;
            vals[0] + l1 * (vals[1] - vals[0]) + l2 * (vals[2] - vals[0])
        };
        // whole triangle deep inside: v ≡ 1 and only the weight integral is needed
        let deep = corners.iter().all(|&c| -dom.signed_distance(c) >= 2.0 * eta + 2.0 * mesh.target_h());
        let lvl = if deep { 0 } else { level };
        for sub in subdivide(corners, lvl) {
            sums.den += rule.integrate(sub, |p| {
                let w = (-2.0 * (psi_at(p) - psi_min) / h).exp();
                let v = if deep { 1.0 } else { (-dom.signed_distance(p) / (2.0 * eta)).clamp(0.0, 1.0) };
                w * v * v
            });
            if !deep {
                sums.num += rule.integrate(sub, |p| {
                    let d = -dom.signed_distance(p);
                    if d > 0.0 && d < 2.0 * eta {
                        (-2.0 * (psi_at(p) - psi_min) / h).exp() * grad2
                    } else {
                        0.0
                    }
                });
            }
        }
    }
    sums.num *= h * h;
    sums
}

/// Variational upper bound for the continuum `λ₋` from the trial state
/// `v_η e^{−ψ/h}`, where `v_η = min(1, dist(x, ∂Ω)/(2η))`.
///
/// The quotient reduces to `h² ∫ e^{−2ψ/h}|∇v_η|² / ∫ e^{−2ψ/h} v_η²`. Weights
/// are rescaled by `e^{2ψ_min/h}` so the largest one is `1`.
pub fn trial_state_bound(mesh: &TriMesh, psi: &ScalarField, h: f64, eta: f64) -> Result<TrialBound> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("h = {h} must be positive")));
    }
    let r = inradius(mesh);
    if !(eta > 0.0 && eta < 0.5 * r) {
        return Err(Error::InvalidArgument(format!(
            "cutoff width eta = {eta} must lie in (0, {})",
            0.5 * r
        )));
    }
    let psi_min = psi.values().iter().copied().fold(f64::INFINITY, f64::min);
    let coarse = accumulate(mesh, psi, h, eta, psi_min, 1);
    let fine = accumulate(mesh, psi, h, eta, psi_min, 2);
    if !(fine.den > 0.0) || !fine.den.is_finite() || !fine.num.is_finite() {
        return Err(Error::UnderflowDominates);
    }
    let value = fine.num / fine.den;
    let coarse_value = coarse.num / coarse.den;
    Ok(TrialBound {
        value,
        quadrature_error: (value - coarse_value).abs(),
        eta,
        h,
    })
}

/// Smallest [`trial_state_bound`] over a log-spaced grid of cutoff widths
/// between `2·target_h` and just under half the inradius. Each grid value is
/// itself a valid bound, so the minimum is one as well.
pub fn best_trial_state_bound(mesh: &TriMesh, psi: &ScalarField, h: f64) -> Result<TrialBound> {
    let hi = 0.49 * inradius(mesh);
    let lo = (2.0 * mesh.target_h()).min(0.5 * hi);
    let steps = 10;
    let mut best: Option<TrialBound> = None;
    for k in 0..=steps {
        let eta = lo * (hi / lo).powf(k as f64 / steps as f64);
        let t = trial_state_bound(mesh, psi, h, eta)?;
        if best.map_or(true, |b| t.value < b.value) {
            best = Some(t);
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("domain too thin for a cutoff".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ekp_examples() {
        assert_relative_eq!(ekp_lower_bound(5.7832, 0.25, 0.5), 5.7832 * 0.25 * (-1.0f64).exp(), max_relative = 1e-15);
        assert!((ekp_lower_bound(5.7832, 0.25, 0.5) - 0.53189).abs() < 1e-5);
        assert!((ekp_lower_bound(5.7832, 0.25, 0.25) - 0.048922).abs() < 1e-5);
        assert_eq!(ekp_lower_bound(3.0, 0.0, 0.5), 0.75);
    }
}
