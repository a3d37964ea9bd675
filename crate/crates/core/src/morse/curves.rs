use serde::Serialize;

use super::critical::{classify, newton_refine, CriticalPoint};
use crate::fields::{Mat2, MagneticField};
use crate::geometry::{ImplicitDomain, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Ascent,
    Descent,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Self::Ascent => 1.0,
            Self::Descent => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    CriticalPoint,
    Boundary,
    MaxSteps,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegralCurve {
    pub points: Vec<Point2>,
    pub endpoint_kind: EndpointKind,
    /// The critical point reached, when `endpoint_kind` is `CriticalPoint`.
    pub endpoint: Option<CriticalPoint>,
}

#[derive(Debug, Clone)]
pub struct CurveOptions {
    pub initial_step: f64,
    pub max_step: f64,
    /// Local error tolerance per step (position).
    pub tol: f64,
    pub max_steps: usize,
    /// Stop once the Newton step to the nearest critical point is shorter.
    pub critical_radius: f64,
    /// Integration stops on leaving this domain.
    pub bounds: Option<ImplicitDomain>,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            initial_step: 1e-3,
            max_step: 0.02,
            tol: 1e-10,
            max_steps: 50_000,
            critical_radius: 1e-4,
            bounds: None,
        }
    }
}

fn newton_step(h: &Mat2, g: Point2) -> Option<Point2> {
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    (det != 0.0).then(|| {
        Point2::new(
            (h[1][1] * g.x1 - h[0][1] * g.x2) / det,
            (-h[1][0] * g.x1 + h[0][0] * g.x2) / det,
        )
    })
}

/// Arclength-parametrized gradient flow `x' = ±∇ψ/‖∇ψ‖`, integrated with an
/// embedded Dormand–Prince 5(4) pair.
pub fn integral_curve(field: &MagneticField, start: Point2, dir: Direction, opts: &CurveOptions) -> IntegralCurve {
    let sign = dir.sign();
    let rhs = |x: Point2| -> Option<Point2> {
        let g = field.grad_psi(x)?;
        let n = g.norm();
        (n > 0.0).then(|| g * (sign / n))
    };
    let psi = |x: Point2| field.psi(x).unwrap_or(f64::NAN);
    let outside = |x: Point2| match &opts.bounds {
        Some(d) => d.signed_distance(x) > 0.0,
        None => x.norm() > 1e3,
    };
    let mut points = vec![start];
    let mut x = start;
    let mut h = opts.initial_step;
    let mut steps = 0;
    loop {
        let near = match (field.grad_psi(x), field.hess_psi(x)) {
            (Some(g), Some(hs)) => newton_step(&hs, g).map(|s| s.norm()),
            _ => None,
        };
        if let Some(d) = near {
            if d < opts.critical_radius || field.grad_psi(x).map(|g| g.norm()) == Some(0.0) {
                if let Some(c) = newton_refine(field, x, 50) {
                    let hessian = field.hess_psi(c).expect("analytic Hessian");
                    points.push(c);
                    return IntegralCurve {
                        points,
                        endpoint_kind: EndpointKind::CriticalPoint,
                        endpoint: Some(CriticalPoint {
                            location: c,
                            value: psi(c),
                            hessian,
                            kind: classify(&hessian),
                        }),
                    };
                }
            }
        }
        if steps >= opts.max_steps {
            return IntegralCurve {
                points,
                endpoint_kind: EndpointKind::MaxSteps,
                endpoint: None,
            };
        }
        // never jump past the nearest critical point
        let cap = near.map_or(opts.max_step, |d| (0.5 * d).min(opts.max_step));
        h = h.min(cap).max(1e-14);
        let Some((next, err)) = dopri_step(&rhs, x, h) else {
            h *= 0.25;
            steps += 1;
            continue;
        };
        steps += 1;
        let increases = sign * (psi(next) - psi(x)) > 0.0;
        if err > opts.tol || !increases {
            h *= if err > 0.0 { (0.9 * (opts.tol / err).powf(0.2)).clamp(0.1, 0.5) } else { 0.5 };
            continue;
        }
        if outside(next) {
            let (mut lo, mut hi) = (x, next);
            for _ in 0..60 {
                let mid = lo.lerp(hi, 0.5);
                if outside(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            points.push(lo);
            return IntegralCurve {
                points,
                endpoint_kind: EndpointKind::Boundary,
                endpoint: None,
            };
        }
        x = next;
        points.push(x);
        let grow = if err > 0.0 { (0.9 * (opts.tol / err).powf(0.2)).clamp(0.2, 5.0) } else { 5.0 };
        h = (h * grow).min(opts.max_step);
    }
}

/// One Dormand–Prince step; returns the fifth-order solution and the
/// embedded error estimate.
fn dopri_step(f: &impl Fn(Point2) -> Option<Point2>, x: Point2, h: f64) -> Option<(Point2, f64)> {
    let k1 = f(x)?;
    let k2 = f(x + k1 * (h / 5.0))?;
    let k3 = f(x + (k1 * (3.0 / 40.0) + k2 * (9.0 / 40.0)) * h)?;
    let k4 = f(x + (k1 * (44.0 / 45.0) - k2 * (56.0 / 15.0) + k3 * (32.0 / 9.0)) * h)?;
    let k5 = f(x + (k1 * (19372.0 / 6561.0) - k2 * (25360.0 / 2187.0) + k3 * (64448.0 / 6561.0)
        - k4 * (212.0 / 729.0))
        * h)?;
    let k6 = f(x + (k1 * (9017.0 / 3168.0) - k2 * (355.0 / 33.0) + k3 * (46732.0 / 5247.0) + k4 * (49.0 / 176.0)
        - k5 * (5103.0 / 18656.0))
        * h)?;
    let y5 = x + (k1 * (35.0 / 384.0) + k3 * (500.0 / 1113.0) + k4 * (125.0 / 192.0) - k5 * (2187.0 / 6784.0)
        + k6 * (11.0 / 84.0))
        * h;
    let k7 = f(y5)?;
    let y4 = x + (k1 * (5179.0 / 57600.0) + k3 * (7571.0 / 16695.0) + k4 * (393.0 / 640.0)
        - k5 * (92097.0 / 339200.0)
        + k6 * (187.0 / 2100.0)
        + k7 * (1.0 / 40.0))
        * h;
    Some((y5, y5.dist(y4)))
}

/// Eigenpairs of a symmetric 2×2 matrix, eigenvalues ascending.
pub(crate) fn sym_eigen(h: &Mat2) -> [(f64, Point2); 2] {
    let (a, b, c) = (h[0][0], 0.5 * (h[0][1] + h[1][0]), h[1][1]);
    let mean = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    [mean - rad, mean + rad].map(|l| {
        let v1 = Point2::new(b, l - a);
        let v2 = Point2::new(l - c, b);
        let v = if v1.norm2() >= v2.norm2() { v1 } else { v2 };
        let v = if v.norm2() == 0.0 {
            // multiple of the identity: any basis works
            if l == mean - rad { Point2::new(1.0, 0.0) } else { Point2::new(0.0, 1.0) }
        } else {
            v.normalized()
        };
        (l, v)
    })
}

/// Two start points offset by `1e−4 · diameter` from a saddle along the
/// eigenvector whose eigenvalue sign matches the flow direction.
pub fn saddle_escape_starts(saddle: &CriticalPoint, diameter: f64, dir: Direction) -> [Point2; 2] {
    let [(_, v_neg), (_, v_pos)] = sym_eigen(&saddle.hessian);
    let v = match dir {
        Direction::Ascent => v_pos,
        Direction::Descent => v_neg,
    };
    let d = 1e-4 * diameter;
    [saddle.location + v * d, saddle.location - v * d]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_eigen_diagonal_and_rotated() {
        let [(l0, v0), (l1, _)] = sym_eigen(&[[-6.0, 0.0], [0.0, 2.0]]);
        assert_eq!((l0, l1), (-6.0, 2.0));
        assert!((v0.x1.abs() - 1.0).abs() < 1e-15);
        let [(a, _), (b, w)] = sym_eigen(&[[2.0, 1.0], [1.0, 2.0]]);
        assert!((a - 1.0).abs() < 1e-15 && (b - 3.0).abs() < 1e-15);
        assert!((w.x1 - w.x2).abs() < 1e-15);
    }

    #[test]
    fn constant_field_descends_to_center() {
        let f = MagneticField::constant(1.0);
        let c = integral_curve(&f, Point2::new(0.5, 0.3), Direction::Descent, &CurveOptions::default());
        assert_eq!(c.endpoint_kind, EndpointKind::CriticalPoint);
        assert!(c.points.last().unwrap().norm() < 1e-12);
    }

    #[test]
    fn ascent_stops_at_boundary() {
        let f = MagneticField::constant(1.0);
        let opts = CurveOptions {
            bounds: Some(ImplicitDomain::unit_disk()),
            ..CurveOptions::default()
        };
        let c = integral_curve(&f, Point2::new(0.1, 0.0), Direction::Ascent, &opts);
        assert_eq!(c.endpoint_kind, EndpointKind::Boundary);
        assert!((c.points.last().unwrap().norm() - 1.0).abs() < 1e-12);
        assert!(c.points.iter().all(|p| p.x2.abs() < 1e-12));
    }
}
