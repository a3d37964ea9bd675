//! Closed-form reference values used by the acceptance checks. Nothing here
//! calls into the solver crates, so a shared bug cannot hide on both sides.

use std::f64::consts::PI;

/// `J₀(x)` from its power series; accurate to machine precision for `|x| ≤ 10`.
pub fn bessel_j0(x: f64) -> f64 {
    let q = -(x * x) / 4.0;
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..80 {
        term *= q / ((k * k) as f64);
        sum += term;
    }
    sum
}

/// First positive zero of `J₀`, by bisection on `[2, 3]`.
pub fn bessel_j0_first_zero() -> f64 {
    let (mut a, mut b) = (2.0, 3.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if bessel_j0(a) * bessel_j0(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

/// Dirichlet ground state of the unit square.
pub fn square_ground_state() -> f64 {
    2.0 * PI * PI
}

/// `−2·Osc ψ₀` for `B = β² − r²` on the unit disk (three branches in β).
pub fn radial_minus_two_osc(beta: f64) -> f64 {
    let b2 = beta * beta;
    if beta < 0.5 {
        -(2.0 * b2 - 1.0).powi(2) / 8.0
    } else if beta <= 1.0 / 2f64.sqrt() {
        -b2 * b2 / 2.0
    } else {
        -(4.0 * b2 - 1.0) / 8.0
    }
}

/// Dirichlet potential of `B = β − x₁` on the unit disk.
pub fn affine_psi(beta: f64, x1: f64, x2: f64) -> f64 {
    (x1 - 2.0 * beta) * (1.0 - x1 * x1 - x2 * x2) / 8.0
}

/// `Osc ψ_β` for the affine field, from the extrema on the `x₁` axis.
pub fn affine_osc(beta: f64) -> f64 {
    let s = (3.0 + 4.0 * beta * beta).sqrt();
    let at_plus = affine_psi(beta, (2.0 * beta + s) / 3.0, 0.0);
    let at_minus = affine_psi(beta, (2.0 * beta - s) / 3.0, 0.0);
    if beta <= -0.5 {
        at_plus
    } else if beta < 0.5 {
        at_plus - at_minus
    } else {
        -at_minus
    }
}

/// One critical point of a closed-form potential.
#[derive(Debug, Clone, Copy)]
pub struct Critical {
    pub x: [f64; 2],
    pub value: f64,
    pub hessian: [[f64; 2]; 2],
}

/// The five critical points of `ψ = (1 − r²)(6x₁² + 3x₂² − x₂⁴ − 1)`.
pub fn sym72_critical_points() -> [Critical; 5] {
    let xm = (7.0f64 / 12.0).sqrt();
    let ys = (2.0f64 / 3.0).sqrt();
    let max = |x| Critical { x: [x, 0.0], value: 25.0 / 24.0, hessian: [[-28.0, 0.0], [0.0, -2.5]] };
    let saddle = |y| Critical { x: [0.0, y], value: 5.0 / 27.0, hessian: [[26.0 / 9.0, 0.0], [0.0, -32.0 / 3.0]] };
    [
        max(-xm),
        saddle(-ys),
        Critical { x: [0.0, 0.0], value: -1.0, hessian: [[14.0, 0.0], [0.0, 8.0]] },
        saddle(ys),
        max(xm),
    ]
}

/// Saddle Hessian and extremum abscissas of `ψ = −(r² − 2x₁)² + r²`.
pub fn onesaddle_data() -> ([[f64; 2]; 2], f64, f64) {
    let r3 = 3f64.sqrt();
    ([[-6.0, 0.0], [0.0, 2.0]], (3.0 - r3) / 2.0, (3.0 + r3) / 2.0)
}

/// Radii of the zero level of the one-saddle potential in direction `θ`:
/// the limaçon `r = 2cos θ ± 1`, keeping the positive branches.
pub fn limacon_radii(theta: f64) -> Vec<f64> {
    [2.0 * theta.cos() + 1.0, 2.0 * theta.cos() - 1.0]
        .into_iter()
        .filter(|r| *r > 1e-3)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_zero_matches_tables() {
        assert!((bessel_j0_first_zero() - 2.404_825_557_695_773).abs() < 1e-12);
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn radial_branches_are_continuous() {
        for b in [0.5, 1.0 / 2f64.sqrt()] {
            let (l, r) = (radial_minus_two_osc(b - 1e-9), radial_minus_two_osc(b + 1e-9));
            assert!((l - r).abs() < 1e-7);
        }
        assert!((radial_minus_two_osc(0.5) + 0.03125).abs() < 1e-15);
    }

    #[test]
    fn affine_potential_solves_poisson() {
        // five-point Laplacian of a cubic is exact up to rounding
        let (beta, e) = (0.3, 1e-3);
        for (x, y) in [(0.1, 0.2), (-0.4, 0.3), (0.5, -0.5)] {
            let lap = (affine_psi(beta, x + e, y) + affine_psi(beta, x - e, y) + affine_psi(beta, x, y + e)
                + affine_psi(beta, x, y - e)
                - 4.0 * affine_psi(beta, x, y))
                / (e * e);
            assert!((lap - (beta - x)).abs() < 1e-6);
        }
        assert_eq!(affine_psi(beta, 0.6, 0.8), 0.0);
    }

    #[test]
    fn affine_osc_branches_are_continuous() {
        for b in [-0.5, 0.5] {
            assert!((affine_osc(b - 1e-9) - affine_osc(b + 1e-9)).abs() < 1e-7);
        }
    }

    #[test]
    fn sym72_values_satisfy_gradient_zero() {
        let psi = |x: f64, y: f64| (1.0 - x * x - y * y) * (6.0 * x * x + 3.0 * y * y - y.powi(4) - 1.0);
        for c in sym72_critical_points() {
            let [x, y] = c.x;
            assert!((psi(x, y) - c.value).abs() < 1e-14);
            let e = 1e-6;
            assert!(((psi(x + e, y) - psi(x - e, y)) / (2.0 * e)).abs() < 1e-8);
            assert!(((psi(x, y + e) - psi(x, y - e)) / (2.0 * e)).abs() < 1e-8);
        }
    }
}
