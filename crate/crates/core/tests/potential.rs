use std::collections::BTreeMap;
use std::sync::Arc;

use pauli_core::fields::make_field;
use pauli_core::geometry::{generate_mesh, CutSide, ImplicitDomain, Point2, TriMesh};
use pauli_core::potential::{normal_derivative, oscillation, restricted_potential, solve_poisson, PoissonSolver, Sign};
use pauli_core::MagneticField;
use proptest::prelude::*;

fn field(name: &str, ps: &[(&str, f64)]) -> MagneticField {
    let m: BTreeMap<String, f64> = ps.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    make_field(name, &m).unwrap()
}

fn disk_mesh(h: f64) -> Arc<TriMesh> {
    Arc::new(generate_mesh(&ImplicitDomain::unit_disk(), h).unwrap())
}

fn affine_exact(beta: f64, p: Point2) -> f64 {
    (p.x1 - 2.0 * beta) * (1.0 - p.norm2()) / 8.0
}

fn affine_max_error(beta: f64, h: f64) -> f64 {
    let mesh = disk_mesh(h);
    let psi = solve_poisson(&mesh, &field("affine", &[("beta", beta)])).unwrap();
    mesh.vertices()
        .iter()
        .zip(psi.values())
        .map(|(p, v)| (v - affine_exact(beta, *p)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn affine_max_norm_error() {
    assert!(affine_max_error(0.3, 0.02) <= 5e-4);
}

#[test]
fn affine_error_is_second_order() {
    let coarse = affine_max_error(0.3, 0.08);
    let mid = affine_max_error(0.3, 0.04);
    let fine = affine_max_error(0.3, 0.02);
    let p1 = (coarse / mid).log2();
    let p2 = (mid / fine).log2();
    assert!(0.5 * (p1 + p2) >= 1.9, "orders {p1:.2}, {p2:.2}");
}

#[test]
fn oscillation_closed_forms() {
    let mesh = disk_mesh(0.02);
    let radial = oscillation(&solve_poisson(&mesh, &field("radial", &[("beta", 0.5)])).unwrap());
    assert!((radial.osc - 0.015625).abs() < 1e-4);

    let affine = oscillation(&solve_poisson(&mesh, &field("affine", &[("beta", 0.0)])).unwrap());
    assert!((affine.osc - 2.0 / (12.0 * 3f64.sqrt())).abs() < 1e-4);
    assert!((affine.argmax.x1 - 3f64.sqrt() / 3.0).abs() < 5e-3);
    assert!(affine.psi_min <= 0.0 && affine.psi_max >= 0.0);

    let zero = oscillation(&solve_poisson(&mesh, &MagneticField::constant(0.0)).unwrap());
    assert_eq!(zero.osc, 0.0);
}

#[test]
fn maximum_principle_for_nonnegative_field() {
    let mesh = disk_mesh(0.04);
    for beta in [1.0, 1.3] {
        let psi = solve_poisson(&mesh, &field("radial", &[("beta", beta)])).unwrap();
        assert!(psi.values().iter().all(|&v| v <= 1e-10), "beta {beta}");
    }
}

#[test]
fn normal_derivative_on_cut_line() {
    // ψ_β vanishes on x1 = 2β, so it is the Dirichlet potential of the cut disk
    let beta = 0.3;
    let dom = ImplicitDomain::cut_disk(2.0 * beta, CutSide::Left).unwrap();
    let mesh = Arc::new(generate_mesh(&dom, 0.02).unwrap());
    let psi = solve_poisson(&mesh, &field("affine", &[("beta", beta)])).unwrap();
    let on_line: Vec<(Point2, f64)> = normal_derivative(&psi, 400)
        .into_iter()
        .filter(|(p, _)| (p.x1 - 0.6).abs() < 1e-9 && p.x2.abs() < 0.7)
        .collect();
    assert!(on_line.len() > 20);
    for (p, d) in on_line {
        assert!((d - (0.64 - p.x2 * p.x2) / 8.0).abs() < 2e-2, "at {p:?}: {d}");
    }
}

#[test]
fn restricted_potentials() {
    let f = field("affine", &[("beta", 0.0)]);
    let hat = restricted_potential(&f, Sign::Plus, 0.02).unwrap();
    let full = oscillation(&solve_poisson(&disk_mesh(0.02), &f).unwrap());
    assert!((hat.psi_min - full.psi_min).abs() < 1e-4);
    assert!(hat.argmin.x1 < 0.0);

    let r = restricted_potential(&field("radial", &[("beta", 0.6)]), Sign::Plus, 0.02).unwrap();
    let mesh = r.psi.mesh();
    for &i in mesh.boundary() {
        assert!((mesh.vertices()[i].norm() - 0.6).abs() < 1e-3);
    }
    // on disk(0, a) with B = a² − r²: ψ̂ = (r² − a²)(3a² − r²)/16, min −3a⁴/16 at the origin
    assert!((r.psi_min + 3.0 * 0.6f64.powi(4) / 16.0).abs() < 1e-4);

    let f7 = field("affine", &[("beta", 0.7)]);
    let hat7 = restricted_potential(&f7, Sign::Plus, 0.02).unwrap();
    let full7 = oscillation(&solve_poisson(&disk_mesh(0.02), &f7).unwrap());
    assert!(hat7.osc < full7.osc);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn poisson_solve_is_linear(
        p in proptest::array::uniform3(-2.0..2.0f64),
        q in proptest::array::uniform3(-2.0..2.0f64),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
    ) {
        let solver = PoissonSolver::new(disk_mesh(0.1)).unwrap();
        let f = move |x: Point2| p[0] + p[1] * x.x1 + p[2] * x.x2 * x.x2;
        let g = move |x: Point2| q[0] + q[1] * x.x1 * x.x2 + q[2] * x.x1.powi(3);
        let (uf, ug) = (solver.solve(f).unwrap(), solver.solve(g).unwrap());
        let uc = solver.solve(|x| a * f(x) + b * g(x)).unwrap();
        let scale = uc.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (c, (x, y)) in uc.values().iter().zip(uf.values().iter().zip(ug.values())) {
            prop_assert!((c - (a * x + b * y)).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn boundary_stays_zero(beta in -0.9..0.9f64) {
        let mesh = disk_mesh(0.1);
        let psi = solve_poisson(&mesh, &field("affine", &[("beta", beta)])).unwrap();
        for &i in mesh.boundary() {
            prop_assert_eq!(psi.values()[i], 0.0);
        }
        let sol = oscillation(&psi);
        prop_assert!(sol.psi_min <= 0.0 && 0.0 <= sol.psi_max && sol.osc >= 0.0);
    }
}
