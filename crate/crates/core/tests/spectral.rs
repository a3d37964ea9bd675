use proptest::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use pauli_core::fields::{make_field, MagneticField};
use pauli_core::geometry::{generate_mesh, ImplicitDomain, Point2, TriMesh};
use pauli_core::linalg::{dot, C64};
use pauli_core::potential::{oscillation, solve_poisson};
use pauli_core::spectral::{
    assemble_pauli, assemble_witten, dirichlet_ground, ekp_lower_bound, rate_sweep, smallest_eigenvalue,
    trial_state_bound, best_trial_state_bound, PsiSource, Spin, SpinChoice, SweepConfig,
};

fn field(name: &str, ps: &[(&str, f64)]) -> MagneticField {
    let m: BTreeMap<_, _> = ps.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    make_field(name, &m).unwrap()
}

/// First positive zero of J₀ by bisection on its power series.
fn bessel_j0_first_zero() -> f64 {
    let j0 = |x: f64| {
        let q = -(x * x) / 4.0;
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 1..60 {
            term *= q / ((k * k) as f64);
            sum += term;
        }
        sum
    };
    let (mut a, mut b) = (2.0, 3.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if j0(a) * j0(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

fn disk_mesh(h: f64) -> Arc<TriMesh> {
    Arc::new(generate_mesh(&ImplicitDomain::unit_disk(), h).unwrap())
}

#[test]
fn bessel_oracle_value() {
    let j = bessel_j0_first_zero();
    assert!((j - 2.404_825_557_695_773).abs() < 1e-12);
}

#[test]
fn dirichlet_disk_square_and_scaling() {
    let j2 = bessel_j0_first_zero().powi(2);
    let t = Instant::now();
    let disk = dirichlet_ground(&disk_mesh(0.02)).unwrap();
    eprintln!("disk {disk} vs {j2} in {:?}", t.elapsed());
    assert!((disk - j2).abs() / j2 < 0.01);

    let sq = ImplicitDomain::rectangle(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).unwrap();
    let square = dirichlet_ground(&generate_mesh(&sq, 0.02).unwrap()).unwrap();
    eprintln!("square {square} vs {}", 2.0 * PI * PI);
    assert!((square - 2.0 * PI * PI).abs() / (2.0 * PI * PI) < 0.01);

    let big = ImplicitDomain::disk(Point2::ORIGIN, 2.0);
    let lam2 = dirichlet_ground(&generate_mesh(&big, 0.04).unwrap()).unwrap();
    assert!((lam2 - j2 / 4.0).abs() / (j2 / 4.0) < 0.01);
}

#[test]
fn zero_field_pauli_is_scaled_dirichlet() {
    let mesh = disk_mesh(0.05);
    let b0 = MagneticField::constant(0.0);
    let lam_d = dirichlet_ground(&mesh).unwrap();
    let p = assemble_pauli(&mesh, &b0, PsiSource::Analytic(&b0), 1.0, Spin::Minus).unwrap();
    let r = smallest_eigenvalue(&p, 1e-10).unwrap();
    assert!((r.lambda - lam_d).abs() < 1e-9 * lam_d);
}

#[test]
fn eigenvector_is_mass_normalized() {
    let mesh = disk_mesh(0.05);
    let f = MagneticField::constant(1.0);
    let p = assemble_pauli(&mesh, &f, PsiSource::Analytic(&f), 0.3, Spin::Minus).unwrap();
    let r = smallest_eigenvalue(&p, 1e-10).unwrap();
    let v = p.dofs.restrict(&r.eigenvector);
    let mc = p.mass.map(|x| C64::new(x, 0.0));
    let mv = mc.mul_vec(&v);
    let n2: f64 = v.iter().zip(&mv).map(|(a, b)| (a.conj() * b).re).sum();
    assert!((n2.sqrt() - 1.0).abs() < 1e-10);
    assert!(r.residual <= 1e-10);
    assert!(r.lambda >= -1e-10);
}

#[test]
fn spin_conjugation_is_exact() {
    let mesh = disk_mesh(0.04);
    for (f, h) in [
        (field("constant", &[("b", 1.0)]), 0.3),
        (field("radial", &[("beta", 0.6)]), 0.25),
        (field("affine", &[("beta", 0.2)]), 0.4),
    ] {
        let g = f.negated();
        let plus = assemble_pauli(&mesh, &f, PsiSource::Analytic(&f), h, Spin::Plus).unwrap();
        let minus = assemble_pauli(&mesh, &g, PsiSource::Analytic(&g), h, Spin::Minus).unwrap();
        let lp = smallest_eigenvalue(&plus, 1e-10).unwrap().lambda;
        let lm = smallest_eigenvalue(&minus, 1e-10).unwrap().lambda;
        assert!((lp - lm).abs() <= 1e-10 * lp.abs(), "{lp} vs {lm}");
    }
}

#[test]
fn gauge_shift_leaves_spectrum() {
    let mesh = disk_mesh(0.03);
    let f = MagneticField::constant(1.0);
    let h = 0.4;
    // χ = x1² − x2² is harmonic, so ψ + χ has the same Laplacian
    let shifted = |p: Point2| f.grad_psi(p).unwrap() + Point2::new(2.0 * p.x1, -2.0 * p.x2);
    let a = assemble_pauli(&mesh, &f, PsiSource::Analytic(&f), h, Spin::Minus).unwrap();
    let b = assemble_pauli(&mesh, &f, PsiSource::Gradient(&shifted), h, Spin::Minus).unwrap();
    let la = smallest_eigenvalue(&a, 1e-10).unwrap().lambda;
    let lb = smallest_eigenvalue(&b, 1e-10).unwrap().lambda;

    let fine = disk_mesh(0.015);
    let af = assemble_pauli(&fine, &f, PsiSource::Analytic(&f), h, Spin::Minus).unwrap();
    let lf = smallest_eigenvalue(&af, 1e-10).unwrap().lambda;
    let bf = assemble_pauli(&fine, &f, PsiSource::Gradient(&shifted), h, Spin::Minus).unwrap();
    let lbf = smallest_eigenvalue(&bf, 1e-10).unwrap().lambda;
    let disc = (la - lf).abs().max((lb - lbf).abs());
    assert!((la - lb).abs() <= 2.0 * disc);
    // the gap closes under refinement
    assert!((lf - lbf).abs() < 0.5 * (la - lb).abs());
}

#[test]
fn discrete_and_analytic_gauges_agree() {
    let mesh = disk_mesh(0.03);
    let f = field("radial", &[("beta", 0.6)]);
    let psi = solve_poisson(&mesh, &f).unwrap();
    let a = assemble_pauli(&mesh, &f, PsiSource::Analytic(&f), 0.3, Spin::Minus).unwrap();
    let d = assemble_pauli(&mesh, &f, PsiSource::Discrete(&psi), 0.3, Spin::Minus).unwrap();
    let la = smallest_eigenvalue(&a, 1e-10).unwrap().lambda;
    let ld = smallest_eigenvalue(&d, 1e-10).unwrap().lambda;
    assert!((la - ld).abs() / la < 1e-3, "{la} {ld}");
}

#[test]
fn constant_field_sandwich_and_self_convergence() {
    let f = MagneticField::constant(1.0);
    let h = 0.5;
    let mut lams = Vec::new();
    for mh in [0.04, 0.02] {
        let mesh = disk_mesh(mh);
        let p = assemble_pauli(&mesh, &f, PsiSource::Analytic(&f), h, Spin::Minus).unwrap();
        lams.push(smallest_eigenvalue(&p, 1e-9).unwrap().lambda);
    }
    assert!((lams[0] - lams[1]).abs() / lams[1] < 0.1);

    let mesh = disk_mesh(0.02);
    let psi = solve_poisson(&mesh, &f).unwrap();
    let osc = oscillation(&psi).osc;
    let lam_d = dirichlet_ground(&mesh).unwrap();
    let lower = ekp_lower_bound(lam_d, osc, h);
    let upper = trial_state_bound(&mesh, &psi, h, 0.1).unwrap();
    let w = assemble_witten(&mesh, &f, PsiSource::Analytic(&f), h).unwrap();
    let lw = smallest_eigenvalue(&w, 1e-9).unwrap().lambda;
    eprintln!("B=1 h=0.5: lower {lower} lambda {} witten {lw} trial {:?}", lams[1], upper);
    assert!(lower <= lams[1]);
    assert!(lams[1] <= upper.value + upper.quadrature_error);
    assert!(lams[1] <= lw + 1e-8 * w.scale());
    assert!(upper.value >= ekp_lower_bound(lam_d, 0.25, h));
}

#[test]
fn zero_field_trial_bound_dominates_dirichlet() {
    let mesh = disk_mesh(0.03);
    let b0 = MagneticField::constant(0.0);
    let psi = solve_poisson(&mesh, &b0).unwrap();
    let h = 0.5;
    let t = trial_state_bound(&mesh, &psi, h, 0.1).unwrap();
    let j2 = bessel_j0_first_zero().powi(2);
    assert!(t.value >= h * h * j2);
}

#[test]
fn trial_corridor_narrows() {
    let mesh = disk_mesh(0.02);
    let f = MagneticField::constant(1.0);
    let psi = solve_poisson(&mesh, &f).unwrap();
    let osc = oscillation(&psi).osc;
    let mut dev = Vec::new();
    for h in [0.5, 0.35, 0.2] {
        let t = best_trial_state_bound(&mesh, &psi, h).unwrap();
        let rate = -h * t.value.ln();
        eprintln!("h={h} trial {} rate {rate} qerr {}", t.value, t.quadrature_error);
        if h == 0.35 {
            assert!(rate >= 2.0 * osc * 0.5 && rate <= 2.0 * osc * 1.5);
        }
        dev.push((rate - 2.0 * osc).abs());
    }
    assert!(dev[2] <= dev[0]);
}

#[test]
fn constant_field_rate_sweep() {
    let t = Instant::now();
    let cfg = SweepConfig::new(MagneticField::constant(1.0), 0.02, vec![0.5, 0.35, 0.25, 0.18]);
    let est = rate_sweep(&cfg).unwrap();
    eprintln!("{}", est.to_csv());
    eprintln!("fit {:?} target {} in {:?}", est.fitted_limit, est.target, t.elapsed());
    assert_eq!(est.violations, 0, "{:?}", est.rows);
    assert!(est.r_monotone);
    // r(h) is convex on this h range, so the straight line overshoots the
    // limit while the quadratic diagnostic lands near 2·ψ_min
    let affine = est.fitted_limit.unwrap();
    let quad = est.quadratic_limit.unwrap();
    assert!(affine < -0.5 && quad > affine);
    assert!((quad + 0.5).abs() <= 0.3 * 0.5);
    assert!((est.r_values[3] + 0.5).abs() < 0.05);
}

#[test]
fn radial_both_spins_sweep() {
    let t = Instant::now();
    let mut cfg = SweepConfig::new(field("radial", &[("beta", 0.6)]), 0.02, vec![0.5, 0.35, 0.25, 0.18]);
    cfg.spin = SpinChoice::Both;
    let est = rate_sweep(&cfg).unwrap();
    eprintln!("{}", est.to_csv());
    eprintln!("osc {} fit {:?} in {:?}", est.osc, est.fitted_limit, t.elapsed());
    assert_eq!(est.violations, 0, "{:?}", est.rows);
    assert!(est.r_monotone);
    for (row, r) in est.rows.iter().zip(&est.r_values) {
        let lower = -2.0 * est.osc + row.h * (est.lambda_dirichlet * row.h * row.h).ln();
        let upper = row.h * row.trial_upper_bound.unwrap().ln();
        assert!(*r >= lower && *r <= upper, "{} not in [{lower}, {upper}]", r);
    }
}

fn coarse_mesh() -> &'static TriMesh {
    static MESH: std::sync::OnceLock<TriMesh> = std::sync::OnceLock::new();
    MESH.get_or_init(|| generate_mesh(&ImplicitDomain::unit_disk(), 0.15).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_matrix_is_hermitian(h in 0.1..1.0f64, b0 in -2.0..2.0f64, plus in any::<bool>()) {
        let mesh = coarse_mesh();
        let f = field("radial", &[("beta", b0)]);
        let spin = if plus { Spin::Plus } else { Spin::Minus };
        let p = assemble_pauli(mesh, &f, PsiSource::Analytic(&f), h, spin).unwrap();
        prop_assert!(p.stiffness.hermitian_defect() <= 1e-14 * p.scale());
        prop_assert!(p.mass.hermitian_defect() <= 1e-14 * p.mass.max_abs());
    }

    #[test]
    fn magnetic_form_is_nonnegative(
        h in 0.1..1.0f64,
        b in 0.0..3.0f64,
        seed in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..8),
    ) {
        let mesh = coarse_mesh();
        let f = MagneticField::constant(b);
        let p = assemble_pauli(mesh, &f, PsiSource::Analytic(&f), h, Spin::Plus).unwrap();
        let u: Vec<C64> = (0..p.len()).map(|i| {
            let (re, im) = seed[i % seed.len()];
            C64::new(re * (1.0 + i as f64).sin(), im * (2.0 + i as f64).cos())
        }).collect();
        let q = dot(&u, &p.stiffness.mul_vec(&u));
        let uu = dot(&u, &u).re;
        prop_assert!(q.im.abs() <= 1e-10 * p.scale() * uu);
        prop_assert!(q.re >= -1e-12 * p.scale() * uu, "{}", q.re);
    }
}
