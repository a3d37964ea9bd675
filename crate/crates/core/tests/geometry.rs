use std::collections::BTreeMap;
use std::f64::consts::PI;

use pauli_core::fields::{make_field, onesaddle_domain};
use pauli_core::geometry::{generate_mesh, CutSide, ImplicitDomain, Point2, Polygon, TriMesh};
use proptest::prelude::*;

fn audit_ok(mesh: &TriMesh, d: &ImplicitDomain) {
    let a = mesh.audit();
    assert!(a.is_valid(d.diameter(), 20.0), "{a:?}");
}

fn longest_boundary_edge(mesh: &TriMesh) -> f64 {
    let v = mesh.vertices();
    mesh.boundary_edges().iter().map(|&(a, b)| v[a].dist(v[b])).fold(0.0, f64::max)
}

#[test]
fn unit_disk_mesh() {
    let d = ImplicitDomain::unit_disk();
    let mesh = generate_mesh(&d, 0.1).unwrap();
    audit_ok(&mesh, &d);
    assert!(mesh.num_triangles() >= 300);
    assert!(mesh.vertices().iter().all(|p| p.norm() <= 1.0 + 1e-10));
    assert!(longest_boundary_edge(&mesh) <= 1.5 * 0.1);
}

#[test]
fn polygon_vertices_are_kept() {
    let poly = Polygon::regular(200, Point2::ORIGIN, 1.0, 0.0).unwrap();
    let corners = poly.vertices().to_vec();
    let d = ImplicitDomain::Polygon(poly);
    let mesh = generate_mesh(&d, 0.05).unwrap();
    audit_ok(&mesh, &d);
    for c in corners {
        assert!(mesh.boundary().iter().any(|&i| mesh.vertices()[i].dist(c) < 1e-12));
    }
}

#[test]
fn sublevel_mesh_stays_below_level() {
    let d = onesaddle_domain(-0.3).unwrap();
    let mesh = generate_mesh(&d, 0.05).unwrap();
    audit_ok(&mesh, &d);
    let f = make_field("onesaddle82", &BTreeMap::new()).unwrap();
    assert!(mesh.vertices().iter().all(|&p| f.psi(p).unwrap() <= -0.3 + 1e-8));
}

#[test]
fn disk_area_converges_quadratically() {
    let d = ImplicitDomain::unit_disk();
    let err = |h: f64| (generate_mesh(&d, h).unwrap().total_area() - PI).abs();
    let (e1, e2) = (err(0.1), err(0.05));
    assert!(e1 <= 0.1 * 0.1 && e2 <= 0.05 * 0.05, "{e1} {e2}");
    assert!((e1 / e2).log2() >= 1.8, "{e1} {e2}");
}

#[test]
fn meshing_is_deterministic() {
    let d = ImplicitDomain::cut_disk(0.3, CutSide::Left).unwrap();
    let a = generate_mesh(&d, 0.05).unwrap();
    let b = generate_mesh(&d, 0.05).unwrap();
    assert_eq!(a.vertices(), b.vertices());
    assert_eq!(a.triangles(), b.triangles());
}

fn domains() -> impl Strategy<Value = ImplicitDomain> {
    prop_oneof![
        (-1.0..1.0f64, -1.0..1.0f64, 0.3..2.0f64).prop_map(|(x, y, r)| ImplicitDomain::disk(Point2::new(x, y), r)),
        (0.3..2.0f64, 0.3..2.0f64)
            .prop_map(|(w, h)| ImplicitDomain::rectangle(Point2::new(0.0, 0.0), Point2::new(w, h)).unwrap()),
        (-0.7..0.7f64, any::<bool>()).prop_map(|(b, left)| {
            ImplicitDomain::cut_disk(b, if left { CutSide::Left } else { CutSide::Right }).unwrap()
        }),
        (5usize..40, 0.0..1.0f64).prop_map(|(n, phase)| {
            ImplicitDomain::Polygon(Polygon::regular(n, Point2::ORIGIN, 1.0, phase).unwrap())
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_meshes_pass_audit(d in domains(), n in 8.0..30.0f64) {
        let h = d.diameter() / n;
        let mesh = generate_mesh(&d, h).unwrap();
        let a = mesh.audit();
        prop_assert!(a.is_valid(d.diameter(), 20.0), "{:?}", a);
        prop_assert!(longest_boundary_edge(&mesh) <= 1.5 * h);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn disk_distance_is_exact(x in -3.0..3.0f64, y in -3.0..3.0f64) {
        let p = Point2::new(x, y);
        let d = ImplicitDomain::disk(Point2::new(0.2, -0.1), 0.7);
        prop_assert_eq!(d.signed_distance(p), (p - Point2::new(0.2, -0.1)).norm() - 0.7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn signed_distance_is_lipschitz(
        d in domains(),
        a in (-2.5..2.5f64, -2.5..2.5f64),
        b in (-2.5..2.5f64, -2.5..2.5f64),
    ) {
        let (p, q) = (Point2::new(a.0, a.1), Point2::new(b.0, b.1));
        let gap = (d.signed_distance(p) - d.signed_distance(q)).abs();
        prop_assert!(gap <= p.dist(q) * (1.0 + 1e-9) + 1e-12);
    }
}
