//! Dirichlet Poisson solves `Δψ = B`, oscillation and boundary fluxes.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::fem::{self, DofMap};
use crate::fields::MagneticField;
use crate::geometry::{generate_mesh, CutSide, ImplicitDomain, Point2, ScalarFn, TriMesh};
use crate::linalg::{conjugate_gradient, norm2, CsrMatrix, EnvelopeLdl};
use crate::{Error, Result};

/// Nodal values on a mesh.
#[derive(Debug, Clone)]
pub struct ScalarField {
    mesh: Arc<TriMesh>,
    values: Vec<f64>,
}

/// Serialized form of a [`ScalarField`]; the mesh is stored separately.
#[derive(Debug, Clone, Serialize)]
pub struct ScalarFieldJson<'a> {
    pub mesh_ref: &'a str,
    pub values: &'a [f64],
}

impl ScalarField {
    pub fn new(mesh: Arc<TriMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} vertices",
                values.len(),
                mesh.num_vertices()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite nodal value".into()));
        }
        Ok(Self { mesh, values })
    }

    /// Nodal interpolant of `f`.
    pub fn sample(mesh: Arc<TriMesh>, f: impl Fn(Point2) -> f64) -> Result<Self> {
        let values = mesh.vertices().iter().map(|&p| f(p)).collect();
        Self::new(mesh, values)
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, p: Point2) -> Option<f64> {
        self.mesh.interpolate(&self.values, p)
    }

    pub fn to_json<'a>(&'a self, mesh_ref: &'a str) -> ScalarFieldJson<'a> {
        ScalarFieldJson {
            mesh_ref,
            values: &self.values,
        }
    }
}

impl std::ops::Add for &ScalarField {
    type Output = ScalarField;

    fn add(self, rhs: &ScalarField) -> ScalarField {
        assert!(Arc::ptr_eq(&self.mesh, &rhs.mesh), "fields live on different meshes");
        let values = self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect();
        ScalarField {
            mesh: self.mesh.clone(),
            values,
        }
    }
}

/// A potential together with its extrema.
#[derive(Debug, Clone)]
pub struct PotentialSolution {
    pub psi: ScalarField,
    pub psi_min: f64,
    pub psi_max: f64,
    pub argmin: Point2,
    pub argmax: Point2,
    pub osc: f64,
}

/// Extremum summary of a [`PotentialSolution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationReport {
    pub psi_min: f64,
    pub psi_max: f64,
    pub osc: f64,
    pub argmin: Point2,
    pub argmax: Point2,
}

impl PotentialSolution {
    pub fn report(&self) -> OscillationReport {
        OscillationReport {
            psi_min: self.psi_min,
            psi_max: self.psi_max,
            osc: self.osc,
            argmin: self.argmin,
            argmax: self.argmax,
        }
    }
}

/// Factorized Dirichlet Laplacian on a fixed mesh, reusable for many loads.
pub struct PoissonSolver {
    mesh: Arc<TriMesh>,
    dofs: DofMap,
    stiffness: CsrMatrix<f64>,
    factor: Option<EnvelopeLdl<f64>>,
}

impl PoissonSolver {
    const RESIDUAL_TOL: f64 = 1e-10;

    pub fn new(mesh: Arc<TriMesh>) -> Result<Self> {
        let dofs = DofMap::interior(&mesh);
        let stiffness = fem::stiffness_matrix(&mesh).principal_submatrix(dofs.free());
        // a failed factorization falls back to conjugate gradients
        let factor = if dofs.is_empty() { None } else { EnvelopeLdl::factor(&stiffness).ok() };
        Ok(Self {
            mesh,
            dofs,
            stiffness,
            factor,
        })
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    /// Solves `Δψ = f` with `ψ = 0` on the boundary.
    pub fn solve(&self, f: impl Fn(Point2) -> f64) -> Result<ScalarField> {
        let load = fem::vertex_load(&self.mesh, f);
        let rhs: Vec<f64> = self.dofs.restrict(&load).iter().map(|v| -v).collect();
        let x = self.solve_system(&rhs)?;
        ScalarField::new(self.mesh.clone(), self.dofs.extend(&x))
    }

    fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let bn = norm2(b);
        if bn == 0.0 {
            return norm2(x);
        }
        let ax = self.stiffness.mul_vec(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        norm2(&r) / bn
    }

    fn solve_system(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.is_empty() {
            return Ok(Vec::new());
        }
        if let Some(f) = &self.factor {
            let mut x = f.solve(b);
            for _ in 0..2 {
                if self.relative_residual(&x, b) <= Self::RESIDUAL_TOL {
                    return Ok(x);
                }
                let ax = self.stiffness.mul_vec(&x);
                let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
                for (xi, di) in x.iter_mut().zip(f.solve(&r)) {
                    *xi += di;
                }
            }
        }
        let (x, rel) = conjugate_gradient(&self.stiffness, b, 1e-12, 20 * b.len() + 100);
        if rel <= Self::RESIDUAL_TOL {
            Ok(x)
        } else {
            Err(Error::SingularSystem(format!(
                "Poisson residual {rel:.3e} after factorization and CG"
            )))
        }
    }
}

/// P1 Galerkin solution of `Δψ = B`, `ψ = 0` on the mesh boundary.
pub fn solve_poisson(mesh: &Arc<TriMesh>, field: &MagneticField) -> Result<ScalarField> {
    PoissonSolver::new(mesh.clone())?.solve(|p| field.b(p))
}

/// Extrema of a nodal field, refined by one Newton step on a local quadratic fit.
pub fn oscillation(psi: &ScalarField) -> PotentialSolution {
    let mesh = psi.mesh();
    let v = psi.values();
    let (imin, imax) = v.iter().enumerate().fold((0, 0), |(a, b), (i, &x)| {
        (if x < v[a] { i } else { a }, if x > v[b] { i } else { b })
    });
    let neighbours = vertex_neighbours(mesh);
    let (argmin, psi_min) = refine_extremum(psi, &neighbours, imin, -1.0);
    let (argmax, psi_max) = refine_extremum(psi, &neighbours, imax, 1.0);
    PotentialSolution {
        psi: psi.clone(),
        psi_min,
        psi_max,
        argmin,
        argmax,
        osc: psi_max - psi_min,
    }
}

fn vertex_neighbours(mesh: &TriMesh) -> Vec<Vec<usize>> {
    let mut nb = vec![Vec::new(); mesh.num_vertices()];
    for t in mesh.triangles() {
        for k in 0..3 {
            nb[t[k]].push(t[(k + 1) % 3]);
            nb[t[k]].push(t[(k + 2) % 3]);
        }
    }
    for n in &mut nb {
        n.sort_unstable();
        n.dedup();
    }
    nb
}

/// `sign = 1` refines a maximum, `-1` a minimum.
fn refine_extremum(psi: &ScalarField, nb: &[Vec<usize>], i: usize, sign: f64) -> (Point2, f64) {
    let mesh = psi.mesh();
    let v = psi.values();
    let x0 = mesh.vertices()[i];
    let nodal = (x0, v[i]);
    if mesh.is_boundary(i) {
        return nodal;
    }
    // two rings give a comfortably overdetermined fit
    let mut patch = vec![i];
    for &j in &nb[i] {
        patch.push(j);
        patch.extend(&nb[j]);
    }
    patch.sort_unstable();
    patch.dedup();
    if patch.len() < 8 {
        return nodal;
    }
    let scale = patch
        .iter()
        .map(|&j| mesh.vertices()[j].dist(x0))
        .fold(0.0, f64::max);
    let mut a = DMatrix::zeros(patch.len(), 6);
    let mut b = DVector::zeros(patch.len());
    for (r, &j) in patch.iter().enumerate() {
        let d = (mesh.vertices()[j] - x0) * (1.0 / scale);
        let row = [1.0, d.x1, d.x2, 0.5 * d.x1 * d.x1, d.x1 * d.x2, 0.5 * d.x2 * d.x2];
        for (c, val) in row.into_iter().enumerate() {
            a[(r, c)] = val;
        }
        b[r] = v[j];
    }
    let Ok(c) = a.svd(true, true).solve(&b, 1e-12) else {
        return nodal;
    };
    let (g, h) = ([c[1], c[2]], [[c[3], c[4]], [c[4], c[5]]]);
    let det = h[0][0] * h[1][1] - h[0][1] * h[0][1];
    // the fit must be strictly concave (max) or convex (min)
    if det <= 0.0 || sign * h[0][0] >= 0.0 {
        return nodal;
    }
    let dx = -(h[1][1] * g[0] - h[0][1] * g[1]) / det;
    let dy = -(-h[0][1] * g[0] + h[0][0] * g[1]) / det;
    let step = Point2::new(dx, dy);
    if step.norm() > 1.0 {
        return nodal;
    }
    let value = c[0] + g[0] * dx + g[1] * dy + 0.5 * (h[0][0] * dx * dx + 2.0 * h[0][1] * dx * dy + h[1][1] * dy * dy);
    let at = x0 + step * scale;
    if sign * (value - v[i]) < 0.0 || mesh.locate(at).is_none() {
        return nodal;
    }
    (at, value)
}

/// Longest boundary loop of the mesh, counter-clockwise.
fn boundary_polyline(mesh: &TriMesh) -> Vec<usize> {
    mesh.boundary_loops().into_iter().max_by_key(|l| l.len()).unwrap_or_default()
}

/// Outward normal derivative at `arc_samples` points equally spaced in arclength.
///
/// At each sample the area-averaged vertex gradients of the enclosing
/// boundary edge are interpolated and projected on the edge's outward normal.
pub fn normal_derivative(psi: &ScalarField, arc_samples: usize) -> Vec<(Point2, f64)> {
    let mesh = psi.mesh();
    let lp = boundary_polyline(mesh);
    if lp.is_empty() || arc_samples == 0 {
        return Vec::new();
    }
    let grads = fem::recovered_gradients(mesh, psi.values());
    let pts: Vec<Point2> = lp.iter().map(|&i| mesh.vertices()[i]).collect();
    let n = pts.len();
    let mut cum = vec![0.0];
    for k in 0..n {
        cum.push(cum[k] + pts[k].dist(pts[(k + 1) % n]));
    }
    let total = cum[n];
    let mut out = Vec::with_capacity(arc_samples);
    let mut e = 0;
    for s in 0..arc_samples {
        let target = total * (s as f64 + 0.5) / arc_samples as f64;
        while e + 1 < n && cum[e + 1] < target {
            e += 1;
        }
        let (a, b) = (pts[e], pts[(e + 1) % n]);
        let len = cum[e + 1] - cum[e];
        let t = ((target - cum[e]) / len).clamp(0.0, 1.0);
        let d = b - a;
        let normal = Point2::new(d.x2, -d.x1) * (1.0 / len);
        let (ga, gb) = (grads[lp[e]], grads[lp[(e + 1) % n]]);
        let g = ga.lerp(gb, t);
        out.push((a.lerp(b, t), g.dot(normal)));
    }
    out
}

/// Sign of the field region for [`restricted_potential`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }
}

/// The region `{±B > 0}` inside the field's default domain.
pub fn sign_region(field: &MagneticField, sign: Sign) -> Result<ImplicitDomain> {
    let s = sign.factor() * field.scale().signum();
    let empty = || Error::EmptyRegion(format!("{{{}B > 0}} is empty", if sign == Sign::Plus { "" } else { "-" }));
    let container = field.default_domain()?;
    match field.name() {
        "constant" => {
            if s * field.param("b").unwrap_or(0.0) > 0.0 {
                Ok(container)
            } else {
                Err(empty())
            }
        }
        "affine" => {
            let beta = field.param("beta").unwrap_or(0.0);
            let (inside_whole, outside) = if s > 0.0 { (beta >= 1.0, beta <= -1.0) } else { (beta <= -1.0, beta >= 1.0) };
            if inside_whole {
                return Ok(container);
            }
            if outside {
                return Err(empty());
            }
            ImplicitDomain::cut_disk(beta, if s > 0.0 { CutSide::Left } else { CutSide::Right })
        }
        "radial" => {
            let beta2 = field.param("beta").unwrap_or(0.0).powi(2);
            if s > 0.0 {
                if beta2 == 0.0 {
                    return Err(empty());
                }
                Ok(ImplicitDomain::disk(Point2::ORIGIN, beta2.sqrt().min(1.0)))
            } else if beta2 >= 1.0 {
                Err(empty())
            } else if beta2 == 0.0 {
                Ok(container)
            } else {
                Err(Error::InvalidArgument(
                    "{B < 0} is an annulus, which is not simply connected".into(),
                ))
            }
        }
        _ => {
            let f = field.clone();
            let sf = sign.factor();
            let g: ScalarFn = Arc::new(move |p| -sf * f.b(p));
            let bb = container.bbox();
            let mut best = (f64::NEG_INFINITY, Point2::ORIGIN);
            let n = 200;
            for j in 0..=n {
                for i in 0..=n {
                    let p = Point2::new(
                        bb.min.x1 + bb.width() * i as f64 / n as f64,
                        bb.min.x2 + bb.height() * j as f64 / n as f64,
                    );
                    if container.signed_distance(p) < 0.0 && -g(p) > best.0 {
                        best = (-g(p), p);
                    }
                }
            }
            if best.0 <= 0.0 {
                return Err(empty());
            }
            ImplicitDomain::sublevel(g, 0.0, best.1, Some(container), 2.0 * bb.diagonal())
        }
    }
}

/// Dirichlet potential on `{±B > 0}`, with its oscillation data.
pub fn restricted_potential(field: &MagneticField, sign: Sign, mesh_h: f64) -> Result<PotentialSolution> {
    let region = sign_region(field, sign)?;
    if region.area() < mesh_h * mesh_h {
        return Err(Error::EmptyRegion(format!(
            "region area {:.3e} is below the mesh resolution",
            region.area()
        )));
    }
    let h = mesh_h.min(region.diameter() / 4.0);
    let mesh = Arc::new(generate_mesh(&region, h)?);
    Ok(oscillation(&solve_poisson(&mesh, field)?))
}

/// Meshes the field's default domain and solves for its potential.
pub fn potential_on_default_domain(field: &MagneticField, mesh_h: f64) -> Result<PotentialSolution> {
    let mesh = Arc::new(generate_mesh(&field.default_domain()?, mesh_h)?);
    Ok(oscillation(&solve_poisson(&mesh, field)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_field;
    use std::collections::BTreeMap;

    fn field(name: &str, ps: &[(&str, f64)]) -> MagneticField {
        let m: BTreeMap<_, _> = ps.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_field(name, &m).unwrap()
    }

    fn disk_mesh(h: f64) -> Arc<TriMesh> {
        Arc::new(generate_mesh(&ImplicitDomain::unit_disk(), h).unwrap())
    }

    #[test]
    fn zero_field_gives_zero_potential() {
        let m = disk_mesh(0.1);
        let psi = solve_poisson(&m, &MagneticField::constant(0.0)).unwrap();
        assert!(psi.values().iter().all(|&v| v == 0.0));
        assert_eq!(oscillation(&psi).osc, 0.0);
        assert!(normal_derivative(&psi, 16).iter().all(|&(_, d)| d == 0.0));
    }

    #[test]
    fn radial_origin_value() {
        let m = disk_mesh(0.04);
        let psi = solve_poisson(&m, &field("radial", &[("beta", 0.6)])).unwrap();
        let v = psi.eval(Point2::ORIGIN).unwrap();
        assert!((v + 0.0275).abs() < 5e-4, "{v}");
    }

    #[test]
    fn constant_field_flux_is_one_half() {
        let m = disk_mesh(0.03);
        let psi = solve_poisson(&m, &MagneticField::constant(1.0)).unwrap();
        for (p, d) in normal_derivative(&psi, 64) {
            assert!((p.norm() - 1.0).abs() < 1e-3);
            assert!((d - 0.5).abs() < 2e-2, "{d}");
        }
    }

    #[test]
    fn boundary_values_are_exactly_zero() {
        let m = disk_mesh(0.1);
        let psi = solve_poisson(&m, &field("sym72", &[])).unwrap();
        for &i in m.boundary() {
            assert_eq!(psi.values()[i], 0.0);
        }
    }

    #[test]
    fn radial_sign_regions() {
        let f = field("radial", &[("beta", 0.6)]);
        let d = sign_region(&f, Sign::Plus).unwrap();
        assert!((d.area() - std::f64::consts::PI * 0.36).abs() < 1e-12);
        assert!(sign_region(&f, Sign::Minus).is_err());
        assert!(matches!(
            sign_region(&field("constant", &[("b", 1.0)]), Sign::Minus),
            Err(Error::EmptyRegion(_))
        ));
    }

    #[test]
    fn sublevel_sign_region_for_sym72() {
        let f = field("sym72", &[]);
        let d = sign_region(&f, Sign::Plus).unwrap();
        assert!(d.contains(Point2::ORIGIN));
        if let ImplicitDomain::Sublevel(s) = &d {
            for &p in s.boundary().vertices().iter().step_by(97) {
                assert!(f.b(p).abs() < 1e-9 || p.norm() > 1.0 - 1e-9);
            }
        } else {
            panic!("expected a sublevel domain");
        }
    }
}
