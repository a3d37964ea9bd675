use serde::{Deserialize, Serialize};

use crate::fem::{self, DofMap, P1Element};
use crate::fields::MagneticField;
use crate::geometry::{Point2, TriMesh};
use crate::linalg::{CsrMatrix, Scalar, C64};
use crate::potential::ScalarField;
use crate::{Error, Result};

/// Spin component of the Pauli operator: the sign in front of `h·B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Plus,
    Minus,
}

impl Spin {
    pub fn factor(self) -> f64 {
        match self {
            Spin::Plus => 1.0,
            Spin::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Spin::Plus => Spin::Minus,
            Spin::Minus => Spin::Plus,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Spin::Plus => "plus",
            Spin::Minus => "minus",
        }
    }
}

/// Where `∇ψ` (and hence `A = ∇⊥ψ`) comes from.
#[derive(Clone, Copy)]
pub enum PsiSource<'a> {
    /// Closed-form gradient of the field's Dirichlet potential.
    Analytic(&'a MagneticField),
    /// Recovered nodal gradients of a finite element potential.
    Discrete(&'a ScalarField),
    /// Any other potential with the same Laplacian; used for gauge checks.
    Gradient(&'a (dyn Fn(Point2) -> Point2 + Sync)),
}

/// How the vector potential of a discretization was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Gauge {
    /// `A = 0`.
    None,
    Analytic,
    Discrete,
    Custom,
}

impl Gauge {
    pub fn describe(self) -> &'static str {
        match self {
            Gauge::None => "A = 0",
            Gauge::Analytic => "A = rot grad psi, closed-form gradient at centroids",
            Gauge::Discrete => "A = rot grad psi, recovered FEM gradient at centroids",
            Gauge::Custom => "A = rot grad chi for a user-supplied potential chi",
        }
    }
}

/// Galerkin pencil `(K, M)` on the interior vertices of a mesh.
///
/// `K` is complex Hermitian for the Pauli operator and real symmetric for
/// the Dirichlet and Witten Laplacians; `M` is always the real P1 mass.
#[derive(Debug, Clone)]
pub struct Discretization<T> {
    pub stiffness: CsrMatrix<T>,
    pub mass: CsrMatrix<f64>,
    pub h: f64,
    pub spin: Option<Spin>,
    pub gauge: Gauge,
    pub dofs: DofMap,
}

pub type PauliDiscretization = Discretization<C64>;
pub type WittenDiscretization = Discretization<f64>;

impl<T: Scalar> Discretization<T> {
    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    /// Largest stored magnitude of `K`, the reference for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.stiffness.max_abs()
    }
}

fn centroid_gradients<'a>(mesh: &TriMesh, psi: PsiSource<'a>) -> Result<(Vec<Point2>, Gauge)> {
    let n = mesh.num_triangles();
    match psi {
        PsiSource::Analytic(field) => {
            let mut out = Vec::with_capacity(n);
            for t in 0..n {
                let c = mesh.centroid(t);
                out.push(
                    field
                        .grad_psi(c)
                        .ok_or_else(|| Error::NoAnalyticPotential(field.name().to_string()))?,
                );
            }
            Ok((out, Gauge::Analytic))
        }
        PsiSource::Discrete(field) => {
            if field.mesh().num_vertices() != mesh.num_vertices() {
                return Err(Error::InvalidArgument("potential lives on a different mesh".into()));
            }
            let g = fem::recovered_gradients(mesh, field.values());
            let out = mesh
                .triangles()
                .iter()
                .map(|&[a, b, c]| (g[a] + g[b] + g[c]) * (1.0 / 3.0))
                .collect();
            Ok((out, Gauge::Discrete))
        }
        PsiSource::Gradient(f) => Ok(((0..n).map(|t| f(mesh.centroid(t))).collect(), Gauge::Custom)),
    }
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("semi-classical parameter h = {h} must be positive")))
    }
}

fn finish<T: Scalar>(
    mesh: &TriMesh,
    full: CsrMatrix<T>,
    h: f64,
    spin: Option<Spin>,
    gauge: Gauge,
) -> Discretization<T> {
    let dofs = DofMap::interior(mesh);
    let mass = fem::mass_matrix(mesh).principal_submatrix(dofs.free());
    Discretization {
        stiffness: full.principal_submatrix(dofs.free()),
        mass,
        h,
        spin,
        gauge,
        dofs,
    }
}

/// Local Pauli matrix on one triangle with constant `A` and `B`.
fn pauli_local(el: &P1Element, a: Point2, b: f64, h: f64, spin: Spin) -> [[C64; 3]; 3] {
    let s = el.stiffness();
    let m = el.mass();
    let potential = a.norm2() + spin.factor() * h * b;
    let adv: [f64; 3] = std::array::from_fn(|j| a.dot(el.grads[j]) * el.area / 3.0);
    let mut out = [[C64::default(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = C64::new(h * h * s[i][j] + potential * m[i][j], h * (adv[j] - adv[i]));
        }
    }
    out
}

/// P1 form of `∫|(−ih∇ − A)u|² ± h∫B|u|²` with `A = ∇⊥ψ = (−∂₂ψ, ∂₁ψ)`.
///
/// `A` and `B` are taken at triangle centroids; boundary rows and columns
/// are removed (Dirichlet condition).
pub fn assemble_pauli(
    mesh: &TriMesh,
    field: &MagneticField,
    psi: PsiSource<'_>,
    h: f64,
    spin: Spin,
) -> Result<PauliDiscretization> {
    check_h(h)?;
    let (grads, gauge) = centroid_gradients(mesh, psi)?;
    let full = fem::assemble(mesh, |t, el| {
        let b = field.b(mesh.centroid(t));
        pauli_local(el, grads[t].perp(), b, h, spin)
    });
    Ok(finish(mesh, full, h, Some(spin), gauge))
}

/// Real form `h²∫|∇u|² + ∫(|∇ψ|² − hB)u²` with the same quadrature as
/// [`assemble_pauli`], so it equals the real part of the `P₋` matrix.
pub fn assemble_witten(
    mesh: &TriMesh,
    field: &MagneticField,
    psi: PsiSource<'_>,
    h: f64,
) -> Result<WittenDiscretization> {
    check_h(h)?;
    let (grads, gauge) = centroid_gradients(mesh, psi)?;
    let full = fem::assemble(mesh, |t, el| {
        let w = grads[t].norm2() - h * field.b(mesh.centroid(t));
        let s = el.stiffness();
        let m = el.mass();
        std::array::from_fn(|i| std::array::from_fn(|j| h * h * s[i][j] + w * m[i][j]))
    });
    Ok(finish(mesh, full, h, None, gauge))
}

/// Dirichlet Laplacian pencil `(S, M)`.
pub fn assemble_dirichlet(mesh: &TriMesh) -> WittenDiscretization {
    finish(mesh, fem::stiffness_matrix(mesh), 1.0, None, Gauge::None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_mesh, ImplicitDomain};

    fn small_mesh() -> TriMesh {
        generate_mesh(&ImplicitDomain::unit_disk(), 0.2).unwrap()
    }

    #[test]
    fn zero_field_is_scaled_laplacian() {
        let mesh = small_mesh();
        let b0 = MagneticField::constant(0.0);
        let h = 0.7;
        let p = assemble_pauli(&mesh, &b0, PsiSource::Analytic(&b0), h, Spin::Minus).unwrap();
        let lap = assemble_dirichlet(&mesh);
        let diff = p
            .stiffness
            .linear_combination(C64::new(1.0, 0.0), &lap.stiffness.map(|v| C64::new(-h * h * v, 0.0)), C64::new(1.0, 0.0));
        assert!(diff.max_abs() < 1e-14);
    }

    #[test]
    fn pauli_is_hermitian() {
        let mesh = small_mesh();
        let f = MagneticField::constant(1.0);
        let p = assemble_pauli(&mesh, &f, PsiSource::Analytic(&f), 0.3, Spin::Minus).unwrap();
        assert!(p.stiffness.hermitian_defect() <= 1e-12 * p.scale());
    }

    #[test]
    fn witten_is_real_part_of_pauli_minus() {
        let mesh = small_mesh();
        let f = MagneticField::constant(1.0);
        let p = assemble_pauli(&mesh, &f, PsiSource::Analytic(&f), 0.4, Spin::Minus).unwrap();
        let w = assemble_witten(&mesh, &f, PsiSource::Analytic(&f), 0.4).unwrap();
        let re = p.stiffness.map(|v| v.re);
        let d = re.linear_combination(1.0, &w.stiffness, -1.0);
        assert!(d.max_abs() < 1e-15);
    }

    #[test]
    fn spin_flip_conjugates() {
        let mesh = small_mesh();
        let f = MagneticField::constant(1.0);
        let g = f.negated();
        let plus = assemble_pauli(&mesh, &f, PsiSource::Analytic(&f), 0.5, Spin::Plus).unwrap();
        let minus = assemble_pauli(&mesh, &g, PsiSource::Analytic(&g), 0.5, Spin::Minus).unwrap();
        assert_eq!(plus.stiffness.conj(), minus.stiffness);
    }

    #[test]
    fn rejects_bad_h() {
        let mesh = small_mesh();
        let f = MagneticField::constant(1.0);
        assert!(assemble_pauli(&mesh, &f, PsiSource::Analytic(&f), 0.0, Spin::Plus).is_err());
    }
}
