//! Linear (P1) finite element building blocks.

use crate::geometry::{Point2, TriMesh};
use crate::linalg::{CsrMatrix, Scalar, TripletBuilder};

/// Geometry of one P1 triangle.
#[derive(Debug, Clone, Copy)]
pub struct P1Element {
    pub area: f64,
    /// Constant gradients of the three barycentric hat functions.
    pub grads: [Point2; 3],
}

impl P1Element {
    pub fn new(c: [Point2; 3]) -> Self {
        let twice = (c[1] - c[0]).cross(c[2] - c[0]);
        let inv = 1.0 / twice;
        // ∇λ_i is the inward-rotated opposite edge scaled by 1/(2|T|)
        let grads = [0, 1, 2].map(|i| {
            let e = c[(i + 2) % 3] - c[(i + 1) % 3];
            Point2::new(-e.x2, e.x1) * inv
        });
        Self {
            area: 0.5 * twice,
            grads,
        }
    }

    /// `∫_T ∇φ_i · ∇φ_j`.
    pub fn stiffness(&self) -> [[f64; 3]; 3] {
        let mut k = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                k[i][j] = self.area * self.grads[i].dot(self.grads[j]);
            }
        }
        k
    }

    /// Consistent mass `∫_T φ_i φ_j = |T| (1 + δ_ij) / 12`.
    pub fn mass(&self) -> [[f64; 3]; 3] {
        let m = self.area / 12.0;
        let mut out = [[m; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            row[i] = 2.0 * m;
        }
        out
    }

    /// Gradient of the linear interpolant of `v`.
    pub fn gradient(&self, v: [f64; 3]) -> Point2 {
        self.grads[0] * v[0] + self.grads[1] * v[1] + self.grads[2] * v[2]
    }
}

pub fn element(mesh: &TriMesh, t: usize) -> P1Element {
    P1Element::new(mesh.corners(t))
}

/// Numbering of the free (non-Dirichlet) vertices.
#[derive(Debug, Clone)]
pub struct DofMap {
    free: Vec<usize>,
    index: Vec<Option<usize>>,
}

impl DofMap {
    /// All interior vertices are free; boundary vertices are constrained.
    pub fn interior(mesh: &TriMesh) -> Self {
        let mut index = vec![None; mesh.num_vertices()];
        let mut free = Vec::new();
        for (i, slot) in index.iter_mut().enumerate() {
            if !mesh.is_boundary(i) {
                *slot = Some(free.len());
                free.push(i);
            }
        }
        Self { free, index }
    }

    pub fn len(&self) -> usize {
        self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free.is_empty()
    }

    /// Vertex of each degree of freedom.
    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn dof(&self, vertex: usize) -> Option<usize> {
        self.index[vertex]
    }

    /// Extends a free-vertex vector by zeros on the constrained vertices.
    pub fn extend<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.index.len()];
        for (k, &v) in self.free.iter().enumerate() {
            out[v] = x[k];
        }
        out
    }

    pub fn restrict<T: Scalar>(&self, full: &[T]) -> Vec<T> {
        self.free.iter().map(|&v| full[v]).collect()
    }
}

/// Assembles `Σ_T local(T)` over the whole mesh.
pub fn assemble<T: Scalar>(mesh: &TriMesh, mut local: impl FnMut(usize, &P1Element) -> [[T; 3]; 3]) -> CsrMatrix<T> {
    let mut b = TripletBuilder::with_capacity(mesh.num_vertices(), 9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let el = element(mesh, t);
        let k = local(t, &el);
        for i in 0..3 {
            for j in 0..3 {
                b.push(tri[i], tri[j], k[i][j]);
            }
        }
    }
    b.build()
}

pub fn stiffness_matrix(mesh: &TriMesh) -> CsrMatrix<f64> {
    assemble(mesh, |_, el| el.stiffness())
}

pub fn mass_matrix(mesh: &TriMesh) -> CsrMatrix<f64> {
    assemble(mesh, |_, el| el.mass())
}

/// Load vector `∫ f φ_i` by vertex quadrature: each triangle contributes
/// `|T| f(x_i) / 3` to its vertex `i`.
pub fn vertex_load(mesh: &TriMesh, f: impl Fn(Point2) -> f64) -> Vec<f64> {
    let fv: Vec<f64> = mesh.vertices().iter().map(|&p| f(p)).collect();
    let mut load = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.area(t) / 3.0;
        for &i in tri {
            load[i] += a * fv[i];
        }
    }
    load
}

/// Gradient of the P1 interpolant on each triangle.
pub fn element_gradients(mesh: &TriMesh, values: &[f64]) -> Vec<Point2> {
    (0..mesh.num_triangles())
        .map(|t| {
            let tri = mesh.triangles()[t];
            element(mesh, t).gradient(tri.map(|i| values[i]))
        })
        .collect()
}

/// Area-weighted average of element gradients at every vertex.
pub fn recovered_gradients(mesh: &TriMesh, values: &[f64]) -> Vec<Point2> {
    let mut acc = vec![Point2::ORIGIN; mesh.num_vertices()];
    let mut w = vec![0.0; mesh.num_vertices()];
    for (t, g) in element_gradients(mesh, values).into_iter().enumerate() {
        let a = mesh.area(t);
        for &i in &mesh.triangles()[t] {
            acc[i] += g * a;
            w[i] += a;
        }
    }
    acc.into_iter().zip(w).map(|(g, w)| g * (1.0 / w)).collect()
}

/// Quadrature rule on a triangle in barycentric coordinates; weights sum to 1
/// and are multiplied by the triangle area on use.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<([f64; 3], f64)>,
}

impl TriangleRule {
    pub fn centroid() -> Self {
        Self {
            points: vec![([1.0 / 3.0; 3], 1.0)],
        }
    }

    /// Seven-point rule exact for polynomials of degree five.
    pub fn degree5() -> Self {
        let s15 = 15f64.sqrt();
        let (a1, a2) = ((6.0 - s15) / 21.0, (6.0 + s15) / 21.0);
        let (w1, w2) = ((155.0 - s15) / 1200.0, (155.0 + s15) / 1200.0);
        let mut points = vec![([1.0 / 3.0; 3], 9.0 / 40.0)];
        for (a, w) in [(a1, w1), (a2, w2)] {
            let b = 1.0 - 2.0 * a;
            points.push(([b, a, a], w));
            points.push(([a, b, a], w));
            points.push(([a, a, b], w));
        }
        Self { points }
    }

    /// `∫_T f` for the triangle with corners `c`.
    pub fn integrate(&self, c: [Point2; 3], f: impl Fn(Point2) -> f64) -> f64 {
        let area = 0.5 * (c[1] - c[0]).cross(c[2] - c[0]).abs();
        area * self
            .points
            .iter()
            .map(|(l, w)| w * f(c[0] * l[0] + c[1] * l[1] + c[2] * l[2]))
            .sum::<f64>()
    }
}

/// Splits a triangle into `4^level` congruent children.
pub fn subdivide(c: [Point2; 3], level: u32) -> Vec<[Point2; 3]> {
    let mut tris = vec![c];
    for _ in 0..level {
        let mut next = Vec::with_capacity(4 * tris.len());
        for [a, b, c] in tris {
            let (ab, bc, ca) = (a.lerp(b, 0.5), b.lerp(c, 0.5), c.lerp(a, 0.5));
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        tris = next;
    }
    tris
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_tri() -> [Point2; 3] {
        [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]
    }

    #[test]
    fn reference_element_stiffness() {
        let k = P1Element::new(unit_tri()).stiffness();
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(k[i][j], expect[i][j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn degree5_rule_integrates_monomials() {
        // ∫_{ref} x^a y^b = a! b! / (a + b + 2)!
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        let rule = TriangleRule::degree5();
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let q = rule.integrate(unit_tri(), |p| p.x1.powi(a as i32) * p.x2.powi(b as i32));
                assert_abs_diff_eq!(q, exact, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn subdivision_preserves_area() {
        let kids = subdivide(unit_tri(), 3);
        assert_eq!(kids.len(), 64);
        let total: f64 = kids.iter().map(|c| 0.5 * (c[1] - c[0]).cross(c[2] - c[0])).sum();
        assert_abs_diff_eq!(total, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn stiffness_annihilates_constants_and_mass_sums_to_area() {
        let m = TriMesh::structured_rect(Point2::new(0.0, 0.0), Point2::new(2.0, 1.0), 6, 4).unwrap();
        let k = stiffness_matrix(&m);
        let ones = vec![1.0; m.num_vertices()];
        assert!(k.mul_vec(&ones).iter().all(|v| v.abs() < 1e-13));
        let mass = mass_matrix(&m).mul_vec(&ones).iter().sum::<f64>();
        assert_abs_diff_eq!(mass, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn recovered_gradient_is_exact_for_linear_data() {
        let m = TriMesh::structured_rect(Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0), 5, 5).unwrap();
        let v: Vec<f64> = m.vertices().iter().map(|p| 3.0 * p.x1 - 2.0 * p.x2).collect();
        for g in recovered_gradients(&m, &v) {
            assert_abs_diff_eq!(g.x1, 3.0, epsilon = 1e-12);
            assert_abs_diff_eq!(g.x2, -2.0, epsilon = 1e-12);
        }
    }
}
