use super::{reverse_cuthill_mckee, CsrMatrix, Permutation, Scalar};
use crate::{Error, Result};

/// `P A Pᵀ = L D Lᴴ` with unit lower-triangular `L` kept in row envelope
/// storage and real diagonal `D`. No pivoting: valid for Hermitian matrices
/// whose leading minors stay away from zero, which covers SPD systems and
/// mildly indefinite shifted pencils.
#[derive(Debug, Clone)]
pub struct EnvelopeLdl<T> {
    perm: Permutation,
    first: Vec<usize>,
    offset: Vec<usize>,
    lower: Vec<T>,
    diag: Vec<f64>,
    negative_pivots: usize,
}

impl<T: Scalar> EnvelopeLdl<T> {
    /// Factors `a` after a reverse Cuthill–McKee reordering.
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        let perm = reverse_cuthill_mckee(&a.adjacency());
        Self::factor_with(a, perm)
    }

    pub fn factor_with(a: &CsrMatrix<T>, perm: Permutation) -> Result<Self> {
        let n = a.dim();
        if perm.len() != n {
            return Err(Error::InvalidArgument("permutation size mismatch".into()));
        }
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut first: Vec<usize> = (0..n).collect();
        for (i, f) in first.iter_mut().enumerate() {
            for (oldj, _) in a.row(perm.order[i]) {
                let j = perm.inverse[oldj];
                if j < *f {
                    *f = j;
                }
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0usize);
        for i in 0..n {
            let next = offset[i] + (i - first[i]);
            offset.push(next);
        }
        let mut lower = vec![T::zero(); offset[n]];
        let mut diag = vec![0.0f64; n];
        let mut negative_pivots = 0;

        for i in 0..n {
            let fi = first[i];
            let base = offset[i];
            let mut aii = T::zero();
            for (oldj, v) in a.row(perm.order[i]) {
                let j = perm.inverse[oldj];
                if j < i {
                    lower[base + j - fi] = v;
                } else if j == i {
                    aii = v;
                }
            }
            // g_j = A_ij - sum_k g_k conj(L_jk), with g_k = L_ik D_k
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                if k0 < j {
                    let (head, tail) = lower.split_at_mut(base);
                    let lj = &head[offset[j] + k0 - fj..offset[j] + j - fj];
                    let gi = &tail[k0 - fi..j - fi];
                    let mut acc = T::zero();
                    for (g, l) in gi.iter().zip(lj) {
                        acc += *g * l.conj();
                    }
                    tail[j - fi] -= acc;
                }
            }
            let mut d = aii.re();
            for j in fi..i {
                let g = lower[base + j - fi];
                d -= g.abs2() / diag[j];
                lower[base + j - fi] = g.scale(1.0 / diag[j]);
            }
            if !d.is_finite() || d.abs() <= 1e-14 * scale {
                return Err(Error::FactorizationFailure(format!(
                    "pivot {d:e} at row {i} (matrix scale {scale:e})"
                )));
            }
            if d < 0.0 {
                negative_pivots += 1;
            }
            diag[i] = d;
        }
        Ok(Self {
            perm,
            first,
            offset,
            lower,
            diag,
            negative_pivots,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of negative eigenvalues of the factored matrix (Sylvester inertia).
    pub fn negative_pivots(&self) -> usize {
        self.negative_pivots
    }

    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y: Vec<T> = self.perm.order.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.offset[i]..self.offset[i + 1]];
            let mut acc = T::zero();
            for (l, yj) in row.iter().zip(&y[fi..i]) {
                acc += *l * *yj;
            }
            y[i] -= acc;
        }
        for (yi, d) in y.iter_mut().zip(&self.diag) {
            *yi = yi.scale(1.0 / d);
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = y[i];
            let row = &self.lower[self.offset[i]..self.offset[i + 1]];
            for (l, yj) in row.iter().zip(y[fi..i].iter_mut()) {
                *yj -= l.conj() * xi;
            }
        }
        let mut x = vec![T::zero(); n];
        for (new, &old) in self.perm.order.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{TripletBuilder, C64};

    fn grid_laplacian(m: usize) -> CsrMatrix<f64> {
        let n = m * m;
        let mut t = TripletBuilder::new(n);
        for i in 0..m {
            for j in 0..m {
                let k = i * m + j;
                t.push(k, k, 4.0);
                if i > 0 {
                    t.push(k, k - m, -1.0);
                }
                if i + 1 < m {
                    t.push(k, k + m, -1.0);
                }
                if j > 0 {
                    t.push(k, k - 1, -1.0);
                }
                if j + 1 < m {
                    t.push(k, k + 1, -1.0);
                }
            }
        }
        t.build()
    }

    #[test]
    fn real_spd_solve() {
        let a = grid_laplacian(12);
        let f = EnvelopeLdl::factor(&a).unwrap();
        assert_eq!(f.negative_pivots(), 0);
        let b: Vec<f64> = (0..a.dim()).map(|i| (i as f64).sin()).collect();
        let x = f.solve(&b);
        let r = a.mul_vec(&x);
        for (u, v) in r.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_hermitian_solve() {
        let re = grid_laplacian(9);
        let n = re.dim();
        let mut t = TripletBuilder::new(n);
        for i in 0..n {
            for (j, v) in re.row(i) {
                let phase = if j > i { 0.3 } else if j < i { -0.3 } else { 0.0 };
                t.push(i, j, C64::new(v, 0.0) * C64::new(0.0, phase).exp());
            }
        }
        let a = t.build();
        assert!(a.hermitian_defect() < 1e-15);
        let f = EnvelopeLdl::factor(&a).unwrap();
        let b: Vec<C64> = (0..n).map(|i| C64::new(1.0, i as f64 * 0.1)).collect();
        let x = f.solve(&b);
        let r = a.mul_vec(&x);
        for (u, v) in r.iter().zip(&b) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn indefinite_inertia_is_counted() {
        let mut t = TripletBuilder::new(3);
        t.push(0, 0, 2.0);
        t.push(1, 1, -1.0);
        t.push(2, 2, 3.0);
        t.push(0, 1, 0.5);
        t.push(1, 0, 0.5);
        let f = EnvelopeLdl::factor(&t.build()).unwrap();
        assert_eq!(f.negative_pivots(), 1);
    }
}
