use super::Scalar;

/// Accumulates `(row, col, value)` contributions; duplicates are summed.
#[derive(Debug, Clone)]
pub struct TripletBuilder<T> {
    n: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> TripletBuilder<T> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self {
            n,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> CsrMatrix<T> {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; self.n + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut values: Vec<T> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            n: self.n,
            indptr,
            indices,
            values,
        }
    }
}

/// Square compressed-sparse-row matrix with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[a..b]
            .iter()
            .copied()
            .zip(self.values[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        match self.indices[a..b].binary_search(&j) {
            Ok(k) => self.values[a + k],
            Err(_) => T::zero(),
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.abs2().sqrt())
            .fold(0.0, f64::max)
    }

    /// `max |A_ij − conj(A_ji)|`; zero for an exactly Hermitian matrix.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i).conj()).abs2().sqrt());
            }
        }
        worst
    }

    /// Element-wise conjugate.
    pub fn conj(&self) -> Self {
        Self {
            n: self.n,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Same pattern with every stored value passed through `f`.
    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            n: self.n,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `a·self + b·other` over the union sparsity pattern.
    pub fn linear_combination(&self, a: T, other: &Self, b: T) -> Self {
        assert_eq!(self.n, other.n);
        let mut indptr = Vec::with_capacity(self.n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..self.n {
            let mut p = self.indptr[i];
            let mut q = other.indptr[i];
            let (pe, qe) = (self.indptr[i + 1], other.indptr[i + 1]);
            while p < pe || q < qe {
                let cp = if p < pe { self.indices[p] } else { usize::MAX };
                let cq = if q < qe { other.indices[q] } else { usize::MAX };
                if cp == cq {
                    indices.push(cp);
                    values.push(a * self.values[p] + b * other.values[q]);
                    p += 1;
                    q += 1;
                } else if cp < cq {
                    indices.push(cp);
                    values.push(a * self.values[p]);
                    p += 1;
                } else {
                    indices.push(cq);
                    values.push(b * other.values[q]);
                    q += 1;
                }
            }
            indptr.push(indices.len());
        }
        Self {
            n: self.n,
            indptr,
            indices,
            values,
        }
    }

    /// Principal submatrix on `keep` (sorted or not); row/col `keep[k]` maps to `k`.
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            map[i] = k;
        }
        let mut t = TripletBuilder::with_capacity(keep.len(), self.nnz());
        for (k, &i) in keep.iter().enumerate() {
            for (j, v) in self.row(i) {
                let m = map[j];
                if m != usize::MAX {
                    t.push(k, m, v);
                }
            }
        }
        t.build()
    }

    /// Adjacency lists of the (symmetrized) off-diagonal pattern.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j != i {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }
}

/// Jacobi-preconditioned conjugate gradients for a real SPD system.
///
/// Returns the iterate and the final relative residual `‖b − Ax‖ / ‖b‖`.
pub fn conjugate_gradient(
    a: &CsrMatrix<f64>,
    b: &[f64],
    rel_tol: f64,
    max_iters: usize,
) -> (Vec<f64>, f64) {
    let n = a.dim();
    let bnorm = super::norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return (x, 0.0);
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let mut rel = 1.0;
    for _ in 0..max_iters {
        a.matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = super::norm2(&r) / bnorm;
        if rel <= rel_tol {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (x, rel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut t = TripletBuilder::new(2);
        t.push(0, 0, 1.0);
        t.push(0, 0, 2.0);
        t.push(1, 0, -1.0);
        let m = t.build();
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 0), -1.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn cg_solves_tridiagonal() {
        let n = 50;
        let mut t = TripletBuilder::new(n);
        for i in 0..n {
            t.push(i, i, 2.0);
            if i > 0 {
                t.push(i, i - 1, -1.0);
                t.push(i - 1, i, -1.0);
            }
        }
        let a = t.build();
        let b = vec![1.0; n];
        let (x, rel) = conjugate_gradient(&a, &b, 1e-12, 500);
        assert!(rel <= 1e-12);
        let ax = a.mul_vec(&x);
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).abs() < 1e-9);
        }
    }
}
