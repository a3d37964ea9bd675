use nalgebra::{ComplexField, DMatrix};
use serde::Serialize;

use super::assembly::{assemble_dirichlet, Discretization};
use crate::geometry::TriMesh;
use crate::linalg::{dot, norm2, CsrMatrix, EnvelopeLdl, Scalar, C64};
use crate::{Error, Result};

/// Settings for the shift-invert subspace iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Bound on `‖Kv − λMv‖ / ‖Mv‖`.
    pub tol: f64,
    pub max_iters: usize,
    /// Subspace dimension; larger blocks converge faster on clustered spectra.
    pub block: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 400,
            block: 8,
        }
    }
}

impl EigenOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Lowest eigenpair of a discretized operator.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralResult {
    pub lambda: f64,
    /// Nodal values on the whole mesh (zero on the boundary), `‖v‖_M = 1`.
    #[serde(skip)]
    pub eigenvector: Vec<C64>,
    pub h: f64,
    pub residual: f64,
    pub iterations: usize,
    pub shift: f64,
}

pub(crate) struct EigenPair<T> {
    pub value: f64,
    pub vector: Vec<T>,
    pub residual: f64,
    pub iterations: usize,
    pub shift: f64,
}

fn splitmix(mut z: u64) -> f64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

fn start_block<T: Scalar>(n: usize, p: usize) -> Vec<Vec<T>> {
    let mut cols = vec![vec![<T as Scalar>::one(); n]];
    for k in 1..p {
        cols.push(
            (0..n)
                .map(|i| <T as Scalar>::from_re(2.0 * splitmix((k * n + i) as u64) - 1.0))
                .collect(),
        );
    }
    cols
}

/// Two passes of modified Gram–Schmidt in the `M` inner product. Columns
/// that collapse are dropped.
fn m_orthonormalize<T: Scalar>(cols: &mut Vec<Vec<T>>, m: &CsrMatrix<T>) {
    for _ in 0..2 {
        let mut kept: Vec<Vec<T>> = Vec::with_capacity(cols.len());
        let mut kept_m: Vec<Vec<T>> = Vec::with_capacity(cols.len());
        for mut v in cols.drain(..) {
            let before = dot(&v, &m.mul_vec(&v)).re().max(0.0).sqrt();
            for (q, mq) in kept.iter().zip(&kept_m) {
                let c = dot(mq, &v);
                for (vi, &qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
            let mv = m.mul_vec(&v);
            let nrm = dot(&v, &mv).re().max(0.0).sqrt();
            if !(nrm > 1e-10 * before) || !nrm.is_finite() {
                continue;
            }
            let inv = 1.0 / nrm;
            kept.push(v.into_iter().map(|x| Scalar::scale(x, inv)).collect());
            kept_m.push(mv.into_iter().map(|x| Scalar::scale(x, inv)).collect());
        }
        *cols = kept;
    }
}

fn factor_shifted<T: Scalar>(k: &CsrMatrix<T>, m: &CsrMatrix<T>) -> Result<(EnvelopeLdl<T>, f64)> {
    let scale = k.max_abs().max(m.max_abs());
    let mut last = String::new();
    for sigma in [0.0, -1e-12 * scale, -1e-8 * scale, -1e-4 * scale] {
        let a = if sigma == 0.0 {
            k.clone()
        } else {
            k.linear_combination(<T as Scalar>::one(), m, <T as Scalar>::from_re(-sigma))
        };
        match EnvelopeLdl::factor(&a) {
            Ok(f) if f.negative_pivots() == 0 => return Ok((f, sigma)),
            Ok(f) => last = format!("{} negative pivots at shift {sigma:e}", f.negative_pivots()),
            Err(e) => last = e.to_string(),
        }
    }
    Err(Error::FactorizationFailure(last))
}

/// Smallest eigenpair of `K v = λ M v` by block shift-invert iteration with
/// Rayleigh–Ritz. Start block: all-ones plus fixed pseudo-random columns.
pub(crate) fn lowest_pair<T>(k: &CsrMatrix<T>, m_real: &CsrMatrix<f64>, opts: &EigenOptions) -> Result<EigenPair<T>>
where
    T: Scalar + ComplexField<RealField = f64>,
{
    let n = k.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("no interior degrees of freedom".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("eigen tolerance must be positive".into()));
    }
    let m = m_real.map(<T as Scalar>::from_re);
    let (ldl, shift) = factor_shifted(k, &m)?;
    let p = opts.block.clamp(1, n);
    let mut x = start_block::<T>(n, p);
    m_orthonormalize(&mut x, &m);

    for it in 1..=opts.max_iters {
        let mut w: Vec<Vec<T>> = x.iter().map(|xi| ldl.solve(&m.mul_vec(xi))).collect();
        m_orthonormalize(&mut w, &m);
        if w.is_empty() {
            return Err(Error::FactorizationFailure("subspace collapsed".into()));
        }
        let q = w.len();
        let kw: Vec<Vec<T>> = w.iter().map(|wi| k.mul_vec(wi)).collect();
        let mut small = DMatrix::<T>::zeros(q, q);
        for a in 0..q {
            for b in 0..q {
                small[(a, b)] = dot(&w[a], &kw[b]);
            }
        }
        let small = (&small + small.adjoint()) * <T as Scalar>::from_re(0.5);
        let eig = small.symmetric_eigen();
        let mut order: Vec<usize> = (0..q).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        x = order
            .iter()
            .map(|&c| {
                let mut v = vec![<T as Scalar>::zero(); n];
                for (a, wa) in w.iter().enumerate() {
                    let z = eig.eigenvectors[(a, c)];
                    for (vi, &wi) in v.iter_mut().zip(wa) {
                        *vi += wi * z;
                    }
                }
                v
            })
            .collect();

        let lambda = eig.eigenvalues[order[0]];
        let v = &x[0];
        let kv = k.mul_vec(v);
        let mv = m.mul_vec(v);
        let r: Vec<T> = kv
            .iter()
            .zip(&mv)
            .map(|(&a, &b)| a - Scalar::scale(b, lambda))
            .collect();
        let residual = norm2(&r) / norm2(&mv);
        if residual <= opts.tol {
            let mut vector = x.swap_remove(0);
            normalize_phase(&mut vector, &m);
            return Ok(EigenPair {
                value: lambda,
                vector,
                residual,
                iterations: it,
                shift,
            });
        }
    }
    Err(Error::NoConvergence(opts.max_iters))
}

/// Rescales to `‖v‖_M = 1` and rotates the largest entry onto the positive
/// real axis so results do not depend on solver phase.
fn normalize_phase<T: Scalar>(v: &mut [T], m: &CsrMatrix<T>) {
    let nrm = dot(v, &m.mul_vec(v)).re().max(0.0).sqrt();
    let (imax, _) = v
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, x)| if x.abs2() > acc.1 { (i, x.abs2()) } else { acc });
    let pivot = v[imax];
    let mag = pivot.abs2().sqrt();
    let phase = if mag > 0.0 { pivot.conj() / <T as Scalar>::from_re(mag) } else { <T as Scalar>::one() };
    for x in v.iter_mut() {
        *x = Scalar::scale(*x * phase, 1.0 / nrm);
    }
}

/// Lowest eigenvalue and eigenvector of a discretized operator.
pub fn smallest_eigenvalue<T>(disc: &Discretization<T>, tol: f64) -> Result<SpectralResult>
where
    T: Scalar + ComplexField<RealField = f64>,
{
    smallest_eigenvalue_with(disc, &EigenOptions::with_tol(tol))
}

pub fn smallest_eigenvalue_with<T>(disc: &Discretization<T>, opts: &EigenOptions) -> Result<SpectralResult>
where
    T: Scalar + ComplexField<RealField = f64>,
{
    let pair = lowest_pair(&disc.stiffness, &disc.mass, opts)?;
    let full = disc.dofs.extend(&pair.vector);
    Ok(SpectralResult {
        lambda: pair.value,
        eigenvector: full.into_iter().map(|v| C64::new(Scalar::re(v), Scalar::im(v))).collect(),
        h: disc.h,
        residual: pair.residual,
        iterations: pair.iterations,
        shift: pair.shift,
    })
}

/// Ground state energy of the Dirichlet Laplacian on the mesh.
pub fn dirichlet_ground(mesh: &TriMesh) -> Result<f64> {
    let disc = assemble_dirichlet(mesh);
    Ok(smallest_eigenvalue(&disc, EigenOptions::default().tol)?.lambda)
}
