//! Sparse linear algebra used by the finite element solvers.
//!
//! Matrices are assembled from triplets into [`CsrMatrix`], reordered with
//! reverse Cuthill–McKee and factored in envelope (skyline) storage as
//! `P A Pᵀ = L D Lᴴ`. The same code handles real symmetric and complex
//! Hermitian systems through the [`Scalar`] trait.

mod envelope;
mod ordering;
mod scalar;
mod sparse;

pub use envelope::EnvelopeLdl;
pub use ordering::{reverse_cuthill_mckee, Permutation};
pub use scalar::{Scalar, C64};
pub use sparse::{conjugate_gradient, CsrMatrix, TripletBuilder};

/// Euclidean inner product `xᴴ y`.
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter()
        .zip(y)
        .fold(T::zero(), |acc, (&a, &b)| acc + a.conj() * b)
}

pub fn norm2<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| v.abs2()).sum::<f64>().sqrt()
}
