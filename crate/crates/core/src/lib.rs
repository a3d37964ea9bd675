//! Numerical toolkit for the ground-state energy of the two-dimensional
//! Dirichlet Pauli operator with sign-changing magnetic fields.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] – planar domains, signed distances and triangular meshes.
//! * [`fields`] – the catalog of magnetic fields with closed-form potentials.
//! * [`potential`] – P1 Poisson solves for the scalar potential `Δψ = B`.
//! * [`morse`] – critical points, level sets and gradient integral curves.
//! * [`spectral`] – Pauli, Witten and Dirichlet eigenproblems and bounds.
//! * [`deform`] – boundary pushing towards maximal negativity domains.
//! * [`io`] – JSON / CSV writers shared by the command line front end.

pub mod deform;
pub mod error;
pub mod fem;
pub mod fields;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod morse;
pub mod potential;
pub mod spectral;

pub use error::{Error, Result};
pub use fields::{FieldCatalog, MagneticField};
pub use geometry::{ImplicitDomain, Point2, TriMesh};
pub use potential::{PotentialSolution, ScalarField};
