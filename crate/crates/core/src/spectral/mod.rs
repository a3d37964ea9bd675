//! Discrete eigenproblems for the Pauli, Witten and Dirichlet operators, the
//! explicit lower and upper bounds, and semi-classical rate sweeps.

mod assembly;
mod bounds;
mod eigen;
mod rates;

pub use assembly::{
    assemble_dirichlet, assemble_pauli, assemble_witten, Discretization, Gauge, PauliDiscretization, PsiSource,
    Spin, WittenDiscretization,
};
pub use bounds::{best_trial_state_bound, ekp_lower_bound, inradius, trial_state_bound, TrialBound};
pub use eigen::{dirichlet_ground, smallest_eigenvalue, smallest_eigenvalue_with, EigenOptions, SpectralResult};
pub use rates::{affine_fit, quadratic_fit, rate_sweep, RateEstimate, SpinChoice, SweepConfig, SweepRow, MAX_OSC_OVER_H};
