//! Dense complex linear algebra for the small (at most 64 x 64) matrices that
//! show up in beamforming: channel matrices, Gram matrices and sample
//! covariances.
//!
//! Decompositions are Jacobi-type. They are slower than Householder-based
//! routines on large inputs but give high relative accuracy and need no
//! external LAPACK.

mod eigh;
mod matrix;
mod svd;
pub mod vector;

pub use eigh::{eigh, rayleigh_quotient, EighResult};
pub use matrix::ComplexMatrix;
pub use svd::{svd, thin_svd, SvdResult, ThinSvd};

pub use num_complex::Complex64 as C64;

/// Relative off-diagonal tolerance at which Jacobi sweeps stop.
pub const CONVERGENCE_TOL: f64 = 1e-12;

/// Sweep cap for the Jacobi routines: `10 * max(rows, cols)`.
pub(crate) fn sweep_cap(rows: usize, cols: usize) -> usize {
    10 * rows.max(cols).max(1)
}

/// Converts a linear power ratio to decibels.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Converts decibels to a linear power ratio. `+inf` maps to `+inf`.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
