//! Stationary splitting iterations, spectral parameter selection and a
//! preconditioned restarted GMRES for block two-by-two real systems
//!
//! ```text
//! [[W, -T], [T, W]] (x, y) = (p, q)
//! ```
//!
//! with `W`, `T` symmetric positive semidefinite, the real form of the
//! complex symmetric system `(W + iT)(x + iy) = p + iq`.

pub mod error;
pub mod experiment;
pub mod krylov;
pub mod mm;
pub mod problems;
pub mod sparse;
pub mod spd;
pub mod spectral;
pub mod stationary;
pub mod transform;
pub mod vector;

pub use error::{Error, Result};
pub use krylov::{GmresConfig, GmresReport};
pub use problems::{example, example1, example2, BlockSystem};
pub use sparse::SparseSym;
pub use spd::{InnerMode, InnerSolveConfig, SpdFactorization, SpdSolver};
pub use spectral::{GenEigMode, SpectralEstimates};
pub use stationary::{
    mhss_solve, psbts_solve, residual, sbts_solve, ssts_solve, Method, SolveReport, SolverConfig,
};
pub use transform::{transform, Splitting, TransformedSystem};
