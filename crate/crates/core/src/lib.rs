//! Principal-component regression (PCR) on top of a deterministic thin SVD.
//!
//! The crate keeps every estimator of the PCR calculus as plain functions so
//! the algebraic identities between them can be checked directly:
//!
//! * [`linalg`]: one-sided Jacobi SVD, subset hat matrices, Gram pseudo-inverses.
//! * [`model`]: OLS and PCR fits, the `β̂ = β̂_d + β̂_k` split and the residual
//!   variance identities.
//! * [`diagnostics`]: covariance of `β̂_d` in three equivalent forms, the SE
//!   comparison against OLS and the bias ledger.
//! * [`montecarlo`]: seeded simulation that checks the expectation-level claims.

pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod montecarlo;

pub use error::{PcrError, Result};
pub use linalg::{ComponentSplit, DenseMatrix, Subset, SvdFactors};
pub use model::{Dataset, Design, OlsEstimate, PcrEstimate};
