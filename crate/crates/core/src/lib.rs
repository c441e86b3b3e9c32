//! Numerical laboratory for support recovery of a planted k×k principal
//! submatrix in a GOE matrix.
//!
//! The observed matrix is `A = (λ/N)·vvᵀ + W` where `v` is a boolean vector
//! with exactly `Nρ` ones and `W` is a GOE matrix. The crate provides:
//!
//! - [`model`]: instance generation, fixed-weight configurations, exact and
//!   incremental energy evaluation;
//! - [`oracle`]: exhaustive enumeration at small `N` — constrained energy
//!   profiles, partition functions, overlap rate functions, exact exit-time
//!   statistics;
//! - [`parisi`]: the Parisi-type variational solver for the constrained
//!   ground-state energy `E(q; ρ, λ)` (backward PDE via exact Cole-Hopf
//!   layers, Newton/projected-gradient minimization);
//! - [`landscape`]: energy curves `q ↦ E(q; ρ, λ)`, derivative tracks,
//!   overlap-gap detection, and phase-plane scans;
//! - [`mcmc`]: reversible Hamming-2 Metropolis dynamics on the constrained
//!   hypercube, trajectory instrumentation and exit-time experiments;
//! - [`estimators`]: spectral rounding, annealed and exact maximum
//!   likelihood, random baseline, and reference thresholds.

pub mod estimators;
pub mod landscape;
pub mod mcmc;
pub mod model;
pub mod oracle;
pub mod parisi;
pub mod special;

mod error;

pub use error::{Error, Result};
