//! Simulation, multi-scale filter transforms, and method-of-moments
//! estimation for cyclic long-memory processes — stationary processes whose
//! spectral density blows up like |λ² − s₀²|^(−2α) at a pair of nonzero
//! frequencies ±s₀.
//!
//! The crate is organized around one pipeline:
//!
//! 1. [`spectral`] — the spectral model f(λ) = h(λ)/|λ²−s₀²|^(2α) and its
//!    moment integrals (coefficient variances/covariances of the transform).
//! 2. [`filters`] — admissible band filters (Shannon, Meyer, Mexican hat)
//!    and their spectral constants.
//! 3. [`simulate`] — Gegenbauer, spectral-bin, and exact-covariance
//!    generators with deterministic keyed random streams.
//! 4. [`transform`] — multi-level filter coefficients of a sampled series
//!    and the level-scheme bookkeeping.
//! 5. [`estimate`] — method-of-moments inversion (Lambert W) of the first
//!    two transform moments into (ŝ₀, α̂), with asymptotic covariance.
//! 6. [`mc`] — Monte Carlo replication harness and normality diagnostics.

pub mod error;
pub mod estimate;
pub mod fft;
pub mod filters;
pub mod linalg;
pub mod mc;
pub mod quad;
pub mod simulate;
pub mod spectral;
pub mod transform;

pub use error::{Error, Result};

/// Crate version, for embedding in artifact manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
