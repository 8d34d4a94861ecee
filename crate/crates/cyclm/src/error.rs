//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its mathematical domain (e.g. `alpha` outside
    /// `(0, 1/2)`, a non-increasing scale sequence, a negative tolerance).
    #[error("domain: {0}")]
    Domain(String),

    /// The rescaled filter support reaches the spectral singularity: the
    /// integrand of the coefficient covariance is singular and the moment
    /// integrals of the transform are undefined.
    #[error(
        "singularity at |λ| = {s0} lies inside the rescaled filter band \
         (x·A_eff = {x_a_eff}); decrease x = 1/a or use a narrower filter"
    )]
    SingularitySupport { s0: f64, x_a_eff: f64 },

    /// A series does not cover the window a filter coefficient needs.
    #[error(
        "series [{have_lo}, {have_hi}] does not cover the filter window \
         [{need_lo}, {need_hi}] for shift index k = {k}"
    )]
    Coverage {
        need_lo: f64,
        need_hi: f64,
        have_lo: f64,
        have_hi: f64,
        k: u64,
    },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// Covariance factorization failed (matrix not numerically positive
    /// semidefinite, or circulant embedding produced negative eigenvalues).
    #[error("factorization: {0}")]
    Factorization(String),

    /// A level scheme was asked for a level it does not define.
    #[error("scheme has no level j = {j} (defined range {j_min}..={j_max})")]
    MissingLevel { j: u32, j_min: u32, j_max: u32 },

    /// Configuration error (unknown key, malformed value, missing section).
    #[error("config: {0}")]
    Config(String),

    /// A Monte Carlo replicate failed; carries the replicate index so a
    /// deterministic rerun can isolate it.
    #[error("replicate {index}: {source}")]
    Replicate {
        index: u64,
        #[source]
        source: Box<Error>,
    },
}
