//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Point outside the geometry's chart domain (e.g. Im z <= 0 on the
    /// upper half-plane).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid parameter (resolution too small, k out of range, mismatched
    /// geometry, unknown name).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Operation not available for this geometry (e.g. symplectic potential
    /// on the hyperbolic backend, basis evaluators in kernel-direct mode).
    #[error("not implemented: {0}")]
    NotImplemented(String),

    /// Gram matrix singular or candidate set does not reach full rank.
    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    /// A quantity violated an exact identity by more than roundoff
    /// (signals a convention or truncation bug, never silently clipped).
    #[error("internal consistency: {0}")]
    Inconsistent(String),

    /// Group enumeration exceeded the configured element cap.
    #[error("enumeration cap exceeded: {0}")]
    EnumerationCap(String),

    /// Not enough usable data points for a least-squares fit.
    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
