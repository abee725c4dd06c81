use thiserror::Error;

/// Errors raised by kernel evaluation, quadrature and the verification probes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WormError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: partial value {partial:e}, error estimate {err_est:e} after {nodes} nodes")]
    Nonconvergence {
        partial: f64,
        err_est: f64,
        nodes: usize,
    },

    #[error("integrand has not decayed below {threshold:e} of its peak by the mapped endpoint {endpoint}")]
    DecayDetection { threshold: f64, endpoint: f64 },

    #[error("separation Re λ = {re:e} is below the minimum {min:e} for this representation")]
    SeparationTooSmall { re: f64, min: f64 },

    #[error("points lie on the boundary diagonal (λ = 0)")]
    Diagonal,

    #[error("pole of the kernel integrand at s = {0}")]
    Pole(f64),

    #[error("principal logarithm branch cut crossed: {0}")]
    Branch(String),

    #[error("point is not in the domain: {0}")]
    Membership(String),

    #[error("series did not converge within {terms} terms (ratio estimate {ratio:.6})")]
    NearSingularSet { terms: usize, ratio: f64 },

    #[error("ζ = {modulus:e} is too close to the boundary of the annulus")]
    AnnulusMargin { modulus: f64 },

    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, WormError>;

impl WormError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        WormError::Domain(msg.into())
    }

    /// True for errors caused by a failing numerical procedure rather than bad input.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            WormError::Nonconvergence { .. }
                | WormError::DecayDetection { .. }
                | WormError::NearSingularSet { .. }
                | WormError::Inconclusive(_)
        )
    }
}
