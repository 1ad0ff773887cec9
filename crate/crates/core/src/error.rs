use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid extra parameter for {family}: {reason}")]
    InvalidExtraParameter { family: &'static str, reason: String },

    #[error("density generator of {family} is not integrable for the given extra parameters")]
    NonIntegrableKernel { family: &'static str },

    #[error("argument outside the domain: {0}")]
    DomainError(String),

    #[error("weight v(z) is singular at z = {z}")]
    SingularWeight { z: f64 },

    #[error("probability {0} is outside (0, 1)")]
    QuantileOutOfRange(f64),

    #[error("adaptive quadrature did not reach tolerance (estimated error {error:e})")]
    NonConvergentQuadrature { error: f64 },

    #[error("log-likelihood is not finite at the requested parameters")]
    NonFiniteLikelihood,

    #[error("optimizer did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NonConvergence { iterations: usize, gradient_norm: f64 },

    #[error("information matrix is singular or not positive definite")]
    SingularInformation,

    #[error("design matrix `{0}` is rank deficient")]
    RankDeficientDesign(&'static str),

    #[error("every extra-parameter grid point failed to fit")]
    AllGridPointsFailed,

    #[error("AICc is undefined for n = {n}, p = {p} (requires n > p + 1)")]
    DegenerateAicc { n: usize, p: usize },

    #[error("sample is degenerate: {0}")]
    DegenerateSample(&'static str),

    #[error("{failed} of {total} envelope refits failed")]
    EnvelopeUnstable { failed: usize, total: usize },

    #[error("{dropped} of {total} replications dropped for non-convergence")]
    ExcessiveNonConvergence { dropped: usize, total: usize },

    #[error("invalid hypothesis: {0}")]
    InvalidHypothesis(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}
