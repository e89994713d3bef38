use alloc::string::String;
use alloc::vec::Vec;

/// Every failure the library can report.
///
/// Variants fall in three families: hypothesis violations (the certified
/// regime does not apply), numerical failures (a solver did not reach its
/// tolerance) and input errors (shapes, supports, constraints).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("support {inner} is not contained in {outer}")]
    SupportNotContained { inner: String, outer: String },

    #[error("matrix is {rows}x{cols}, expected {expected}x{expected}")]
    DimensionMismatch { rows: usize, cols: usize, expected: usize },

    #[error("hamiltonian is not hermitian (residual {residual:.3e})")]
    NonHermitianHamiltonian { residual: f64 },

    #[error("kraus operators and hamiltonian live on different supports")]
    MismatchedSupports,

    #[error("degenerate kernel: zero eigenvalue has multiplicity {multiplicity}")]
    DegenerateKernel { multiplicity: usize },

    #[error("rate {rate} exceeds the spectral gap {gap}")]
    RateExceedsGap { rate: f64, gap: f64 },

    #[error("interaction support {0} is empty or not connected")]
    DisconnectedSupport(String),

    #[error("interaction term on {support} does not annihilate the identity (residual {residual:.3e})")]
    IdentityNotAnnihilated { support: String, residual: f64 },

    #[error("term on {0} does not fit in the volume")]
    SupportOverflow(String),

    #[error("boundary term on {0} reaches into the bulk volume")]
    BoundaryInsideBulk(String),

    #[error("{what} did not converge (achieved residual {residual:.3e})")]
    NonConvergence { what: &'static str, residual: f64 },

    #[error("ill-conditioned kernel: second-smallest singular value {sigma:.3e}")]
    IllConditionedKernel { sigma: f64 },

    #[error("state is not positive: minimum eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("eigensolver failure: {0}")]
    EigensolverFailure(&'static str),

    #[error("supports of the two observables overlap")]
    OverlappingSupport,

    #[error("insufficient data: {got} points, need at least {needed}")]
    InsufficientData { got: usize, needed: usize },

    #[error("restricted generator on {support} is singular (smallest singular value {sigma:.3e})")]
    SingularRestriction { support: String, sigma: f64 },

    #[error("diagram violates its constraints: {0}")]
    ConstraintViolation(&'static str),

    #[error("hypothesis violated: {inequality} fails ({lhs} vs {rhs})")]
    HypothesisViolation { inequality: &'static str, lhs: f64, rhs: f64 },

    #[error("series ratio {ratio} is not below 1")]
    DivergentSeries { ratio: f64 },

    #[error("quadrature needs {needed} evaluations, budget is {budget}")]
    QuadratureBudgetExceeded { needed: u64, budget: u64 },

    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("newton iteration diverged (residual trace {trace:?}); try a smaller temperature difference")]
    NewtonDivergence { trace: Vec<f64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for the hypothesis family (infeasible certificates).
    pub fn is_hypothesis_violation(&self) -> bool {
        matches!(self, Error::HypothesisViolation { .. } | Error::DivergentSeries { .. })
    }

    /// True for solver failures.
    pub fn is_numerical_failure(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::IllConditionedKernel { .. }
                | Error::NotPositive { .. }
                | Error::EigensolverFailure(_)
                | Error::SingularRestriction { .. }
                | Error::NewtonDivergence { .. }
                | Error::DegenerateKernel { .. }
                | Error::QuadratureBudgetExceeded { .. }
        )
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
