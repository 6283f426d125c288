use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violates an operation's precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A named parameter failed validation.
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("potential evaluated to a negative value {value:e} at sample {sample}")]
    NegativePotential { sample: usize, value: f64 },

    /// A linear solve did not reach its target residual.
    #[error("linear solve did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    /// Conjugate gradient stopped making progress.
    #[error("conjugate gradient stagnated at iteration {iteration} (relative residual {residual:e})")]
    CgStagnation {
        iteration: usize,
        residual: f64,
        trace: Vec<f64>,
    },

    #[error("grid needs about {required} bytes, over the configured cap of {cap} bytes")]
    MemoryCap { required: u64, cap: u64 },

    #[error("degenerate least-squares fit: {0}")]
    DegenerateFit(String),

    /// Backtracking reached the minimal step without lowering the energy.
    #[error("line search failed at iteration {iteration}: energy {energy} could not be lowered (step {step:e})")]
    LineSearch {
        iteration: usize,
        energy: f64,
        step: f64,
    },

    #[error("field diverged (non-finite value) at iteration {iteration}")]
    Divergence { iteration: usize, trace: Vec<f64> },

    #[error("solution is not converged (residual {residual:e} > tolerance {tolerance:e})")]
    NotConverged { residual: f64, tolerance: f64 },

    /// The operator `D` has a negative eigenvalue beyond tolerance.
    #[error("operator is indefinite: smallest eigenvalue {smallest:e} below -{threshold:e}")]
    Indefinite { smallest: f64, threshold: f64 },

    #[error("perturbation is not orthogonal to the minimizer (overlap {overlap:e})")]
    NonOrthogonal { overlap: f64 },
}

impl Error {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    /// Machine-readable error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Precondition(_) => "precondition",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::NegativePotential { .. } => "negative_potential",
            Error::NonConvergence { .. } => "non_convergence",
            Error::CgStagnation { .. } => "cg_stagnation",
            Error::MemoryCap { .. } => "memory_cap",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::LineSearch { .. } => "line_search",
            Error::Divergence { .. } => "divergence",
            Error::NotConverged { .. } => "not_converged",
            Error::Indefinite { .. } => "indefinite",
            Error::NonOrthogonal { .. } => "non_orthogonal",
        }
    }
}
