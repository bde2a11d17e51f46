use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Cancellation in an alternating series swamped the result. `min_reliable_t`
    /// is the smallest horizon at which the same query evaluates cleanly, if one
    /// was found.
    #[error("ill-conditioned series ({context}); smallest reliable t is {}; use Monte Carlo instead", fmt_opt(.min_reliable_t))]
    IllConditioned {
        context: String,
        min_reliable_t: Option<f64>,
    },

    #[error("mass defect {defect:e} exceeds tolerance ({context})")]
    MassDefect { context: String, defect: f64 },

    #[error("conditioning event has negligible mass ({mass:e})")]
    NegligibleConditioningMass { mass: f64 },

    #[error("conditioning event has zero exact mass")]
    ZeroMassCondition,

    #[error("MLE diverges: every observation is a distinct allele (k = m = {m})")]
    MleDiverges { m: usize },

    #[error("series did not converge within {terms} terms")]
    NotConverged { terms: usize },

    #[error("enumeration too large: n_atoms + m_draws = {size} exceeds {limit}")]
    EnumerationTooLarge { size: usize, limit: usize },

    #[error("invalid data: {0}")]
    Data(String),
}

fn fmt_opt(t: &Option<f64>) -> String {
    match t {
        Some(t) => format!("{t:.4}"),
        None => "unknown".to_string(),
    }
}

impl Error {
    /// True for failures caused by floating-point conditioning rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IllConditioned { .. }
                | Error::MassDefect { .. }
                | Error::NegligibleConditioningMass { .. }
                | Error::NotConverged { .. }
                | Error::MleDiverges { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
