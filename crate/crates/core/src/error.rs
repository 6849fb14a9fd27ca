//! Crate-wide error type.

/// Errors raised by distribution fitting, the CE loop, and the benchmark
/// harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Distribution parameters are structurally invalid (non-finite entries,
    /// wrong shapes, a covariance that stays indefinite after regularization,
    /// mixture weights that cannot be normalized).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// A fit was requested on an empty sample or one with zero total weight.
    #[error("cannot fit distribution: {0}")]
    EmptyFit(String),

    /// A function argument is out of its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Configuration validation failed; every violation is listed.
    #[error("invalid configuration:\n{}", format_violations(.0))]
    InvalidConfig(Vec<String>),

    /// The evaluation budget cannot absorb another population draw.
    #[error("evaluation budget exhausted: used {used} of {budget}, next step needs {needed} more")]
    BudgetExhausted { used: u64, budget: u64, needed: u64 },

    /// An importance/proposal density is unusable at a drawn point (zero
    /// density where a sample landed, or an unnormalizable density).
    #[error("invalid proposal density: {0}")]
    InvalidProposal(String),

    /// A problem name not present in the registry.
    #[error("unknown problem '{name}' (known: {known})")]
    UnknownProblem { name: String, known: String },

    /// An algorithm name outside the benchmark vocabulary.
    #[error("unknown algorithm '{name}' (known: {known})")]
    UnknownAlgorithm { name: String, known: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(violations: &[String]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
