//! Error type shared by all modules.

/// Typed failure cases. Domain violations are recoverable caller errors, not
/// panics: the CLI maps them to exit code 1.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Input lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two pairs cannot be concatenated: the average jumps in phi and psi
    /// must agree in absolute value.
    #[error("glue mismatch: |delta f| = {df} but |delta g| = {dg} (tolerance {tol})")]
    GlueMismatch { df: f64, dg: f64, tol: f64 },

    /// A tree operation would exceed the permitted depth.
    #[error("depth cap {cap} exceeded: operation needs depth {needed}")]
    DepthCap { cap: u32, needed: u32 },

    /// A pair failed the admissibility check.
    #[error("pair not admissible: worst node residual {residual}")]
    NotAdmissible { residual: f64 },

    /// Parameter set rejected before any work was done.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An enumeration or materialization would exceed its budget.
    #[error("budget exceeded: {needed} candidates/nodes > limit {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    /// Malformed serialized input.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
