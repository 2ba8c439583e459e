use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid construction parameters (counts, widths, anisotropy, sample sizes).
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A non-finite value was produced at a specific quadrature node.
    #[error("non-finite value at node {node} (p = {p}, theta = {theta}, phi = {phi})")]
    NonFinite {
        node: usize,
        p: f64,
        theta: f64,
        phi: f64,
    },

    #[error("numerical-domain error: {0}")]
    Numerical(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("contract violation: {0}")]
    Contract(String),
}
