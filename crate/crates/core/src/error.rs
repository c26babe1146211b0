use thiserror::Error;

/// Errors raised by the catalog, the step maps and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the function or family.
    #[error("parameter `{name}` = {value} out of domain: {reason}")]
    ParameterDomain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The target of an inversion is outside the range of the function.
    #[error("cannot invert at {target}: {reason}")]
    InversionRange { target: f64, reason: &'static str },

    /// The vector field divides by a vanishing derivative away from the origin.
    #[error("singular vector field at x = {x}: derivative of kappa vanished")]
    SingularField { x: f64 },

    /// A perturbation signal exceeded its declared bound.
    #[error("perturbation bound violated at t = {t}, x = {x}: |{value}| > {bound}")]
    BoundViolation {
        t: f64,
        x: f64,
        value: f64,
        bound: f64,
    },

    /// An iterative special-function evaluation did not converge.
    #[error("{what} did not converge within {iterations} iterations")]
    Convergence {
        what: &'static str,
        iterations: usize,
    },

    /// A caller-side precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Parameters do not fit the requested scheme.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// A state that the invariants rule out was reached.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
