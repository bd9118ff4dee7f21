use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("ground-state gap {gap:.3e} at s = {s} is below the degeneracy threshold {threshold:.3e}")]
    DegenerateGroundGap { s: f64, gap: f64, threshold: f64 },

    #[error("levels {n} and {k} are degenerate at s = {s} but coupled by dH/ds (|<n|H'|k>| = {element:.3e})")]
    DegenerateCoupling { s: f64, n: usize, k: usize, element: f64 },

    #[error("quadrature did not reach tolerance {tol:.1e} on [{a}, {b}] (estimate {estimate:.3e} after {evaluations} evaluations)")]
    QuadratureFailure { a: f64, b: f64, tol: f64, estimate: f64, evaluations: usize },

    #[error("first-order coefficients vanish at s = {s} (sum |b1|^2 = {norm:.3e}); use the boundary-cancelation path")]
    VanishingLeadingOrder { s: f64, norm: f64 },

    #[error("boundary-cancelation condition fails: |H^({order})({s})| = {norm:.3e}")]
    BoundaryConditionViolated { order: usize, s: f64, norm: f64 },

    #[error("family provides derivatives up to order {available}, order {requested} is required")]
    DerivativeUnavailable { requested: usize, available: usize },

    #[error("grid halving changed order-{order} coefficients by {change:.3e} (limit {limit:.1e})")]
    GridTooCoarse { order: usize, change: f64, limit: f64 },

    #[error("coefficients below order {order} do not vanish at s = {s} (max |b| = {size:.3e})")]
    NonVanishingLowerOrder { order: usize, s: f64, size: f64 },

    #[error("step control needs more than {max_steps} steps for T = {t}")]
    StepSizeUnderflow { t: f64, max_steps: usize },

    #[error("cannot measure a distance from the zero vector")]
    ZeroVector,

    #[error("no closed form for schedule `{0}`")]
    UnsupportedSchedule(String),

    #[error("schedule ODE diverged: {0}")]
    OdeDivergence(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }

    /// Strips any [`Error::Context`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self.root(), Error::Config { .. })
    }
}
