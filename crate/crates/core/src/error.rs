use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge: estimated error {residual:.3e} (target {target:.3e}) after {evaluations} evaluations")]
    Quadrature {
        residual: f64,
        target: f64,
        evaluations: usize,
    },

    #[error("principal-value integral does not converge under cutoff {cutoff:.3e} rad/s: change {residual:.3e} when doubling the window")]
    PvDivergence { residual: f64, cutoff: f64 },

    #[error("invalid dissipator: {which} has eigenvalue {min_eig:.3e} below tolerance (largest {max_eig:.3e})")]
    InvalidDissipator {
        which: &'static str,
        min_eig: f64,
        max_eig: f64,
    },

    #[error("{n} qubits exceeds the configured maximum of {max}")]
    Resource { n: usize, max: usize },

    #[error("step size underflow at t = {t:.3e} s (h = {h:.3e} s); generator is too stiff for time stepping, use a stationary solver")]
    Stiff { t: f64, h: f64 },

    #[error("steady state is not unique at working precision: null space dimension {dim} (a decoupled or nearly dark collective state relaxes too slowly to resolve)")]
    Degenerate { dim: usize },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("sector {sector} is not diagonalizable (eigenvector condition estimate {condition:.3e})")]
    NotDiagonalizable { sector: usize, condition: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("at sweep value {value}: {source}")]
    AtPoint { value: f64, source: Box<Error> },
}

impl Error {
    pub fn at_point(self, value: f64) -> Self {
        Error::AtPoint {
            value,
            source: Box::new(self),
        }
    }

    /// Strips any sweep-point annotation.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self.root(), Error::Config(_) | Error::Domain(_) | Error::Unsupported(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
