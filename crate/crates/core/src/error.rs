use crate::integrator::SimState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("coefficient symmetry violated at index {index} (defect {defect:.3e})")]
    SymmetryViolation { index: usize, defect: f64 },

    #[error("{0} requires a torus grid")]
    RequiresTorus(&'static str),

    #[error("{op} is not available in dimension {dim}")]
    UnsupportedDimension { op: &'static str, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {value} outside tabulated range [{lo}, {hi}]")]
    OutOfTableRange { value: f64, lo: f64, hi: f64 },

    #[error("degenerate quadrature: {0}")]
    DegenerateQuadrature(String),

    #[error("time step {dt} exceeds the stability bound {bound:.6}")]
    UnstableTimeStep { dt: f64, bound: f64 },

    #[error("blow-up detected at t = {}", .0.t)]
    BlowUp(Box<BlowUp>),

    #[error("snapshots are not equally spaced in time")]
    IrregularSpacing,

    #[error("too few snapshots: got {got}, need at least {need}")]
    TooFewSnapshots { got: usize, need: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Abort information for a run whose coefficients left the finite range.
#[derive(Debug)]
pub struct BlowUp {
    pub t: f64,
    pub max_coeff: f64,
    pub last_finite: SimState,
}

impl Error {
    pub fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
