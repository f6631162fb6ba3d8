use thiserror::Error;

pub type Result<T, E = FlockError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlockError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("sphere kernel diverges at r = s = {radius} for mu = {mu} <= -(N-1) = {threshold}")]
    DivergentKernel { mu: f64, radius: f64, threshold: f64 },

    #[error("kernel |x|^{mu} is not locally integrable in dimension {dim} (need mu > -{dim})")]
    NonIntegrable { mu: f64, dim: usize },

    #[error("quadrature did not converge: estimated error {estimate:e} exceeds tolerance {tolerance:e}")]
    QuadratureNonConvergence { estimate: f64, tolerance: f64 },

    /// Raised for |r - 1| below the divergence threshold when mu <= -(N-1).
    #[error("potential derivative diverges at r = {r} (mu = {mu}); blow-up sign {sign}")]
    DerivativeDiverges { mu: f64, r: f64, sign: f64 },

    #[error("kernel matrix entry ({i}, {j}) is not acceptable: {value}")]
    ToleranceNotMet { i: usize, j: usize, value: f64 },

    #[error("infeasible mass {mass} (grid capacity {capacity})")]
    InfeasibleMass { mass: f64, capacity: f64 },

    #[error("radius {radius} lies outside the grid [0, {r_max}]")]
    OutOfRange { radius: f64, r_max: f64 },

    #[error("profiles or matrices live on different grids")]
    GridMismatch,

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),

    #[error("profile has zero mass")]
    ZeroMass,

    #[error("ball volume {ball} does not match profile mass {mass}")]
    MassMismatch { mass: f64, ball: f64 },

    #[error("theta = {0} is outside [0, 1]")]
    ThetaOutOfRange(f64),

    #[error("parameter regime error: {0}")]
    Regime(String),

    #[error("shell pattern leaves the theta-shell: {0}")]
    PatternViolatesShell(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("profile value {value} in cell {cell} is outside [0, 1]")]
    InvalidProfile { cell: usize, value: f64 },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FlockError {
    fn from(e: std::io::Error) -> Self {
        FlockError::Io(e.to_string())
    }
}
