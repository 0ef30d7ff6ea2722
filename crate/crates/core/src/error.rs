use thiserror::Error;

/// Everything that can go wrong between reading a configuration and writing
/// the last CSV row.
#[derive(Debug, Error)]
pub enum Error {
    // grids and propagation
    #[error("invalid radial grid: {0}")]
    InvalidGrid(String),
    #[error("grid spacing is not uniform (relative deviation {deviation:.3e})")]
    NonUniformGrid { deviation: f64 },
    #[error("solution overflowed |u| > 1e300 at node {node}; renormalize before continuing")]
    Overflow { node: usize },
    #[error("waves live on different grids")]
    GridMismatch,

    // radial channel functions
    #[error("channel {channel} is open at kinetic energy {energy:e} hartree")]
    OpenChannel { channel: usize, energy: f64 },
    #[error("Milne amplitude left [1e-12, 1e12] ({detail})")]
    NumericalBlowup { detail: String },
    #[error(
        "inward channel wave does not match cos(th) f - sin(th) g at the boundary \
         (channel {channel}, mismatch {mismatch:.3e})"
    )]
    BoundaryMismatch { channel: usize, mismatch: f64 },
    #[error("channel wave {channel} has not decayed at r_max (tail ratio {ratio:.3e}); enlarge r_max")]
    TruncatedTail { channel: usize, ratio: f64 },
    #[error("overlap of waves from different channels ({0} vs {1})")]
    ChannelMismatch(usize, usize),
    #[error("energies {0:e} and {1:e} are degenerate; use the quadrature overlap")]
    DegenerateEnergies(f64, f64),
    #[error("samples of channel wave {channel} were not retained")]
    WaveNotRetained { channel: usize },
    #[error("angular momentum l = {l} is not supported by the {model} model")]
    UnsupportedAngularMomentum { l: u32, model: &'static str },

    // spectrum
    #[error("energy {energy:e} is within 1e-12 hartree of the K-matrix pole at {pole:e}")]
    AtPole { energy: f64, pole: f64 },
    #[error("energy window [{lo:e}, {hi:e}] reaches an open channel (threshold {threshold:e})")]
    WindowOpenChannel { lo: f64, hi: f64, threshold: f64 },
    #[error("found more than {max} states in the window")]
    TooManyStates { max: usize },
    #[error("null space at E = {energy:e} is degenerate (second singular value {second:.3e})")]
    DegenerateNullSpace { energy: f64, second: f64 },
    #[error("null vector residual {residual:.3e} exceeds {tol:.1e} at E = {energy:e}")]
    ResidualTooLarge { energy: f64, residual: f64, tol: f64 },
    #[error("channel amplitudes disagree between branches in channel {channel} (relative {relative:.3e})")]
    InconsistentAmplitude { channel: usize, relative: f64 },
    #[error("state at E = {energy:e} has zero norm")]
    ZeroNorm { energy: f64 },

    // metric
    #[error("metric off-diagonal |G[{row}][{col}]| = {value:.6} is not below 1")]
    IllConditionedBasis { row: usize, col: usize, value: f64 },
    #[error("metric is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("metric has no off-diagonal entries")]
    EmptyMatrix,
    #[error("requested {requested} entries but only {available} are available")]
    InvalidCount { requested: usize, available: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    // dynamics
    #[error("wavepacket amplitude at r0 is {ratio:.3e} of its peak (limit 1e-8)")]
    AmplitudeAtCutoff { ratio: f64 },

    // configuration and I/O
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration: {field}: {rule}")]
    Validation { field: String, rule: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classes used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Physics,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Parse { .. } | Io { .. } => ErrorClass::Config,
            Validation { .. }
            | InvalidGrid(_)
            | OpenChannel { .. }
            | WindowOpenChannel { .. }
            | ChannelMismatch(..)
            | UnsupportedAngularMomentum { .. }
            | AmplitudeAtCutoff { .. }
            | TooManyStates { .. }
            | AtPole { .. }
            | DimensionMismatch { .. }
            | InvalidCount { .. }
            | EmptyMatrix
            | WaveNotRetained { .. }
            | GridMismatch => ErrorClass::Physics,
            _ => ErrorClass::Numerical,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Config => 1,
            ErrorClass::Physics => 2,
            ErrorClass::Numerical => 3,
        }
    }

    pub fn validation(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
