use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("{n} qubits exceeds the brute-force cap of {cap}")]
    TooManyQubits { n: usize, cap: usize },

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("degenerate spectrum: e_sup ({e_sup}) must exceed e_inf ({e_inf})")]
    DegenerateSpectrum { e_inf: f64, e_sup: f64 },

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("degenerate state: both ancilla branches have vanishing norm")]
    DegenerateState,

    #[error("outcome {outcome} has vanishing probability {probability:e}")]
    ZeroProbabilityOutcome { outcome: u8, probability: f64 },

    #[error("postselection dead end at layer {layer}: p0 = {p0:e}")]
    PostselectionDeadEnd { layer: usize, p0: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite energy {energy} at optimizer step {step}")]
    NonFiniteEnergy { step: usize, energy: f64 },

    #[error("no connected graph after {attempts} attempts (n = {n}, p = {p})")]
    ConnectivityCap { n: usize, p: f64, attempts: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the error stems from an unsatisfiable configuration rather
    /// than a failure while running.
    pub fn is_infeasible_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidGraph(_)
                | Error::InvalidWeights(_)
                | Error::TooManyQubits { .. }
                | Error::DegenerateSpectrum { .. }
                | Error::InvalidBounds(_)
                | Error::InvalidConfig(_)
                | Error::ConnectivityCap { .. }
                | Error::Parse(_)
        )
    }
}
