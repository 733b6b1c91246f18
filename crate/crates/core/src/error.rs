use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("bit count {bits} is not a multiple of {per_symbol} bits per symbol")]
    BitLength { bits: usize, per_symbol: usize },

    #[error("delay {tau:e} s maps to delay index {index}, outside the frame (M = {m})")]
    DelayOutOfRange { tau: f64, index: i64, m: usize },

    #[error("Doppler {nu:e} Hz is not representable on an N = {n} grid")]
    DopplerOutOfRange { nu: f64, n: usize },

    #[error("grid index out of range: {0}")]
    Index(String),

    #[error("sample stream too short: need {needed} samples, have {have}")]
    StreamTooShort { needed: usize, have: usize },

    #[error("delay {0:e} s is not on the sample grid")]
    OffGrid(f64),

    #[error("cyclic prefix of {cp} bins is shorter than the channel delay spread of {delay} bins")]
    CyclicPrefix { cp: usize, delay: usize },

    #[error("search space of {size} hypotheses exceeds the cap of {cap}")]
    SearchTooLarge { size: u128, cap: u128 },

    #[error("inner solve did not converge: relative residual {residual:e} after {iterations} iterations")]
    SolverDiverged { residual: f64, iterations: usize },

    #[error("zero-norm reference channel")]
    ZeroNorm,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}
