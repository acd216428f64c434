use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown letter '{0}'")]
    UnknownLetter(char),

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("invalid substitution: {0}")]
    InvalidSubstitution(String),

    #[error("word is empty")]
    EmptyWord,

    #[error("level {level} exceeds the cap of {cap}")]
    LevelCap { level: usize, cap: usize },

    #[error("word length {len} exceeds the cap of {cap}")]
    WordTooLong { len: usize, cap: usize },

    #[error("invalid potential piece: {0}")]
    InvalidPiece(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("position {x} outside [0, {total})")]
    OutOfRange { x: f64, total: f64 },

    #[error("energy must be finite, got {0}")]
    NonFiniteEnergy(f64),

    #[error("invalid energy window [{0}, {1}]")]
    InvalidWindow(f64, f64),

    #[error("grid too coarse at level {level}: {detail}")]
    GridTooCoarse { level: usize, detail: String },

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("trace map initial conditions need a two-letter Fibonacci model: {0}")]
    NotFibonacci(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
