use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input contains no samples")]
    EmptyInput,

    #[error("only {distinct} distinct points available, {requested} clusters requested")]
    FewerDistinctPointsThanR { distinct: usize, requested: usize },

    #[error("state id {id} out of range for {n} states")]
    IdOutOfRange { id: usize, n: usize },

    #[error("sequence of length {len} is too short, at least {min} entries required")]
    SequenceTooShort { len: usize, min: usize },

    #[error("{visited} visited states cannot support {k} contexts")]
    TooFewStates { visited: usize, k: usize },

    #[error("eigendecomposition did not converge: {0}")]
    DecompositionFailure(String),

    #[error("visited state {0} has no context assigned")]
    UnassignedVisitedState(usize),

    #[error("{visited} visited states exceed the exhaustive search bound of {max}")]
    TooManyStatesForOracle { visited: usize, max: usize },

    #[error("purity needs discrete latent labels; use band spread for continuous latent worlds")]
    ContinuousLatentUnsupported,

    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse { line: usize, column: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Whether the error stems from the configuration rather than the run.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::InvalidConfig(_) | Error::ConfigParse { .. })
    }

    /// Stable machine-readable name of the error kind.
    pub fn category(&self) -> &'static str {
        match self {
            Error::EmptyInput => "EmptyInput",
            Error::FewerDistinctPointsThanR { .. } => "FewerDistinctPointsThanR",
            Error::IdOutOfRange { .. } => "IdOutOfRange",
            Error::SequenceTooShort { .. } => "SequenceTooShort",
            Error::TooFewStates { .. } => "TooFewStates",
            Error::DecompositionFailure(_) => "DecompositionFailure",
            Error::UnassignedVisitedState(_) => "UnassignedVisitedState",
            Error::TooManyStatesForOracle { .. } => "TooManyStatesForOracle",
            Error::ContinuousLatentUnsupported => "ContinuousLatentUnsupported",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::ConfigParse { .. } => "ParseError",
            Error::Io(_) => "Io",
        }
    }
}
