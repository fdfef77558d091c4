use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("chirp-periodic prefix too short: channel needs {needed} samples, prefix has {got}")]
    PrefixTooShort { needed: usize, got: usize },

    #[error("cluster length {cluster_len} exceeds the {bins} Doppler bins")]
    ClusterTooLong { cluster_len: usize, bins: usize },

    #[error("observation windows of pilots at {first} and {second} overlap")]
    OverlappingWindows { first: usize, second: usize },

    #[error("pilot at {pilot} lies inside the guard of the pilot at {owner}")]
    PilotInGuard { pilot: usize, owner: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("support of size {support} exceeds the {rows} available measurements")]
    SupportTooLarge { support: usize, rows: usize },

    #[error("observation index set is not a contiguous interval")]
    NotContiguous,

    #[error(
        "frame carries non-pilot symbols at index {0}; sub-Nyquist sensing needs pilot-only frames"
    )]
    DataInFrame(usize),

    #[error("no decimation factor fits: {needed} bins needed, N = {n}")]
    DecimationInfeasible { needed: usize, n: usize },

    #[error("missing parameter: {0}")]
    MissingParameter(&'static str),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
