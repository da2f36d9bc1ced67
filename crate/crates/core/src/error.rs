use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{field}: {msg}")]
    Dimension { field: String, msg: String },

    #[error("scheduling set does not affinely span R^{np} (rank of differences is {rank})")]
    SpanFailure { np: usize, rank: usize },

    #[error("symbol {symbol} is outside the alphabet 0..={np}")]
    Symbol { symbol: usize, np: usize },

    #[error("alphabet mismatch: n_p = {left} vs n_p = {right}")]
    AlphabetMismatch { left: usize, right: usize },

    #[error("{what} {value} out of range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("cannot parse word {0:?}")]
    WordParse(String),

    #[error("operation requires a {expected} model")]
    TimeDomain { expected: &'static str },

    #[error("invalid interval: tau = {tau} > t = {t}")]
    Interval { t: f64, tau: f64 },

    #[error("Hankel matrix has n = {n}, m = {m}; realization needs m = n + 1")]
    HankelShape { n: usize, m: usize },

    #[error("time grid is not uniform at sample {index}")]
    NonUniformGrid { index: usize },

    #[error("certified truncation bound {bound:e} exceeds tolerance {tol:e}")]
    TailBound { bound: f64, tol: f64 },

    #[error("invalid {field}: {msg}")]
    Format { field: String, msg: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Dimension {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn format(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            msg: msg.into(),
        }
    }
}
