use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid filter order {0}; order must be at least 1")]
    InvalidOrder(usize),
    #[error("filter needs at least two non-zero-trimmed coefficients")]
    TooShort,
    #[error("degenerate filter: all moments up to the filter length vanish")]
    DegenerateFilter,
    #[error("unknown filter `{0}`")]
    UnknownFilter(String),
    #[error("malformed filter table line {line}: {reason}")]
    FilterTable { line: usize, reason: String },
    #[error("correlations of an order-1 filter are not summable at H = {0} (need H <= 1/2)")]
    NonSummable(f64),
    #[error("correlations of an order-1 filter are not square-summable at H = {0} (need H < 3/4)")]
    NonSquareSummable(f64),
    #[error("Hurst parameter {0} outside [0, 1]")]
    HurstOutOfRange(f64),
    #[error("tau^a = {0} is not positive; the filter violates the invertibility assumption")]
    AssumptionViolated(f64),
    #[error("closed form only covers dilated increment filters, got `{0}`")]
    UnsupportedFilter(String),
    #[error("correlation at H = 1 is undefined for this filter")]
    UndefinedLimit,
    #[error("{what} = {value} outside its domain")]
    Domain { what: &'static str, value: f64 },
    #[error("circulant embedding has a negative eigenvalue {0:e}")]
    EmbeddingFailure(f64),
    #[error("need more than {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid dilation design: {0}")]
    Design(String),
    #[error("unknown table id `{0}`")]
    UnknownTable(String),
    #[error("{0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
