use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no employment records for occupation `{0}`")]
    MissingOccupation(String),

    #[error("no ads for occupation `{occupation}` in month {month}; share undefined")]
    UndefinedShare { occupation: String, month: String },

    #[error("series `{0}` is constant; cannot standardize")]
    ConstantSeries(String),

    #[error("transform state incomplete: {0}")]
    StateIncomplete(String),

    #[error("actual series has zero range; NRMSE normalizer undefined")]
    UndefinedNormalization,

    #[error("actual value at index {0} is zero; MAPE undefined")]
    UndefinedMape(usize),

    #[error("series `{0}` is constant; correlation undefined")]
    UndefinedCorrelation(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate corpus: {0}")]
    Corpus(String),

    #[error("zero vector has no direction; similarity undefined")]
    UndefinedSimilarity,

    #[error("unknown skill `{0}`")]
    UnknownSkill(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid generator spec: {0}")]
    Spec(String),

    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    #[error("experiment failed: {0}")]
    ExperimentFailed(String),

    #[error(transparent)]
    Nn(#[from] skillcast_nn::NnError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("parse error in {path}: {detail}")]
    Parse { path: String, detail: String },
}

impl Error {
    /// True for errors caused by bad configuration or unusable inputs, as
    /// opposed to runtime/numeric failures. The CLI maps these to exit 2.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::MissingOccupation(_)
                | Error::UnknownSkill(_)
                | Error::Config(_)
                | Error::Spec(_)
                | Error::InsufficientData(_)
                | Error::Parse { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
