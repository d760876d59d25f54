use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed model: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}: {detail}")]
    NonFinite { epoch: usize, detail: String },

    #[error("thermodynamically inconsistent training set: sample {index} has negative dissipation {value}")]
    InconsistentTrainingSet { index: usize, value: f64 },

    #[error("state outside the yield surface (y = {y:e}, tolerance {tol:e})")]
    StateInvalid { y: f64, tol: f64 },

    #[error("singular consistency condition (B = {0:e})")]
    SingularConsistency(f64),

    #[error("integrator step size underflow at t = {t:e} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("yield-surface drift {y:e} exceeds the projection window")]
    YieldDrift { y: f64 },

    #[error("sampling stalled after {0} draws without an admissible state")]
    SamplingStall(usize),

    #[error("loading path: {0}")]
    Path(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics (as opposed to bad input or config).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::InconsistentTrainingSet { .. }
                | Error::StateInvalid { .. }
                | Error::SingularConsistency(_)
                | Error::StepUnderflow { .. }
                | Error::YieldDrift { .. }
                | Error::SamplingStall(_)
        )
    }
}
