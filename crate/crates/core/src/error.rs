use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("scenario has no nodes")]
    EmptyScenario,

    #[error("domain error: {0}")]
    Domain(String),

    /// The receiver threshold cannot be met at any positive distance.
    #[error("no coverage: threshold {threshold_dbm} dBm is unreachable")]
    NoCoverage { threshold_dbm: f64 },

    #[error("rejected key record from node {owner}: {reason}")]
    RejectedRecord { owner: usize, reason: &'static str },

    #[error("invalid configuration: `{field}` {reason}")]
    Config { field: &'static str, reason: String },

    #[error("run failed (area length {area_length_m} m, seed {seed}): {source}")]
    Run {
        area_length_m: f64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }
}
