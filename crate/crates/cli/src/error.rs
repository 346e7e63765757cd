use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure in {invariant}: {source}")]
    Numerical {
        invariant: String,
        #[source]
        source: lapdecay::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            _ => 1,
        }
    }
}

/// Attaches the name of the computation to a core error. Parameter errors that
/// stem from the configuration are reported as config errors.
pub trait Context<T> {
    fn during(self, invariant: &str) -> Result<T, CliError>;
}

impl<T> Context<T> for lapdecay::Result<T> {
    fn during(self, invariant: &str) -> Result<T, CliError> {
        self.map_err(|e| match e {
            lapdecay::Error::InvalidParams(m) | lapdecay::Error::Domain(m) | lapdecay::Error::Precondition(m) => {
                CliError::Config(format!("{invariant}: {m}"))
            }
            other => CliError::Numerical { invariant: invariant.to_string(), source: other },
        })
    }
}
