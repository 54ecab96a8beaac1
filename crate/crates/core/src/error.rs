use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate bearing: agents {from} and {to} are coincident")]
    DegenerateBearing { from: usize, to: usize },

    #[error("constellation generation failed: agent {agent} not placed after {attempts} attempts")]
    Placement { agent: usize, attempts: usize },

    #[error("invalid constellation spec: {0}")]
    InvalidSpec(String),

    #[error("scenario parse error at line {line}, column {column}: {message}")]
    ScenarioParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("scenario field `{field}`: {message}")]
    ScenarioField { field: &'static str, message: String },

    #[error("unsupported scenario version {found} (expected {expected})")]
    ScenarioVersion { found: u64, expected: u64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("controller failed at step {step}: {source}")]
    Controller {
        step: u64,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
