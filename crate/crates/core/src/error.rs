use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("persona record {id}: {reason}")]
    Persona { id: String, reason: String },

    #[error("news records: {0}")]
    News(String),

    #[error("knowledge base: {0}")]
    KnowledgeBase(String),

    #[error("unknown user `{0}`")]
    UnknownUser(String),

    #[error("log is incomplete; digest refused")]
    IncompleteLog,

    #[error("replay diverged at event {seq}: {reason}")]
    Replay { seq: u64, reason: String },

    #[error(transparent)]
    Gateway(#[from] GatewayError),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("request for `{role}` rejected: {reason}")]
    Validation { role: String, reason: String },

    #[error("backend failure for `{role}` after {attempts} attempt(s): {reason}")]
    Backend {
        role: String,
        attempts: u32,
        reason: String,
    },

    #[error("could not parse response for `{role}`: {reason}; raw: {raw}")]
    Parse {
        role: String,
        reason: String,
        raw: String,
    },

    #[error("missing template `{0}`")]
    Template(String),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
