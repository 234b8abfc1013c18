use thiserror::Error;

/// Failures that stop a command before a report exists. All of them map to
/// exit status 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse config {path}: {detail}")]
    ConfigParse { path: String, detail: String },

    #[error("invalid config at `{field}`: {detail}")]
    Config { field: String, detail: String },

    #[error("{source} (at `{field}`)")]
    Validation {
        field: String,
        #[source]
        source: freebound::error::Error,
    },

    #[error("i/o failure on {path}: {detail}")]
    Io { path: String, detail: String },
}

impl CliError {
    pub const EXIT_CODE: u8 = 2;
}
