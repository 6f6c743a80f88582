use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Core(#[from] biphoton::Error),

    #[error("{0}")]
    CompareFailed(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    /// 1 configuration, 2 numeric or domain, 3 comparison failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Core(e) => match e {
                biphoton::Error::Config(_) | biphoton::Error::Parse(_) | biphoton::Error::Io(_) => 1,
                biphoton::Error::Domain(_) | biphoton::Error::NoPhaseMatching(_) | biphoton::Error::Numeric(_) => 2,
            },
            CliError::CompareFailed(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            1 => "config",
            2 => "numeric",
            _ => "compare",
        }
    }

    /// `error code=<n> kind=<kind> message="<text>"` on one line.
    pub fn machine_line(&self) -> String {
        let msg = self.to_string().replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
        format!("error code={} kind={} message=\"{msg}\"", self.exit_code(), self.kind())
    }
}
