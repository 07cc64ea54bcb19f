use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed CSV {path}, row {row}: {message}")]
    Csv { path: String, row: u64, message: String },

    #[error("assembly failed: {0}")]
    Assembly(fpme::Error),

    #[error("solver failed: {0}")]
    Solver(fpme::Error),

    #[error("{failed} of {total} suites did not pass")]
    SuitesFailed { failed: usize, total: usize },

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    /// 0 pass, 1 suite failure, 2 configuration or input, 3 assembly, 4 solver.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::SuitesFailed { .. } => 1,
            Self::Config(_) | Self::Csv { .. } | Self::Io { .. } => 2,
            Self::Assembly(_) => 3,
            Self::Solver(_) => 4,
        }
    }

    /// Machine-readable form for stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "error": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let Self::Solver(fpme::Error::NewtonFailed { time, .. }) = self {
            v["time"] = serde_json::json!(time);
        }
        if let Self::Csv { row, .. } = self {
            v["row"] = serde_json::json!(row);
        }
        v
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}
