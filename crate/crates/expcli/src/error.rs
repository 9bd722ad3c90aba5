use std::path::PathBuf;

use thiserror::Error;

/// A rejected configuration, positioned in the source text when possible.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}", self.render())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    /// Dotted path to the offending field, empty at the top level.
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            column: None,
            path: path.into(),
            message: message.into(),
        }
    }

    fn render(&self) -> String {
        let mut s = String::from("config");
        if let Some(l) = self.line {
            s += &format!(":{l}");
            if let Some(c) = self.column {
                s += &format!(":{c}");
            }
        }
        if !self.path.is_empty() && self.path != "." {
            s += &format!(" at `{}`", self.path);
        }
        format!("{s}: {}", self.message)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration problems, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            _ => 1,
        }
    }
}

impl From<uic_core::Error> for CliError {
    fn from(e: uic_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}
