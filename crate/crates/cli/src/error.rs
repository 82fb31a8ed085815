//! Process-level error classification. Exit codes distinguish parse
//! problems (2), validation failures (3), and runtime faults (4).

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input: missing files, bad JSON, bad flags.
    #[error("{0}")]
    Parse(String),
    /// Structurally readable input that violates an invariant.
    #[error("{0}")]
    Validation(String),
    /// Everything else: write failures, solver faults, internal errors.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    pub fn parse(context: impl AsRef<str>, err: impl std::fmt::Display) -> Self {
        CliError::Parse(format!("{}: {err}", context.as_ref()))
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn runtime(context: impl AsRef<str>, err: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("{}: {err}", context.as_ref()))
    }
}

/// Read a file, mapping failure (including absence) to a parse error that
/// names the path.
pub fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))
}

/// Write a file, mapping failure to a runtime error that names the path.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}
