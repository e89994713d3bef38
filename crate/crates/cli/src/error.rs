use std::path::PathBuf;

/// Failures of a run, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error(transparent)]
    Core(#[from] weakqms_core::Error),

    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),

    #[error("runs are not comparable: {0}")]
    StructuralMismatch(String),

    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    /// 2 for infeasible certificates, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_hypothesis_violation() => 2,
            CliError::Core(e) if e.is_numerical_failure() => 3,
            _ => 1,
        }
    }
}
