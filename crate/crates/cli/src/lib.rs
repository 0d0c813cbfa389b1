//! Batch runner for `ctgauss-core` experiments: JSON configs in,
//! deterministic JSON/CSV results out.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod config;
pub mod kinds;
pub mod output;
pub mod record;

use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, Kind};
pub use record::ResultRecord;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io { .. } => exit::VALIDATION,
            CliError::Numerical(_) => exit::NUMERICAL,
        }
    }
}

pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const VALIDATION: u8 = 1;
    pub const NUMERICAL: u8 = 2;
    pub const TOLERANCE: u8 = 3;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_class() {
        assert_eq!(CliError::Validation(vec![]).exit_code(), exit::VALIDATION);
        assert_eq!(CliError::Numerical("x".into()).exit_code(), exit::NUMERICAL);
        let io = CliError::io(Path::new("a"), std::io::Error::other("x"));
        assert_eq!(io.exit_code(), exit::VALIDATION);
        let unstable = ctgauss_core::Error::RiccatiUnstable { disagreement: 1.0, tolerance: 1e-8 };
        assert_eq!(kinds::core_err(unstable).exit_code(), exit::NUMERICAL);
    }
}
