// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use isoexplore::dse::DseError;
use isoexplore::generate::GenerateError;
use isoexplore::mapping::MappingError;
use isoexplore::model::SpecError;
use isoexplore::simoracle::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Spec { path: PathBuf, source: SpecError },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    MappingFile { path: PathBuf, source: MappingError },
    #[error("{0}")]
    Usage(String),
    #[error("infeasible mapping: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Dse(#[from] DseError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Read { .. }
            | CliError::Spec { .. }
            | CliError::Json { .. }
            | CliError::MappingFile { .. }
            | CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Dse(DseError::NoFeasibleMapping) => 4,
            CliError::Dse(DseError::InvalidConfig(_)) => 2,
            CliError::Dse(DseError::Mapping(_)) => 2,
            CliError::Sim(SimError::BoundViolation(_)) => 5,
            CliError::Sim(SimError::Infeasible(_)) => 3,
            CliError::Sim(SimError::NoTrials) => 2,
            CliError::Generate(GenerateError::InvalidProfile(_)) => 2,
            _ => 1,
        })
    }
}
