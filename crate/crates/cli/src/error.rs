//! Failure classes and their exit codes.

use std::path::Path;
use std::process::ExitCode;

use storeplan::dispatch::DispatchError;
use storeplan::oracle::OracleError;
use storeplan::planner::PlannerError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input files, flags or configuration.
    #[error("{0}")]
    Input(String),
    /// The run finished without meeting its stopping rule.
    #[error("{0}")]
    NotConverged(String),
    /// Some day has no feasible dispatch.
    #[error("{0}")]
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Input(_) => 1,
            CliError::NotConverged(_) => 2,
            CliError::Infeasible(_) => 3,
        })
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }

    pub fn in_file(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }
}

fn is_infeasible(err: &PlannerError) -> bool {
    matches!(
        err,
        PlannerError::Dispatch(DispatchError::Infeasible { .. }) | PlannerError::Oracle(OracleError::Infeasible)
    )
}

impl From<PlannerError> for CliError {
    fn from(err: PlannerError) -> Self {
        if is_infeasible(&err) {
            CliError::Infeasible(err.to_string())
        } else {
            CliError::Input(err.to_string())
        }
    }
}

impl From<DispatchError> for CliError {
    fn from(err: DispatchError) -> Self {
        PlannerError::from(err).into()
    }
}

impl From<OracleError> for CliError {
    fn from(err: OracleError) -> Self {
        PlannerError::from(err).into()
    }
}

impl From<storeplan::model::ModelError> for CliError {
    fn from(err: storeplan::model::ModelError) -> Self {
        CliError::Input(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Input(format!("serialization failed: {err}"))
    }
}
