//! Command-line front end for `lipadam`: plan, run, verify and sweep.
//!
//! Exit codes are the machine contract, see [`exit`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod trace_csv;

use lipadam::driver::DriverError;
use lipadam::harness::HarnessError;
use lipadam::objectives::ObjectiveError;
use lipadam::planner::PlanError;
use thiserror::Error;

pub use commands::{dispatch, Cli};
pub use config::{ConfigError, RunConfig, Start};

pub mod exit {
    pub const OK: u8 = 0;
    /// Malformed input, unreadable or unwritable files, empty traces.
    pub const FAILURE: u8 = 1;
    pub const INFEASIBLE: u8 = 2;
    pub const HYPOTHESIS_VIOLATION: u8 = 3;
    pub const STEP_CAP: u8 = 4;
    /// An audit found a violated inequality.
    pub const AUDIT_VIOLATION: u8 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Csv(#[from] trace_csv::TraceCsvError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        let plan = |p: &PlanError| match p {
            PlanError::Infeasible { .. } => exit::INFEASIBLE,
            PlanError::BadInput(_) => exit::FAILURE,
        };
        let objective = |o: &ObjectiveError| match o {
            ObjectiveError::HypothesisViolation { .. } => exit::HYPOTHESIS_VIOLATION,
            _ => exit::FAILURE,
        };
        match self {
            CliError::Plan(p) | CliError::Driver(DriverError::Plan(p)) => plan(p),
            CliError::Objective(o)
            | CliError::Driver(DriverError::Objective(o))
            | CliError::Harness(HarnessError::Objective(o)) => objective(o),
            _ => exit::FAILURE,
        }
    }
}
