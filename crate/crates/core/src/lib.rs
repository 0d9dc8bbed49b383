//! Generalized Adam for locally Lipschitz, possibly nonsmooth objectives.
//!
//! The step direction uses `ζ_w`, the least-norm element of the Clarke
//! generalized gradient. [`planner`] derives parameters with certified
//! convergence constants, [`driver`] runs the basin and local phases, and
//! [`harness`] audits the inequalities those constants rest on.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod driver;
pub mod harness;
pub mod minnorm;
pub mod objectives;
pub mod optimizer;
pub mod planner;
pub mod sampling;
pub mod vector;

pub use driver::{
    run_basin, run_global, run_local, BasinOptions, GlobalConfig, GlobalRun, LocalOptions,
    Termination, Trace, TraceRecord,
};
pub use objectives::{Objective, ObjectiveRegistry, ObjectiveSpec};
pub use optimizer::{adam_step, generalized_step, AdamParams, StepReport};
pub use planner::{plan_basin, plan_local, BasinInputs, BasinPlan, LocalInputs, LocalPlan};
pub use vector::{AdamState, NonnegPoint, Point};
