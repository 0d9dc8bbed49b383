use std::fs::File;
use std::io::Write;

use lipadam::driver::DriverError;
use lipadam::objectives::ObjectiveRegistry;
use lipadam::planner::PlanError;
use rayon::prelude::*;

use super::{execute, RunKind};
use crate::config::{num, RunConfig};
use crate::{exit, CliError};

pub const HEADER: [&str; 10] = [
    "index",
    "param",
    "value",
    "feasible",
    "constraint",
    "L0",
    "L",
    "termination",
    "steps",
    "rate",
];

/// `points` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, points: usize) -> Vec<String> {
    match points {
        0 => Vec::new(),
        1 => vec![num(a)],
        _ => (0..points)
            .map(|i| {
                let t = i as f64 / (points - 1) as f64;
                let x = if i + 1 == points { b } else { a + t * (b - a) };
                num(x)
            })
            .collect(),
    }
}

fn infeasible(e: &CliError) -> Option<&str> {
    match e {
        CliError::Plan(PlanError::Infeasible { constraint, .. })
        | CliError::Driver(DriverError::Plan(PlanError::Infeasible { constraint, .. })) => {
            Some(constraint)
        }
        _ => None,
    }
}

fn row(
    index: usize,
    param: &str,
    value: &str,
    cfg: &RunConfig,
    mode: RunKind,
) -> Result<Vec<String>, CliError> {
    let mut cfg = cfg.clone();
    cfg.set(param, value)?;
    let mut cells = vec![index.to_string(), param.to_string(), value.to_string()];
    match execute(mode, &cfg, &ObjectiveRegistry::with_builtins()) {
        Ok(ex) => {
            let (l0, l) = ex
                .local_plan
                .as_ref()
                .map_or((String::new(), String::new()), |lp| (num(lp.l0), num(lp.l)));
            cells.extend([
                "true".to_string(),
                String::new(),
                l0,
                l,
                ex.summary.termination.to_string(),
                ex.summary.steps.to_string(),
                ex.summary.rate_text(),
            ]);
        }
        Err(e) => match infeasible(&e) {
            Some(c) => {
                cells.extend(["false".to_string(), c.to_string()]);
                cells.extend(std::iter::repeat_n(String::new(), 5));
            }
            None => return Err(e),
        },
    }
    Ok(cells)
}

pub fn cmd_sweep(
    cfg: &RunConfig,
    param: &str,
    values: &[String],
    mode: RunKind,
    out: &mut dyn Write,
) -> Result<u8, CliError> {
    if values.is_empty() {
        return Err(CliError::Usage(
            "sweep needs --values or --from/--to".into(),
        ));
    }
    // validate the key before spending time on runs
    cfg.clone().set(param, &values[0])?;
    let rows: Vec<Vec<String>> = values
        .par_iter()
        .enumerate()
        .map(|(i, v)| row(i, param, v, cfg, mode))
        .collect::<Result<_, _>>()?;

    let sink: Box<dyn Write + '_> = match &cfg.out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(&mut *out),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(HEADER).map_err(std::io::Error::from)?;
    for r in &rows {
        w.write_record(r).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    drop(w);
    if let Some(path) = &cfg.out {
        writeln!(out, "wrote {} rows to {}", rows.len(), path.display())?;
    }
    Ok(exit::OK)
}
