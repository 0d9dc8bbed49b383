use std::io::Write;

use lipadam::objectives::ObjectiveRegistry;

use super::{execute, RunKind, Summary};
use crate::config::RunConfig;
use crate::trace_csv::{phase_path, write_trace};
use crate::CliError;

pub fn cmd_run(kind: RunKind, cfg: &RunConfig, out: &mut dyn Write) -> Result<u8, CliError> {
    let ex = execute(kind, cfg, &ObjectiveRegistry::with_builtins())?;
    if let Some(base) = &cfg.out {
        for (phase, trace) in &ex.phases {
            let path = if kind == RunKind::Global {
                phase_path(base, phase)
            } else {
                base.clone()
            };
            write_trace(&path, trace)?;
            writeln!(out, "wrote {}", path.display())?;
        }
    }
    if kind == RunKind::Global {
        for (phase, trace) in &ex.phases {
            writeln!(out, "{phase}: {}", Summary::of(trace, cfg.tail))?;
        }
    }
    for note in &ex.notes {
        writeln!(out, "note: {note}")?;
    }
    writeln!(out, "{}", ex.summary)?;
    Ok(ex.summary.exit_code())
}
