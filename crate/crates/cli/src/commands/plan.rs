use std::io::Write;

use lipadam::planner::{plan_basin, plan_local, BasinInputs, LocalInputs};

use super::PlanCommand;
use crate::{exit, CliError};

pub fn cmd_plan(cmd: PlanCommand, out: &mut dyn Write) -> Result<u8, CliError> {
    let kv = match cmd {
        PlanCommand::Local {
            delta,
            mu,
            a,
            eps,
            beta2,
            alpha,
            radius,
        } => {
            let mut inputs = LocalInputs::new(delta, mu, eps)
                .with_alpha(alpha)
                .with_radius(radius);
            inputs.a = a;
            inputs.beta2 = beta2;
            plan_local(&inputs)?.to_key_values()
        }
        PlanCommand::Basin {
            sigma,
            eta,
            m,
            beta1,
            eps,
            beta2,
        } => {
            let mut inputs = BasinInputs::new(sigma, eta, m).with_beta2(beta2);
            inputs.beta1s = beta1;
            inputs.epss = eps;
            plan_basin(&inputs)?.to_key_values()
        }
    };
    write!(out, "{kv}")?;
    Ok(exit::OK)
}
