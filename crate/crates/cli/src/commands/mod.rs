mod plan;
mod run;
mod sweep;
mod verify;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lipadam::driver::{
    prepare_global, run_basin, run_global_with, run_local, BasinOptions, LocalOptions, Termination,
    Trace,
};
use lipadam::harness::fit_rate;
use lipadam::objectives::{estimate_growth, Objective, ObjectiveRegistry};
use lipadam::planner::{plan_local, AlphaChoice, LocalInputs, LocalPlan};
use lipadam::Point;

use crate::config::{num, parse_pairs, RunConfig};
use crate::{exit, CliError};

#[derive(Debug, Parser)]
#[command(
    name = "lipadam",
    version,
    about = "Generalized Adam with certified constants"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print planned constants as `key = value` lines
    #[command(subcommand)]
    Plan(PlanCommand),
    /// Run an optimizer phase and write its trace
    #[command(allow_negative_numbers = true)]
    Run {
        #[arg(value_enum)]
        kind: RunKind,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Estimate the hypotheses and audit every certified inequality
    #[command(allow_negative_numbers = true)]
    Verify {
        #[command(flatten)]
        config: ConfigArgs,
        /// Only fit the convergence rate of a trace CSV
        #[arg(long)]
        trace: Option<PathBuf>,
        /// With --trace: fail when the fitted rate exceeds this
        #[arg(long)]
        max_rate: Option<f64>,
        /// Largest n sampled by the Ω-decay audit
        #[arg(long, default_value_t = 100)]
        n_max: u64,
    },
    /// Run a grid of configurations, one summary row each
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Config key to vary
        #[arg(long)]
        param: String,
        /// Explicit values, comma separated
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to"])]
        values: Vec<String>,
        #[arg(long, requires = "to")]
        from: Option<f64>,
        #[arg(long, requires = "from")]
        to: Option<f64>,
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[arg(long, value_enum, default_value_t = RunKind::Local)]
        mode: RunKind,
    },
}

#[derive(Debug, Subcommand)]
pub enum PlanCommand {
    /// Local phase from growth bounds δ ≤ μ
    #[command(allow_negative_numbers = true)]
    Local {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long = "A")]
        a: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long)]
        beta2: Option<f64>,
        /// lower+, mid, upper, or t in (0, 1]
        #[arg(long, default_value = "upper")]
        alpha: AlphaChoice,
        #[arg(long = "R", default_value_t = 1.0)]
        radius: f64,
    },
    /// Basin phase from the Lipschitz bound σ and target η
    #[command(allow_negative_numbers = true)]
    Basin {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long = "M")]
        m: f64,
        #[arg(long)]
        beta1: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 0.9)]
        beta2: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RunKind {
    Local,
    Basin,
    Global,
}

/// Config file plus flag overrides. Flags are applied after the file and
/// `--set` pairs after the flags.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub objective: Option<String>,
    #[arg(long)]
    pub dim: Option<String>,
    #[arg(long)]
    pub norm: Option<String>,
    #[arg(long)]
    pub profile: Option<String>,
    /// Preset (zero, ones, e1) or coordinates `3,0,0`
    #[arg(long)]
    pub w0: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long = "M")]
    pub m: Option<String>,
    #[arg(long = "A")]
    pub a: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub beta2: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub samples: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    /// Multiply the planned local α (above 1 leaves the certified interval)
    #[arg(long)]
    pub alpha_scale: Option<String>,
    /// Multiply the planned basin M (below 1 voids the descent guarantee)
    #[arg(long)]
    pub m_scale: Option<String>,
    /// Any config key
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl ConfigArgs {
    pub fn pairs(&self) -> Result<Vec<(String, String)>, CliError> {
        let mut pairs = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => Vec::new(),
        };
        let w0 = self.w0.as_ref().map(|v| {
            if v.contains(',') || v.parse::<f64>().is_ok() {
                format!("[{v}]")
            } else {
                v.clone()
            }
        });
        let flags = [
            ("objective", &self.objective),
            ("dim", &self.dim),
            ("norm", &self.norm),
            ("profile", &self.profile),
            ("w0", &w0),
            ("delta", &self.delta),
            ("mu", &self.mu),
            ("sigma", &self.sigma),
            ("M", &self.m),
            ("A", &self.a),
            ("eps", &self.eps),
            ("beta2", &self.beta2),
            ("alpha", &self.alpha),
            ("seed", &self.seed),
            ("samples", &self.samples),
            ("tol", &self.tol),
            ("out", &self.out),
            ("alpha_scale", &self.alpha_scale),
            ("m_scale", &self.m_scale),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                pairs.push((k.to_string(), v.clone()));
            }
        }
        for s in &self.set {
            let mut parsed = parse_pairs(s)?;
            if parsed.len() != 1 {
                return Err(CliError::Usage(format!(
                    "--set expects KEY=VALUE, got `{s}`"
                )));
            }
            pairs.push(parsed.remove(0));
        }
        Ok(pairs)
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        Ok(RunConfig::from_pairs(self.pairs()?)?)
    }
}

pub fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let result = match cli.command {
        Command::Plan(p) => plan::cmd_plan(p, out),
        Command::Run { kind, config } => config
            .resolve()
            .and_then(|cfg| run::cmd_run(kind, &cfg, out)),
        Command::Verify {
            config,
            trace,
            max_rate,
            n_max,
        } => match trace {
            Some(path) => verify::cmd_verify_trace(&path, max_rate, out),
            None => config
                .resolve()
                .and_then(|cfg| verify::cmd_verify(&cfg, n_max, out)),
        },
        Command::Sweep {
            config,
            param,
            values,
            from,
            to,
            points,
            mode,
        } => {
            let grid = match (from, to) {
                (Some(a), Some(b)) => sweep::linspace(a, b, points),
                _ => values,
            };
            config
                .resolve()
                .and_then(|cfg| sweep::cmd_sweep(&cfg, &param, &grid, mode, out))
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// The summary line shared by `run` and `sweep`.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub termination: Termination,
    pub steps: u64,
    pub rate: Option<f64>,
}

impl Summary {
    fn of(trace: &Trace, tail: f64) -> Self {
        Summary {
            termination: trace.termination,
            steps: trace.steps(),
            rate: fit_rate(trace, tail).ok().map(|f| f.rate),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.termination {
            Termination::HypothesisViolation => exit::HYPOTHESIS_VIOLATION,
            Termination::StepCap => exit::STEP_CAP,
            _ => exit::OK,
        }
    }

    pub fn rate_text(&self) -> String {
        self.rate.map_or_else(|| "n/a".into(), num)
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "termination = {}, steps = {}, rate = {}",
            self.termination,
            self.steps,
            self.rate_text()
        )
    }
}

/// Everything a run produced.
pub struct Execution {
    pub phases: Vec<(&'static str, Trace)>,
    pub local_plan: Option<LocalPlan>,
    pub summary: Summary,
    pub notes: Vec<String>,
}

fn minimizer(cfg: &RunConfig, oracle: &dyn Objective) -> Result<Option<Point>, CliError> {
    Ok(cfg.minimizer()?.or_else(|| oracle.minimizer()))
}

/// `α` scaled with `β₁ = 1 − α_lo/α` re-derived; the certified constants
/// are left as they were.
pub fn scale_alpha(lp: &mut LocalPlan, factor: f64) {
    if factor != 1.0 {
        lp.alpha *= factor;
        lp.beta1 = 1.0 - lp.alpha_lo / lp.alpha;
    }
}

/// Local plan from the given or estimated growth bounds.
pub fn local_plan(cfg: &RunConfig, oracle: &dyn Objective) -> Result<LocalPlan, CliError> {
    let (delta, mu) = match (cfg.delta, cfg.mu) {
        (Some(d), Some(m)) => (d, m),
        (d, m) => {
            let star = minimizer(cfg, oracle)?.ok_or_else(|| {
                CliError::Usage(
                    "delta/mu have to be given when the objective has no known minimizer".into(),
                )
            })?;
            let e = estimate_growth(oracle, &star, cfg.radius, cfg.samples, cfg.seed)?;
            (
                d.unwrap_or(e.delta_hat / cfg.safety),
                m.unwrap_or(e.mu_hat * cfg.safety),
            )
        }
    };
    let mut inputs = LocalInputs::new(delta, mu, cfg.eps)
        .with_alpha(cfg.alpha)
        .with_radius(cfg.radius);
    inputs.a = cfg.a;
    inputs.beta2 = cfg.beta2;
    let mut lp = plan_local(&inputs)?;
    scale_alpha(&mut lp, cfg.alpha_scale);
    Ok(lp)
}

pub fn execute(
    kind: RunKind,
    cfg: &RunConfig,
    registry: &ObjectiveRegistry,
) -> Result<Execution, CliError> {
    let oracle = cfg.build_objective(registry)?;
    let w0 = cfg.start()?;
    let w_star = minimizer(cfg, oracle.as_ref())?;
    match kind {
        RunKind::Local => {
            let lp = local_plan(cfg, oracle.as_ref())?;
            let opts = LocalOptions {
                tol: cfg.tol,
                step_cap: cfg.local_cap,
                w_star,
            };
            let trace = run_local(oracle.as_ref(), &w0, &lp, &opts)?;
            let summary = Summary::of(&trace, cfg.tail);
            Ok(Execution {
                notes: trace.notes.clone(),
                phases: vec![("local", trace)],
                local_plan: Some(lp),
                summary,
            })
        }
        RunKind::Basin => {
            let gcfg = cfg.global_config()?;
            let setup = prepare_global(oracle.as_ref(), &w0, &gcfg)?;
            let opts = BasinOptions {
                step_cap: cfg.basin_cap,
                w_star,
            };
            let trace = run_basin(oracle.as_ref(), &w0, &setup.basin_plan, &opts)?;
            let summary = Summary::of(&trace, cfg.tail);
            Ok(Execution {
                notes: trace.notes.clone(),
                phases: vec![("basin", trace)],
                local_plan: Some(setup.local_plan),
                summary,
            })
        }
        RunKind::Global => {
            let gcfg = cfg.global_config()?;
            let mut setup = prepare_global(oracle.as_ref(), &w0, &gcfg)?;
            scale_alpha(&mut setup.local_plan, cfg.alpha_scale);
            let run = run_global_with(oracle.as_ref(), &w0, &gcfg, setup)?;
            let termination = run.termination();
            let mut notes = run.basin.notes.clone();
            let mut steps = run.basin.steps();
            let mut rate = None;
            if let Some(local) = &run.local {
                notes.extend(local.notes.iter().cloned());
                steps += local.steps();
                rate = Summary::of(local, cfg.tail).rate;
            }
            let mut phases = vec![("basin", run.basin)];
            if let Some(local) = run.local {
                phases.push(("local", local));
            }
            Ok(Execution {
                phases,
                local_plan: Some(run.setup.local_plan),
                summary: Summary {
                    termination,
                    steps,
                    rate,
                },
                notes,
            })
        }
    }
}
