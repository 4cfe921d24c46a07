use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use orlicz_lorentz::funcspace::QuadratureSpec;
use orlicz_lorentz::rearrange::decreasing_rearrangement;
use orlicz_lorentz::StepFunction64;
use orlicz_lorentz_harness::best_constant::norm_of;
use orlicz_lorentz_harness::generate::{generate, GenKind, SizeParams};
use orlicz_lorentz_harness::inputs::{Inputs, NormSpec, OperatorDesc, ProfileSpec};
use orlicz_lorentz_harness::scenario::{run_scenario, run_scenario_spec, write_report, Overrides, Scenario};
use orlicz_lorentz_harness::{HarnessError, Result, Suite};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

/// Rearrangements, Orlicz gauge norms, operator images, condition checks
/// and randomized inequality suites.
#[derive(Parser)]
#[command(name = "olz", version)]
struct Cli {
    /// RNG seed; overrides scenario seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trial count; overrides scenario trial counts.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Random probes per trial (t or x grid size).
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Tolerance on normalized slack.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory for check/verify/run, output file otherwise (default stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// f* of a step function given as {"breakpoints": [...], "values": [...]}.
    Rearrange { input: PathBuf },
    /// Gauge norm of {"f": step} or {"profile": ...} under {"norm": {"phi": ..., "weight": ..., "lorentz": bool}}.
    Norm { input: PathBuf },
    /// (T f)(x) for {"operator": ..., "f": step, "x": [...]}.
    Apply { input: PathBuf },
    /// Runs one scenario object (a checker or a suite).
    Check { input: PathBuf },
    /// Runs an inequality suite on random inputs.
    Verify {
        /// oneil2, hlp_chain, majorization16, oneil_kernel_bound, sandwich or tighter_bound.
        suite: String,
        /// Optional JSON file with suite inputs.
        #[arg(long)]
        inputs: Option<PathBuf>,
    },
    /// Runs a config {"scenarios": [...]}; exit status 0 iff every scenario meets its expectation.
    Run { config: PathBuf },
    /// Random instance: step, decreasing_step, decreasing_kernel_profile or grid_kernel.
    Generate {
        kind: String,
        #[arg(long, default_value_t = 8)]
        slabs: usize,
        #[arg(long, default_value_t = 64)]
        cells: usize,
        #[arg(long)]
        monotone: bool,
    },
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn emit(value: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => fs::write(p, text).map_err(|e| HarnessError::io(format!("writing {}", p.display()), e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NormRequest {
    #[serde(default)]
    f: Option<StepFunction64>,
    #[serde(default)]
    profile: Option<ProfileSpec>,
    norm: NormSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApplyRequest {
    operator: OperatorDesc,
    f: StepFunction64,
    x: Vec<f64>,
}

fn overrides(cli: &Cli) -> Overrides {
    Overrides { seed: cli.seed, trials: cli.trials, probes: cli.grid, tolerance: cli.tol }
}

fn finish_scenario(sc: Scenario, out: Option<&Path>) -> Result<bool> {
    let report = run_scenario_spec(&sc);
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| HarnessError::io(format!("creating {}", dir.display()), e))?;
            write_report(&report, dir)?;
            println!("{}: {} ({})", sc.name, report.observed, if report.ok { "ok" } else { "unexpected" });
        }
        None => emit(&serde_json::to_value(&report)?, None)?,
    }
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    Ok(report.ok)
}

fn run(cli: &Cli) -> Result<bool> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Rearrange { input } => {
            let f: StepFunction64 = read_json(input)?;
            let r = decreasing_rearrangement(&f);
            emit(&json!({ "star": r.star, "total_measure": r.total_measure }), out)?;
        }
        Command::Norm { input } => {
            let req: NormRequest = read_json(input)?;
            let f = match (req.f, req.profile) {
                (Some(f), None) => f.into(),
                (None, Some(p)) => p.to_func()?,
                _ => return Err(HarnessError::input("give exactly one of f and profile")),
            };
            emit(&json!({ "norm": norm_of(f, &req.norm)? }), out)?;
        }
        Command::Apply { input } => {
            let req: ApplyRequest = read_json(input)?;
            let op = req.operator.to_operator()?;
            let q = QuadratureSpec::default();
            let values = req.x.iter().map(|x| op.apply(&req.f, *x, &q)).collect::<orlicz_lorentz::Result<Vec<_>>>()?;
            emit(&json!({ "x": req.x, "values": values }), out)?;
        }
        Command::Check { input } => {
            let mut sc: Scenario = read_json(input)?;
            if sc.name.is_empty() {
                sc.name = sc.suite.as_str().to_string();
            }
            overrides(cli).apply(&mut sc);
            return finish_scenario(sc, out);
        }
        Command::Verify { suite, inputs } => {
            let s: Suite = serde_json::from_value(Value::String(suite.clone()))
                .map_err(|_| HarnessError::arg(format!("unknown suite {suite:?}")))?;
            let mut sc = Scenario::new(s.as_str(), s.into());
            if let Some(p) = inputs {
                sc.inputs = read_json::<Inputs>(p)?;
            }
            overrides(cli).apply(&mut sc);
            return finish_scenario(sc, out);
        }
        Command::Run { config } => {
            let dir = out.unwrap_or(Path::new("reports"));
            let summary = run_scenario(config, dir, &overrides(cli))?;
            for e in &summary.scenarios {
                let tail = e.error.as_deref().map(|m| format!(": {m}")).unwrap_or_default();
                println!("{}: {} ({}){tail}", e.name, e.observed, if e.ok { "ok" } else { "unexpected" });
            }
            return Ok(summary.ok);
        }
        Command::Generate { kind, slabs, cells, monotone } => {
            let kind: GenKind = kind.parse()?;
            let size = SizeParams { slabs: *slabs, grid: *cells, monotone: *monotone };
            emit(&serde_json::to_value(generate(kind, cli.seed.unwrap_or(0), &size)?)?, out)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
