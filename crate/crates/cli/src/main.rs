//! `junctio`: solve, analyse and verify junction control problems from a
//! scenario file.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 solver did not
//! converge, 3 a verification check failed.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use junctio::hjb::{FieldKind, FieldMeta};
use junctio::junction::{solve_limit, JunctionMode};
use junctio::model::{JunctionKind, Scenario, ThermostatConfig};
use junctio::relay::{simulate, Policy, RelayState};
use junctio::verify::{
    check_viscosity, residual_tolerance, run_convergence, subsolution_report, value_tolerance, ThresholdFamily,
};
use junctio::{solve_thermostatic, validate_scenario, ValueField64};

use manifest::Recorder;

const EXIT_CONFIG: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "junctio", version, about = "Thermostatic approximation of junction control problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the relay system for one or more thresholds.
    Solve(SolveArgs),
    /// Junction value, its ingredients and the limit field.
    Junction(JunctionArgs),
    /// Convergence study as the thresholds vanish.
    Converge(ConvergeArgs),
    /// Simulate the hybrid system under a fixed policy.
    Simulate(SimulateArgs),
    /// Check a value field against the equation and junction conditions.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct Relay {
    /// Threshold eps (all branches); repeat to solve several.
    #[arg(long = "epsilon", value_name = "EPS")]
    epsilons: Vec<f64>,
    /// Per-branch thresholds of a threefold relay, in branch id order.
    #[arg(long, value_delimiter = ',', value_name = "E1,E2,E3")]
    thresholds: Option<Vec<f64>>,
    /// Cyclic switching order of a threefold relay.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_name = "IDS")]
    order: Option<Vec<i32>>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    scenario: PathBuf,
    #[command(flatten)]
    relay: Relay,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct JunctionArgs {
    scenario: PathBuf,
    /// twofold, threefold_uniform or threefold_nonuniform; defaults by branch count.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Directory for the report, the limit field and the manifest; prints the
    /// report otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    scenario: PathBuf,
    /// twofold, uniform, squared1, squared2 or squared3.
    #[arg(long)]
    family: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.025")]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    scenario: PathBuf,
    /// Initial mode and native position, e.g. `1:0.3` or `-1:-0.05`.
    #[arg(long, allow_hyphen_values = true)]
    start: String,
    /// `constant:A` or `per-mode:ID=A,ID=A,...`.
    #[arg(long, allow_hyphen_values = true)]
    policy: String,
    #[arg(long)]
    horizon: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[command(flatten)]
    relay: Relay,
    /// Trajectory CSV path; printed otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    scenario: PathBuf,
    /// Field CSV as written by `solve` or `junction`.
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    mode: Option<String>,
    /// Finite-difference step; the scenario grid step by default.
    #[arg(long)]
    fd_step: Option<f64>,
    /// Only require the subsolution conditions.
    #[arg(long)]
    subsolution: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(path: &Path) -> Result<(Vec<u8>, Scenario<f64>)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).context("scenario is not UTF-8")?;
    let s = Scenario::from_json(text).with_context(|| format!("loading scenario {}", path.display()))?;
    let check = validate_scenario(&s).with_context(|| format!("checking scenario {}", path.display()))?;
    for b in &check.branches {
        if let Some(v) = &b.first_violation {
            bail!(
                "branch {} cost is negative at x = {}, a = {} ({}); {} negative samples",
                b.id,
                v.x,
                v.a,
                v.cost,
                b.negative_samples
            );
        }
        if !b.controllable {
            eprintln!("warning: branch {} cannot be steered both towards and away from the junction", b.id);
        }
    }
    Ok((bytes, s))
}

fn mode_for(s: &Scenario<f64>, mode: &Option<String>) -> Result<JunctionMode> {
    Ok(match mode {
        Some(m) => m.parse()?,
        None => JunctionMode::default_for(s.kind()),
    })
}

impl Relay {
    fn configs(&self, s: &Scenario<f64>) -> Result<Vec<ThermostatConfig<f64>>> {
        let mut out: Vec<ThermostatConfig<f64>> = self
            .epsilons
            .iter()
            .map(|&e| match s.kind() {
                JunctionKind::Twofold => ThermostatConfig::twofold(e),
                JunctionKind::Threefold => ThermostatConfig::uniform(e),
            })
            .collect();
        if let Some(t) = &self.thresholds {
            if s.kind() != JunctionKind::Threefold || t.len() != 3 {
                bail!("--thresholds takes three values and a threefold scenario");
            }
            out.push(ThermostatConfig::threefold([t[0], t[1], t[2]]));
        }
        if out.is_empty() {
            bail!("give --epsilon or --thresholds");
        }
        if let Some(order) = &self.order {
            out = out.into_iter().map(|c| c.with_order(order)).collect();
        }
        for c in &out {
            c.validate(s)?;
        }
        Ok(out)
    }
}

fn label(c: &ThermostatConfig<f64>) -> String {
    let t: Vec<String> = c.thresholds.iter().map(|e| e.to_string()).collect();
    format!("eps_{}", t.join("_"))
}

fn cmd_solve(a: &SolveArgs) -> Result<()> {
    let (bytes, s) = load(&a.scenario)?;
    let configs = a.relay.configs(&s)?;
    let params = json!({
        "thresholds": configs.iter().map(|c| c.thresholds.clone()).collect::<Vec<_>>(),
        "order": configs[0].order,
        "tol": a.tol,
    });
    let mut rec = Recorder::new("solve", &a.scenario, &bytes, params);
    let fields: Vec<ValueField64> =
        configs.par_iter().map(|c| solve_thermostatic(&s, c, a.tol)).collect::<junctio::Result<_>>()?;
    for (c, v) in configs.iter().zip(&fields) {
        let name = label(c);
        rec.write(&a.out.join(format!("{name}.csv")), &v.to_csv())?;
        rec.write(&a.out.join(format!("{name}.json")), &(v.meta_json() + "\n"))?;
    }
    rec.finish(&a.out)?;
    Ok(())
}

fn cmd_junction(a: &JunctionArgs) -> Result<()> {
    let (bytes, s) = load(&a.scenario)?;
    let mode = mode_for(&s, &a.mode)?;
    let limit = solve_limit(&s, mode, a.tol)?;
    let report = limit.report.to_json();
    match &a.out {
        None => println!("{report}"),
        Some(dir) => {
            let mut rec = Recorder::new("junction", &a.scenario, &bytes, json!({ "mode": mode, "tol": a.tol }));
            rec.write(&dir.join("junction.json"), &(report + "\n"))?;
            rec.write(&dir.join("limit.csv"), &limit.field.to_csv())?;
            rec.write(&dir.join("limit.json"), &(limit.field.meta_json() + "\n"))?;
            rec.write(&dir.join("state_constraint.csv"), &limit.state_constraint.to_csv())?;
            rec.finish(dir)?;
        }
    }
    Ok(())
}

fn cmd_converge(a: &ConvergeArgs) -> Result<()> {
    let (bytes, s) = load(&a.scenario)?;
    let family: ThresholdFamily = match &a.family {
        Some(f) => f.parse()?,
        None => ThresholdFamily::default_for(s.kind()),
    };
    // the non-uniform report carries every threefold ingredient
    let mode = match s.kind() {
        JunctionKind::Twofold => JunctionMode::Twofold,
        JunctionKind::Threefold => JunctionMode::ThreefoldNonuniform,
    };
    let limit = solve_limit(&s, mode, a.tol)?;
    let study = run_convergence(&s, family, &limit.report, &a.epsilons, a.tol)?;
    let params = json!({ "family": family.to_string(), "epsilons": a.epsilons, "tol": a.tol });
    let mut rec = Recorder::new("converge", &a.scenario, &bytes, params);
    rec.write(&a.out.join("study.csv"), &study.to_csv())?;
    rec.write(&a.out.join("study.json"), &study.summary_json())?;
    rec.write(&a.out.join("limit.csv"), &limit.field.to_csv())?;
    rec.finish(&a.out)?;
    Ok(())
}

fn parse_start(text: &str) -> Result<RelayState<f64>> {
    let (m, x) = text.split_once(':').ok_or_else(|| anyhow!("--start expects MODE:X, got `{text}`"))?;
    Ok(RelayState::new(m.trim().parse()?, x.trim().parse()?))
}

fn parse_policy(text: &str) -> Result<Policy<f64>> {
    let (kind, rest) = text.split_once(':').ok_or_else(|| anyhow!("--policy expects KIND:SPEC, got `{text}`"))?;
    match kind {
        "constant" => Ok(Policy::constant(rest.trim().parse()?)),
        "per-mode" => {
            let pairs = rest
                .split(',')
                .map(|p| {
                    let (id, a) = p.split_once('=').ok_or_else(|| anyhow!("expected ID=A, got `{p}`"))?;
                    Ok((id.trim().parse()?, a.trim().parse()?))
                })
                .collect::<Result<Vec<(i32, f64)>>>()?;
            Ok(Policy::per_mode(&pairs))
        }
        other => bail!("unknown policy kind `{other}` (constant, per-mode)"),
    }
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let (bytes, s) = load(&a.scenario)?;
    let configs = a.relay.configs(&s)?;
    if configs.len() != 1 {
        bail!("simulate takes exactly one relay configuration");
    }
    let start = parse_start(&a.start)?;
    let policy = parse_policy(&a.policy)?;
    let record = simulate(&s, &configs[0], start, &policy, a.horizon, a.dt)?;
    match &a.out {
        None => print!("{}", record.to_csv()),
        Some(path) => {
            let params = json!({
                "thresholds": configs[0].thresholds,
                "order": configs[0].order,
                "start": a.start,
                "policy": a.policy,
                "horizon": a.horizon,
                "dt": a.dt,
                "discounted_cost": record.discounted_cost,
            });
            let mut rec = Recorder::new("simulate", &a.scenario, &bytes, params);
            rec.write(path, &record.to_csv())?;
            rec.finish(path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new(".")))?;
        }
    }
    Ok(())
}

/// Returns whether the field passed.
fn cmd_verify(a: &VerifyArgs) -> Result<bool> {
    let (bytes, s) = load(&a.scenario)?;
    let mode = mode_for(&s, &a.mode)?;
    let text = fs::read_to_string(&a.field).with_context(|| format!("reading {}", a.field.display()))?;
    let field = ValueField64::from_csv(&text, FieldMeta::empty(FieldKind::Other))?;
    let fd = a.fd_step.unwrap_or(s.grid_step());
    let tol = residual_tolerance(&s);
    let residuals = if a.subsolution {
        // the cycle-slope test needs the junction ingredients
        let limit = solve_limit(&s, mode, 1e-10)?;
        subsolution_report(&s, mode, &limit.report, &field, fd, tol)?
    } else {
        check_viscosity(&s, &field, fd)?
    };
    let passed =
        if a.subsolution { residuals.is_subsolution(mode, tol) } else { residuals.is_solution(tol) };
    let out = json!({
        "field": a.field.display().to_string(),
        "mode": mode,
        "residual_tolerance": tol,
        "value_tolerance": value_tolerance(&s),
        "check": if a.subsolution { "subsolution" } else { "solution" },
        "passed": passed,
        "interior_sup": residuals.interior_sup(),
        "report": residuals,
    });
    let text = serde_json::to_string_pretty(&out)? + "\n";
    match &a.out {
        None => print!("{text}"),
        Some(dir) => {
            let params = json!({ "field": a.field.display().to_string(), "mode": mode, "fd_step": fd });
            let mut rec = Recorder::new("verify", &a.scenario, &bytes, params);
            rec.write(&dir.join("verify.json"), &text)?;
            rec.finish(dir)?;
        }
    }
    Ok(passed)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("JUNCTIO_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("JUNCTIO_THREADS must be a count, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<junctio::Error>() {
        Some(junctio::Error::NotConverged { .. }) => EXIT_NOT_CONVERGED,
        _ => EXIT_CONFIG,
    }
}

fn run(cli: &Cli) -> Result<bool> {
    configure_threads()?;
    match &cli.command {
        Command::Solve(a) => cmd_solve(a).map(|_| true),
        Command::Junction(a) => cmd_junction(a).map(|_| true),
        Command::Converge(a) => cmd_converge(a).map(|_| true),
        Command::Simulate(a) => cmd_simulate(a).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
