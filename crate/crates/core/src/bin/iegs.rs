//! Command line front end: `simulate`, `compare`, `bench` and `validate`.
//!
//! Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 I/O error.
//! Failures print one JSON object on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use iegs_core::baselines::{FdmConfig, FdmScheme, MocConfig};
use iegs_core::io::{
    bench_table, compare, load_network, load_scenario, read_result, run_bench, run_method, write_result,
    CompareOptions, MethodSpec,
};
use iegs_core::solver::DtConfig;
use iegs_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "iegs",
    version,
    about = "Dynamic energy flow of integrated electricity and gas systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver and write the sampled trajectory.
    Simulate(SimulateArgs),
    /// RMSE of a test result against a reference result.
    Compare(CompareArgs),
    /// Time several method configurations on one scenario.
    Bench(BenchArgs),
    /// Load and validate a network (and optionally a scenario).
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Dt,
    Moc,
    Ieuler,
    Icentral,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long)]
    out: PathBuf,
    /// Target grid spacing in metres.
    #[arg(long)]
    dx: f64,
    /// Series order of the dt method.
    #[arg(long)]
    order: Option<usize>,
    /// Fixed step of ieuler/icentral in seconds.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    sample_dt: Option<f64>,
    #[arg(long)]
    atol_pressure: Option<f64>,
    #[arg(long)]
    atol_flow: Option<f64>,
    #[arg(long)]
    atol_voltage: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    fac: Option<f64>,
    #[arg(long)]
    fac_min: Option<f64>,
    #[arg(long)]
    fac_max: Option<f64>,
    #[arg(long)]
    dt_init: Option<f64>,
    #[arg(long)]
    dt_max: Option<f64>,
    #[arg(long)]
    dt_min: Option<f64>,
    /// Upper bound on the window length in segment transit times.
    #[arg(long)]
    courant_max: Option<f64>,
    /// Record zero wall-clock time so repeated runs give identical files.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Glob over variable names, e.g. 'pipe.*.m.0'.
    #[arg(long)]
    vars: Option<String>,
    /// Interpolate the test samples linearly onto the reference times.
    #[arg(long)]
    resample: bool,
    /// JSON report; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    scenario: PathBuf,
    /// Method specification `method:key=value,...`; repeat for more rows.
    #[arg(long = "method", required = true)]
    methods: Vec<String>,
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    /// Result file to measure each run's RMSE against.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    vars: Option<String>,
    /// Table file; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    scenario: Option<PathBuf>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn simulate_spec(a: &SimulateArgs) -> Result<MethodSpec> {
    let fixed_only = a.dt.is_some();
    let dt_only = a.order.is_some()
        || a.atol_pressure.is_some()
        || a.atol_flow.is_some()
        || a.atol_voltage.is_some()
        || a.rtol.is_some()
        || a.fac.is_some()
        || a.fac_min.is_some()
        || a.fac_max.is_some()
        || a.dt_init.is_some()
        || a.dt_max.is_some()
        || a.dt_min.is_some()
        || a.courant_max.is_some();
    let mut spec = match a.method {
        Method::Dt => {
            if fixed_only {
                return Err(Error::Range("--dt applies to ieuler and icentral only".into()));
            }
            let mut c = DtConfig {
                dx_m: a.dx,
                ..Default::default()
            };
            set(&mut c.order, a.order);
            set(&mut c.courant_max, a.courant_max);
            let ctl = &mut c.control;
            set(&mut ctl.atol_pressure, a.atol_pressure);
            set(&mut ctl.atol_flow, a.atol_flow);
            set(&mut ctl.atol_voltage, a.atol_voltage);
            set(&mut ctl.rtol, a.rtol);
            set(&mut ctl.fac, a.fac);
            set(&mut ctl.fac_min, a.fac_min);
            set(&mut ctl.fac_max, a.fac_max);
            set(&mut ctl.dt_init, a.dt_init);
            set(&mut ctl.dt_max, a.dt_max);
            set(&mut ctl.dt_min, a.dt_min);
            MethodSpec::Dt(c)
        }
        Method::Moc => {
            if fixed_only || dt_only {
                return Err(Error::Range("moc takes only --dx and --sample-dt".into()));
            }
            MethodSpec::Moc(MocConfig {
                dx_m: a.dx,
                ..Default::default()
            })
        }
        Method::Ieuler | Method::Icentral => {
            if dt_only {
                return Err(Error::Range(
                    "window controller flags apply to the dt method only".into(),
                ));
            }
            let dt =
                a.dt.ok_or_else(|| Error::Range("fixed-step methods need --dt SECONDS".into()))?;
            let scheme = if matches!(a.method, Method::Ieuler) {
                FdmScheme::ImplicitEuler
            } else {
                FdmScheme::ImplicitCentral
            };
            MethodSpec::Fdm(FdmConfig::new(scheme, a.dx, dt))
        }
    };
    if let Some(s) = a.sample_dt {
        spec.set_sample_dt(s);
    }
    Ok(spec)
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => {
            let spec = simulate_spec(&a)?;
            let system = load_network(&a.network)?;
            let scenario = load_scenario(&a.scenario, &system)?;
            let mut traj = run_method(&system, &scenario, &spec)?;
            if a.no_timing {
                traj.provenance.wall_clock_s = 0.0;
            }
            write_result(&a.out, &traj)?;
            let p = &traj.provenance;
            println!(
                "{}",
                json!({
                    "method": p.method,
                    "steps": p.steps,
                    "rejected": p.rejected,
                    "samples": traj.times.len(),
                    "wall_clock_s": p.wall_clock_s,
                    "out": a.out.display().to_string(),
                })
            );
            Ok(())
        }
        Command::Compare(a) => {
            let reference = read_result(&a.reference)?;
            let test = read_result(&a.test)?;
            let opts = CompareOptions {
                vars: a.vars,
                resample: a.resample,
            };
            let report = compare(&reference, &test, &opts)?;
            write_or_print(a.out.as_ref(), &report.to_json())
        }
        Command::Bench(a) => {
            let specs = a
                .methods
                .iter()
                .map(|s| Ok((s.clone(), s.parse::<MethodSpec>()?)))
                .collect::<Result<Vec<_>>>()?;
            let system = load_network(&a.network)?;
            let scenario = load_scenario(&a.scenario, &system)?;
            let reference = a.reference.as_deref().map(read_result).transpose()?;
            let opts = CompareOptions {
                vars: a.vars,
                resample: true,
            };
            let rows = run_bench(
                &system,
                &scenario,
                &specs,
                a.repeat,
                reference.as_ref().map(|r| (r, &opts)),
            )?;
            write_or_print(a.out.as_ref(), &bench_table(&rows))
        }
        Command::Validate(a) => {
            let system = load_network(&a.network)?;
            if let Some(s) = &a.scenario {
                load_scenario(s, &system)?;
            }
            println!(
                "{}",
                json!({
                    "valid": true,
                    "gas_nodes": system.node_count(),
                    "pipelines": system.pipe_count(),
                    "buses": system.bus_count(),
                    "couplings": system.couplings.len(),
                })
            );
            Ok(())
        }
    }
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Structural(_) => "structural",
        Error::Validation(_) => "validation",
        Error::Domain(_) => "domain",
        Error::Singular { .. } => "singular",
        Error::Divergence { .. } => "divergence",
        Error::StepTooSmall { .. } => "step_too_small",
        Error::Range(_) => "range",
        Error::Parse { .. } => "parse",
        Error::Io { .. } => "io",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut body = json!({
                "error": kind(&e),
                "message": e.to_string(),
                "exit_code": e.exit_code(),
            });
            if let Error::Validation(d) = &e {
                body["diagnostics"] = json!(d);
            }
            eprintln!("{body}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
