//! Command-line front end: configuration, checkpoints, output files and the
//! subcommand dispatcher.
//!
//! Exit codes: 0 on success or a PASS verdict, 1 on a FAIL verdict or a
//! runtime failure, 2 on usage or configuration errors.

pub mod checkpoint;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::diagnostics::{
    energy_identity_residual, lyapunov_identity_residual, sliding_windows, DiagnosticsCollector, DiagnosticsOptions,
    DiagnosticsRecord, ResidualReport, WindowKind,
};
use crate::error::{Error, Result};
use crate::experiments::{initial_data, run_experiment, Verdict};
use crate::fractional::{calibrate_constant, FractionalExponent, IntegralQuadratureSpec};
use crate::integrator::{run, DiagnosticSink, Progress, SimState};
use crate::linear::{classify_regime, spectrum_portrait, wellposedness_range};

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use config::{parse_config, RunConfig};

use config::OutputFormat;

#[derive(Parser, Debug)]
#[command(
    name = "fdwave",
    version,
    about = "Spectral simulator for fractionally damped wave equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one trajectory and write diagnostics and a final checkpoint.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.directory`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Per-mode eigenvalue portrait and regime classification.
    AnalyzeLinear {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 1e6)]
        mu_max: f64,
        #[arg(long, default_value_t = 400)]
        count: usize,
        #[arg(long, default_value = ".")]
        output: PathBuf,
    },
    /// Energy (and, for theta = 1/2, Lyapunov) identity residuals of a run.
    VerifyIdentities {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Exit 1 when a residual per unit time exceeds this value.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Calibrates the constant of the singular-integral form.
    CalibrateFractional {
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 1e-3)]
        h_min: f64,
        #[arg(long, default_value_t = 32.0)]
        h_max: f64,
        #[arg(long, default_value_t = 64)]
        shells: usize,
        #[arg(long, default_value_t = 26)]
        directions: usize,
        #[arg(long, default_value = ".")]
        output: PathBuf,
    },
    /// Runs the `[experiment]` section of a configuration.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Prints a checkpoint summary as JSON.
    CheckpointInfo { path: PathBuf },
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::InvalidGrid(_) => 2,
        _ => 1,
    }
}

fn load_config(path: &Path, output: Option<PathBuf>) -> Result<RunConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::config("<file>", format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(dir) = output {
        cfg.document.output.directory = dir;
    }
    Ok(cfg)
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Simulate { config, output } => simulate(&load_config(&config, output)?),
        Command::AnalyzeLinear {
            gamma,
            theta,
            mu_max,
            count,
            output,
        } => analyze_linear(gamma, theta, mu_max, count, &output),
        Command::VerifyIdentities {
            config,
            output,
            tolerance,
        } => verify_identities(&load_config(&config, output)?, tolerance),
        Command::CalibrateFractional {
            s,
            h_min,
            h_max,
            shells,
            directions,
            output,
        } => {
            let q = IntegralQuadratureSpec {
                h_min,
                h_max,
                shells,
                directions,
            };
            calibrate(s, &q, &output)
        }
        Command::Experiment { config, output } => experiment(&load_config(&config, output)?),
        Command::CheckpointInfo { path } => checkpoint_info(&path),
    }
}

fn initial_state(cfg: &RunConfig) -> Result<SimState> {
    let init = &cfg.document.initial;
    match &init.checkpoint {
        Some(path) => {
            let (state, _) = read_checkpoint(path)?;
            if !state.grid().same_as(&cfg.grid) {
                return Err(Error::config(
                    "initial.checkpoint",
                    "checkpoint grid differs from [grid]",
                ));
            }
            Ok(state)
        }
        None => initial_data(&cfg.grid, init.seed, init.amplitude, cfg.params.nonlinearity.growth_q()),
    }
}

/// Runs the configured trajectory with full diagnostics. On blow-up the last
/// finite state is checkpointed before the error is returned.
fn trajectory(cfg: &RunConfig) -> Result<(SimState, Vec<DiagnosticsRecord>)> {
    let start = initial_state(cfg)?;
    let mut col = DiagnosticsCollector::new(DiagnosticsOptions::full(&cfg.params));
    let mut progress = Progress {
        label: "simulate".into(),
    };
    let mut sinks: Vec<&mut dyn DiagnosticSink> = vec![&mut col, &mut progress];
    match run(&start, &cfg.params, &cfg.document.integrator, &mut sinks) {
        Ok(end) => Ok((end, col.records)),
        Err(Error::BlowUp(b)) => {
            if cfg.document.output.wants(OutputFormat::Checkpoint) {
                let path = cfg.output_dir().join("blowup.chk");
                std::fs::create_dir_all(cfg.output_dir())?;
                write_checkpoint(&b.last_finite, &cfg.params, &path)?;
            }
            Err(Error::BlowUp(b))
        }
        Err(e) => Err(e),
    }
}

fn simulate(cfg: &RunConfig) -> Result<i32> {
    let (end, records) = trajectory(cfg)?;
    let dir = cfg.output_dir();
    std::fs::create_dir_all(dir)?;
    let out = &cfg.document.output;
    if out.wants(OutputFormat::Csv) {
        output::write_diagnostics_csv(output::create(&dir.join("diagnostics.csv"))?, &records)?;
        let mut windows = Vec::new();
        for kind in [WindowKind::L2H32, WindowKind::L2Damping, WindowKind::L4L12] {
            // Windows need at least eight records per unit time.
            if let Ok(w) = sliding_windows(&records, kind) {
                windows.extend(w);
            }
        }
        output::write_windows_csv(output::create(&dir.join("windows.csv"))?, &windows)?;
    }
    if out.wants(OutputFormat::Checkpoint) {
        write_checkpoint(&end, &cfg.params, &dir.join("final.chk"))?;
    }
    if out.wants(OutputFormat::Json) {
        output::write_json(&dir.join("config.json"), &cfg.document)?;
    }
    Ok(0)
}

fn analyze_linear(gamma: f64, theta: f64, mu_max: f64, count: usize, dir: &Path) -> Result<i32> {
    let portrait = spectrum_portrait(gamma, theta, mu_max, count).map_err(usage)?;
    let regime = classify_regime(gamma, theta, mu_max).map_err(usage)?;
    let range = wellposedness_range(theta)?;
    std::fs::create_dir_all(dir)?;
    output::write_portrait_csv(output::create(&dir.join("portrait.csv"))?, &portrait)?;
    #[derive(Serialize)]
    struct Report<'a> {
        regime: &'a crate::linear::RegimeReport,
        wellposedness: &'a crate::linear::WellposednessRange,
        sup_re: f64,
        re_plus_monotone: bool,
        discriminant_crossings: &'a [f64],
    }
    output::write_json(
        &dir.join("regime.json"),
        &Report {
            regime: &regime,
            wellposedness: &range,
            sup_re: portrait.sup_re,
            re_plus_monotone: portrait.re_plus_monotone,
            discriminant_crossings: &portrait.discriminant_crossings,
        },
    )?;
    Ok(0)
}

/// Parameter errors on command-line values are usage errors.
fn usage(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::config("<arguments>", m),
        other => other,
    }
}

#[derive(Serialize)]
struct IdentityReport {
    energy: ResidualReport,
    lyapunov: Option<ResidualReport>,
    tolerance: Option<f64>,
    pass: bool,
}

fn verify_identities(cfg: &RunConfig, tolerance: Option<f64>) -> Result<i32> {
    let (_, records) = trajectory(cfg)?;
    let energy = energy_identity_residual(&records)?;
    let lyapunov = if cfg.params.theta == 0.5 {
        Some(lyapunov_identity_residual(&records, &cfg.params)?)
    } else {
        None
    };
    let pass = tolerance
        .is_none_or(|tol| energy.per_unit_time <= tol && lyapunov.as_ref().is_none_or(|l| l.per_unit_time <= tol));
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "energy residual per unit time: {:.3e}", energy.per_unit_time)?;
    if let Some(l) = &lyapunov {
        writeln!(stdout, "lyapunov residual per unit time: {:.3e}", l.per_unit_time)?;
    }
    let report = IdentityReport {
        energy,
        lyapunov,
        tolerance,
        pass,
    };
    output::write_json(&cfg.output_dir().join("identities.json"), &report)?;
    Ok(if pass { 0 } else { 1 })
}

fn calibrate(s: f64, q: &IntegralQuadratureSpec, dir: &Path) -> Result<i32> {
    let exp = FractionalExponent::new(s).map_err(usage)?;
    q.validate().map_err(usage)?;
    let constant = calibrate_constant(exp, q)?;
    #[derive(Serialize)]
    struct Calibration<'a> {
        s: f64,
        constant: f64,
        quadrature: &'a IntegralQuadratureSpec,
    }
    println!("{constant}");
    output::write_json(
        &dir.join("calibration.json"),
        &Calibration {
            s,
            constant,
            quadrature: q,
        },
    )?;
    Ok(0)
}

fn experiment(cfg: &RunConfig) -> Result<i32> {
    let (spec, extras) = cfg
        .experiment()
        .ok_or_else(|| Error::config("experiment", "section missing"))?;
    eprintln!("experiment {:?}: {} seed(s)", spec.kind, spec.seeds.len());
    let report = run_experiment(&spec, &extras)?;
    let dir = cfg.output_dir();
    std::fs::create_dir_all(dir)?;
    let out = &cfg.document.output;
    if out.wants(OutputFormat::Json) {
        output::write_json(&dir.join("report.json"), &report)?;
    }
    if out.wants(OutputFormat::Csv) {
        for (name, records) in report.trajectories() {
            output::write_diagnostics_csv(output::create(&dir.join(format!("diagnostics_{name}.csv")))?, records)?;
        }
        for (name, windows) in report.windows() {
            output::write_windows_csv(output::create(&dir.join(format!("windows_{name}.csv")))?, &windows)?;
        }
    }
    let verdict = report.verdict();
    eprintln!("verdict: {verdict:?}");
    Ok(if verdict == Verdict::Fail { 1 } else { 0 })
}

fn checkpoint_info(path: &Path) -> Result<i32> {
    let bytes = std::fs::read(path)?;
    let header = checkpoint::decode_header(&bytes)?;
    let (state, params) = checkpoint::decode_checkpoint(&bytes)?;
    #[derive(Serialize)]
    struct Info {
        header: checkpoint::CheckpointHeader,
        axis_length: f64,
        nonlinearity: crate::nonlinearity::NonlinearitySpec,
        u_l2: f64,
        v_l2: f64,
        forcing_l2: f64,
    }
    let info = Info {
        header,
        axis_length: state.grid().axis_length(),
        nonlinearity: params.nonlinearity.clone(),
        u_l2: state.u.l2_norm(),
        v_l2: state.v.l2_norm(),
        forcing_l2: params.forcing.l2_norm(),
    };
    println!("{}", serde_json::to_string_pretty(&info)?);
    Ok(0)
}
