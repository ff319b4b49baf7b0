//! Command-line front end: trajectory runs, convergence studies, decay-rate
//! refits, and parameter sweeps, all driven by flat key=value configuration
//! files and emitting plain CSV for external plotting.

mod config;
mod csv_out;

use std::io;
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use porobeam_core::energy::{
    dissipation_check, fit_decay_rate, lemma_rate_diagnostics, lyapunov_values, DiagError,
};
use porobeam_core::fem::assemble_matrices;
use porobeam_core::model::lyapunov_constants;
use porobeam_core::timestepper::{run, RunConfig, StepError, Trajectory};
use porobeam_core::verification::{convergence_study, ManufacturedSolution, VerifyError};

use config::ConfigError;
use csv_out::FieldKind;

const EXIT_CODES_HELP: &str = "Exit codes:
  0  success
  2  command-line usage error
  3  configuration or input parse error
  4  invalid physical parameters
  5  mesh or assembly error
  6  linear-solver or stepping error
  7  diagnostics error (energy history, decay fit)
  8  verification error
  9  file I/O error";

#[derive(Parser)]
#[command(
    name = "porobeam",
    version,
    about = "Simulator and stability diagnostics for a 1D porous-elastic beam with microtemperature",
    after_help = EXIT_CODES_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct IoArgs {
    /// Output directory (positional).
    #[arg(value_name = "OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Output directory (flag form; overrides the positional).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

impl IoArgs {
    fn resolve(&self) -> Result<PathBuf, CliError> {
        self.out
            .clone()
            .or_else(|| self.out_dir.clone())
            .ok_or_else(|| CliError::Usage("an output directory is required (positional or --out)".into()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured trajectory; writes energy/field CSVs and a report.
    Run {
        /// Configuration file (key = value lines).
        config: PathBuf,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Convergence-order study against the built-in decaying-sine solution.
    Converge {
        /// Base configuration; optional `levels = <n>` key (default 5).
        config: PathBuf,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Re-fit the decay rate of a previously written energy time series.
    DecayFit {
        /// An energy.csv produced by `run` (or any CSV with t and E_total).
        csv: PathBuf,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Run a one-parameter grid of trajectories concurrently.
    Sweep {
        /// Base configuration plus `sweep_key` and `sweep_values`.
        config: PathBuf,
        #[command(flatten)]
        io: IoArgs,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Diag(#[from] DiagError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("{0}")]
    Data(String),
}

fn exit_code(err: &CliError) -> i32 {
    fn step_code(err: &StepError) -> i32 {
        match err {
            StepError::Fem(_) => 5,
            StepError::InvalidConfig(_) => 3,
            StepError::Diagnostics(_) => 7,
            _ => 6,
        }
    }
    match err {
        CliError::Usage(_) => 2,
        CliError::Config(ConfigError::Params(_)) => 4,
        CliError::Config(_) | CliError::Data(_) => 3,
        CliError::Step(e) => step_code(e),
        CliError::Diag(_) => 7,
        CliError::Verify(VerifyError::Run(e)) => step_code(e),
        CliError::Verify(_) => 8,
        CliError::Io { .. } => 9,
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = dispatch(cli) {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, io } => cmd_run(&config, &io),
        Command::Converge { config, io } => cmd_converge(&config, &io),
        Command::DecayFit { csv, io } => cmd_decay_fit(&csv, &io),
        Command::Sweep { config, io } => cmd_sweep(&config, &io),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_run_outputs(cfg: &RunConfig, traj: &Trajectory, out: &Path) -> Result<PathBuf, CliError> {
    let energy_path = out.join("energy.csv");
    csv_out::write_timeseries_csv(traj, &energy_path).map_err(io_err(&energy_path))?;
    for field in [FieldKind::U, FieldKind::Phi, FieldKind::W] {
        let path = out.join(format!("{}.csv", field.name()));
        csv_out::write_field_csv(traj, field, &path).map_err(io_err(&path))?;
    }

    let consts = lyapunov_constants(&cfg.params);
    let fit = fit_decay_rate(&traj.energy_series(), 0.5).ok();
    let dissipation = dissipation_check(traj, &cfg.params);
    let mats = assemble_matrices(&traj.mesh);
    let mut values = Vec::with_capacity(traj.frames.len());
    for frame in &traj.frames {
        values.push(lyapunov_values(&frame.state, &cfg.params, &mats, &consts)?);
    }
    let sandwich = csv_out::sandwich_extremes(&values);
    let lemma = lemma_rate_diagnostics(traj, &cfg.params, &mats, &consts)?;

    let report = csv_out::render_report(&csv_out::RunSummary {
        cfg,
        traj,
        consts: &consts,
        fit: fit.as_ref(),
        dissipation: &dissipation,
        sandwich,
        lemma: lemma.as_ref(),
    });
    let report_path = out.join("report.txt");
    csv_out::write_atomic(&report_path, &report).map_err(io_err(&report_path))?;
    Ok(energy_path)
}

fn cmd_run(config_path: &Path, io: &IoArgs) -> Result<(), CliError> {
    let out = io.resolve()?;
    let cfg = config::parse_config(&read_file(config_path)?)?;
    ensure_dir(&out)?;
    let traj = run(&cfg)?;
    write_run_outputs(&cfg, &traj, &out)?;
    if !io.quiet {
        let last = traj.records.last().expect("a run has at least one step");
        println!(
            "run: {} solves to t = {:.6}; E = {:.6e} -> {:.6e}",
            traj.records.len(),
            last.t,
            traj.records[0].energy.total,
            last.energy.total
        );
        println!(
            "wrote {}/{{energy,u,phi,w}}.csv and {}/report.txt",
            out.display(),
            out.display()
        );
    }
    Ok(())
}

fn cmd_converge(config_path: &Path, io: &IoArgs) -> Result<(), CliError> {
    let out = io.resolve()?;
    let (base, levels) = config::parse_converge_config(&read_file(config_path)?)?;
    ensure_dir(&out)?;
    let ms = ManufacturedSolution::decaying_sine(base.params.l);
    let report = convergence_study(&base, &ms, levels)?;
    let rates_path = out.join("rates.csv");
    csv_out::write_rates_csv(&report, &rates_path).map_err(io_err(&rates_path))?;
    if !io.quiet {
        println!(
            "converge: {} levels per sweep; fitted h-orders: e_ux = {:.2}, e_phix = {:.2}; \
             dt-orders: e_uvel = {:.2}, e_w = {:.2}",
            levels,
            report.spatial.orders.e_ux,
            report.spatial.orders.e_phix,
            report.temporal.orders.e_uvel,
            report.temporal.orders.e_w
        );
        println!("wrote {}", rates_path.display());
    }
    Ok(())
}

fn cmd_decay_fit(csv_path: &Path, io: &IoArgs) -> Result<(), CliError> {
    let out = io.resolve()?;
    let text = read_file(csv_path)?;
    let series = csv_out::read_energy_series(&text).map_err(CliError::Data)?;
    let fit = fit_decay_rate(&series, 0.5)?;
    ensure_dir(&out)?;
    let report = csv_out::render_decay_fit(&fit, csv_path, series.len());
    let path = out.join("decay_fit.txt");
    csv_out::write_atomic(&path, &report).map_err(io_err(&path))?;
    if !io.quiet {
        println!(
            "decay-fit: omega_hat = {:.6e}, r^2 = {:.6} over {} samples",
            fit.omega_hat, fit.r_squared, fit.window_len
        );
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_sweep(config_path: &Path, io: &IoArgs) -> Result<(), CliError> {
    let out = io.resolve()?;
    let (base, spec) = config::parse_sweep_config(&read_file(config_path)?)?;
    ensure_dir(&out)?;

    // Fail on any invalid grid point before launching workers.
    let cases: Vec<(String, f64, RunConfig)> = spec
        .values
        .iter()
        .map(|(label, value)| {
            config::apply_sweep_value(&base, &spec.key, *value)
                .map(|cfg| (label.clone(), *value, cfg))
        })
        .collect::<Result<_, _>>()?;

    struct SweepRow {
        label: String,
        value: f64,
        e_first: f64,
        e_final: f64,
        fit: Option<porobeam_core::energy::DecayFit>,
    }

    let key = &spec.key;
    let out_ref = &out;
    let rows: Vec<SweepRow> = thread::scope(|scope| {
        let handles: Vec<_> = cases
            .iter()
            .map(|(label, value, cfg)| {
                scope.spawn(move || -> Result<SweepRow, CliError> {
                    let traj = run(cfg)?;
                    let dir = out_ref.join(format!("sweep_{key}_{label}"));
                    ensure_dir(&dir)?;
                    write_run_outputs(cfg, &traj, &dir)?;
                    let fit = fit_decay_rate(&traj.energy_series(), 0.5).ok();
                    Ok(SweepRow {
                        label: label.clone(),
                        value: *value,
                        e_first: traj.records.first().map_or(0.0, |r| r.energy.total),
                        e_final: traj.records.last().map_or(0.0, |r| r.energy.total),
                        fit,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect::<Result<_, _>>()
    })?;

    let mut summary = String::from("sweep_key,value,E_first,E_final,omega_hat,r_squared\n");
    for row in &rows {
        let (omega, r2) = match &row.fit {
            Some(f) => (format!("{:.16e}", f.omega_hat), format!("{:.16e}", f.r_squared)),
            None => (String::new(), String::new()),
        };
        summary.push_str(&format!(
            "{key},{},{:.16e},{:.16e},{omega},{r2}\n",
            row.label, row.e_first, row.e_final
        ));
    }
    let summary_path = out.join("sweep_summary.csv");
    csv_out::write_atomic(&summary_path, &summary).map_err(io_err(&summary_path))?;
    if !io.quiet {
        for row in &rows {
            match &row.fit {
                Some(f) => println!(
                    "sweep {key} = {}: E {:.3e} -> {:.3e}, omega_hat = {:.4e}",
                    row.value, row.e_first, row.e_final, f.omega_hat
                ),
                None => println!(
                    "sweep {key} = {}: E {:.3e} -> {:.3e}",
                    row.value, row.e_first, row.e_final
                ),
            }
        }
        println!("wrote {}", summary_path.display());
    }
    Ok(())
}
