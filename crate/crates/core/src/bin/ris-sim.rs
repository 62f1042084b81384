use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use active_ris::circuit::CircuitParams;
use active_ris::harness::{
    amplitude_curves, export_csv, fig_preset, run_experiment, solve_trial, summarize, write_csv,
    write_curves, ExperimentSpec, Preset, ResultRow, SavedDesign, Scale, Scheme,
};
use active_ris::reflection::{fit_amplitude_model, ElementClass};
use active_ris::Error;

#[derive(Parser)]
#[command(name = "ris-sim", version, about = "Tunnel-diode active RIS simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Write rows here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Record wall-clock time per row.
    #[arg(long)]
    timing: bool,
    /// Also write per-point mean and standard error here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the amplitude model and print its parameters as JSON.
    FitModel {
        /// Circuit constants are read from this experiment config.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Phase grid size.
        #[arg(long, default_value_t = 3600)]
        grid: usize,
        /// Write exact and fitted bounds per phase to this CSV.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Run a Monte Carlo experiment from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Run one of the figure experiments.
    Preset {
        /// fig2, fig3, fig4, fig5, fig6 or fig7.
        #[arg(long)]
        name: String,
        #[arg(long, default_value = "desk")]
        scale: String,
        /// Print the preset as a config file and exit.
        #[arg(long)]
        print_config: bool,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Solve one trial and save the design as JSON.
    Solve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "AO")]
        scheme: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        /// Index into the sweep values.
        #[arg(long, default_value_t = 0)]
        point: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a saved design against the power and hardware constraints.
    Validate {
        #[arg(long)]
        design: PathBuf,
    },
}

enum Failure {
    Config(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Solver(e.to_string())
        }
    }
}

fn load_spec(path: Option<&Path>) -> Result<ExperimentSpec, Failure> {
    Ok(match path {
        Some(p) => ExperimentSpec::load(p)?,
        None => ExperimentSpec::default(),
    })
}

fn execute(mut spec: ExperimentSpec, args: &RunArgs) -> Result<(), Failure> {
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(t) = args.threads {
        spec.threads = t;
    }
    spec.timing |= args.timing;
    spec.validate()?;
    log::info!(
        "{} sweep of {} points, {} trials, schemes {:?}",
        spec.sweep.kind(),
        spec.sweep.len(),
        spec.trials,
        spec.schemes.iter().map(|s| s.name()).collect::<Vec<_>>()
    );
    let rows = run_experiment(&spec)?;
    match &args.out {
        Some(p) => export_csv(&rows, p)?,
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    report(&rows, args.summary.as_deref())
}

fn report(rows: &[ResultRow], summary_path: Option<&Path>) -> Result<(), Failure> {
    let summary = summarize(rows)?;
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{:<28} {:>10} {:>10} {:>8} {:>6}", "scheme", "sweep", "mean", "stderr", "errors");
    for s in &summary {
        let _ = writeln!(
            err,
            "{:<28} {:>10.4} {:>10.4} {:>8.4} {:>6}",
            s.scheme, s.sweep_value, s.mean_rate, s.stderr_rate, s.errors
        );
    }
    if let Some(p) = summary_path {
        let f = std::fs::File::create(p).map_err(Error::from)?;
        active_ris::harness::write_summary_csv(&summary, f)?;
    }
    let failed = rows.iter().filter(|r| r.is_error()).count();
    if failed > 0 {
        return Err(Failure::Solver(format!("{failed} of {} rows failed", rows.len())));
    }
    Ok(())
}

fn fit_model(config: Option<&Path>, grid: usize, curves: Option<&Path>) -> Result<(), Failure> {
    let circuit: CircuitParams = load_spec(config)?.circuit;
    let active = fit_amplitude_model(&circuit, ElementClass::Active, grid)?;
    let passive = fit_amplitude_model(&circuit, ElementClass::Passive, grid)?;
    let json = serde_json::json!({ "active": active, "passive": passive });
    println!("{}", serde_json::to_string_pretty(&json).map_err(Error::from)?);
    if let Some(p) = curves {
        let (_, pts) = amplitude_curves(&circuit, grid)?;
        write_curves(&pts, std::fs::File::create(p).map_err(Error::from)?)?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::FitModel { config, grid, curves } => fit_model(config.as_deref(), grid, curves.as_deref()),
        Command::Run { config, args } => execute(ExperimentSpec::load(&config)?, &args),
        Command::Preset {
            name,
            scale,
            print_config,
            args,
        } => {
            let scale: Scale = scale.parse()?;
            match fig_preset(&name, scale)? {
                Preset::AmplitudeCurves { circuit, grid } => {
                    let (fit, pts) = amplitude_curves(&circuit, grid)?;
                    eprintln!("{}", serde_json::to_string(&fit).map_err(Error::from)?);
                    match &args.out {
                        Some(p) => write_curves(&pts, std::fs::File::create(p).map_err(Error::from)?)?,
                        None => write_curves(&pts, std::io::stdout().lock())?,
                    }
                    Ok(())
                }
                Preset::Experiment(spec) if print_config => {
                    print!("{}", spec.to_toml());
                    Ok(())
                }
                Preset::Experiment(spec) => execute(*spec, &args),
            }
        }
        Command::Solve {
            config,
            scheme,
            seed,
            trial,
            point,
            out,
        } => {
            let mut spec = load_spec(config.as_deref())?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let scheme: Scheme = scheme.parse()?;
            let t = solve_trial(&spec, point, trial, 0, scheme)?;
            let saved = SavedDesign::from_trial(scheme.name(), &t);
            saved.save(&out)?;
            eprintln!("{}: {:.4} bps/Hz after {} iterations", scheme, t.rate, t.iterations);
            Ok(())
        }
        Command::Validate { design } => {
            let report = SavedDesign::load(&design)?.validate()?;
            println!("transmit power {:.6e} W, surface power {:.6} W", report.tx_power, report.ris_power);
            if report.ok() {
                println!("ok");
                Ok(())
            } else {
                for v in &report.violations {
                    println!("violation: {v}");
                }
                Err(Failure::Solver(format!("{} violations", report.violations.len())))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
