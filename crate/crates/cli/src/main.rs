use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use coagfrag::{builtin_example, convergence_study, run_scenario, NormSpec, ScenarioConfig};
use log::{info, LevelFilter};

mod overrides;

/// Simulate and analyse discrete coagulation-fragmentation systems.
#[derive(Debug, Parser)]
#[command(name = "coagfrag", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Only report errors.
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// More log output (repeat for debug).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Args)]
struct Tweaks {
    /// Set a config field, e.g. `laws.a=2` or `run.t_end=0.5` (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Number of output times, including both ends.
    #[arg(long)]
    grid_points: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a scenario and write trajectory.csv, moments.csv, report.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tweaks: Tweaks,
    },
    /// Print the well-posedness condition report as JSON.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Moment order to check (defaults to the config's norm order).
        #[arg(long)]
        p: Option<f64>,
        #[command(flatten)]
        tweaks: Tweaks,
    },
    /// Truncation-convergence study; writes convergence.csv.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated, strictly increasing truncation sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        /// Reference size (default: twice the largest study size).
        #[arg(long = "ref")]
        reference: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        /// Interpolation weight exponent of the error norm.
        #[arg(long)]
        weight: Option<f64>,
        #[command(flatten)]
        tweaks: Tweaks,
    },
    /// Run one of the six built-in examples.
    Example {
        /// Example id, 1 to 6.
        id: u32,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tweaks: Tweaks,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] coagfrag::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(coagfrag::Error::Integration(_)) => 2,
            _ => 1,
        }
    }
}

fn prepare(cfg: ScenarioConfig, tweaks: &Tweaks) -> Result<ScenarioConfig, CliError> {
    let mut cfg = overrides::apply(&cfg, &tweaks.overrides)?;
    if let Some(points) = tweaks.grid_points {
        cfg.run.output_grid_points = points;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn load(path: &Path, tweaks: &Tweaks) -> Result<ScenarioConfig, CliError> {
    prepare(ScenarioConfig::load(path)?, tweaks)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("COAGFRAG_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().map_err(|_| {
        CliError::Usage(format!(
            "COAGFRAG_THREADS must be a non-negative integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Simulate {
            config,
            out,
            tweaks,
        } => {
            let cfg = load(&config, &tweaks)?;
            run_scenario(&cfg, &out)?;
            info!("wrote {}", out.display());
        }
        Command::Analyze { config, p, tweaks } => {
            let mut cfg = load(&config, &tweaks)?;
            if let Some(p) = p {
                cfg.norm.p = p;
            }
            let report = coagfrag::check_conditions(
                &cfg.kernels.fragmentation,
                &cfg.kernels.coagulation,
                &cfg.model.laws,
                cfg.norm.p,
                cfg.model.n.max(100),
            )?;
            let text = serde_json::to_string_pretty(&report).map_err(coagfrag::Error::from)?;
            println!("{text}");
        }
        Command::Converge {
            config,
            out,
            sizes,
            reference,
            p,
            weight,
            tweaks,
        } => {
            let cfg = load(&config, &tweaks)?;
            let largest = sizes.iter().copied().max().unwrap_or(0);
            let reference = reference.unwrap_or(2 * largest);
            let norm = NormSpec::new(
                p.unwrap_or(cfg.norm.p),
                weight.unwrap_or(cfg.norm.weight_exp),
            )?;
            let result = convergence_study(&cfg, &sizes, reference, &norm)?;
            fs::create_dir_all(&out).map_err(|e| coagfrag::Error::Io {
                path: out.clone(),
                source: e,
            })?;
            result.write_csv(&out.join("convergence.csv"))?;
            for (n, e) in result.sizes.iter().zip(&result.errors) {
                info!("N = {n}: error {e:.6e}");
            }
        }
        Command::Example { id, out, tweaks } => {
            let cfg = prepare(builtin_example(id)?, &tweaks)?;
            run_scenario(&cfg, &out)?;
            info!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => LevelFilter::Error,
        (false, 0) => LevelFilter::Warn,
        (false, 1) => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
