use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use setest::config::{load_benchmark, ConfigFile, ConfigFileError};
use setest::oracle::consistent_clouds;
use setest::serial::fmt_f64;
use setest::{output, run};
use setest_core::observers::ObserverMethod;
use setest_core::sysmodel::simulate_from_box;

const EXIT_ERROR: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_ALL_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "setest", version, about = "Set-based state estimation benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (method, seed) cell of a config and write the tables.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        cutoff: Option<usize>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Print the observer tags with their category and representation.
    ListMethods,
    /// Dump the brute-force consistent sets of a 2D benchmark as CSV.
    Oracle {
        benchmark: String,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = 0.01)]
        grid: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigFileError),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Other(_) => EXIT_ERROR,
        }
    }
}

fn other(e: impl std::fmt::Display) -> CliError {
    CliError::Other(e.to_string())
}

fn read_config(path: &PathBuf) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| other(format!("{}: {e}", path.display())))?;
    Ok(ConfigFile::parse(&text)?)
}

fn execute(cmd: Command) -> Result<u8, CliError> {
    match cmd {
        Command::Run { config, out, seeds, cutoff, jobs } => {
            let mut file = read_config(&config)?;
            if out.is_some() {
                file.out = out;
            }
            if seeds.is_some() {
                file.seeds = seeds;
            }
            if cutoff.is_some() {
                file.cutoff = cutoff;
            }
            let cfg = file.resolve()?;
            log::info!("{}: {} methods x {} seeds, {} steps", cfg.benchmark, cfg.observers.len(), cfg.seeds.len(), cfg.steps);
            let cmp = run::run_comparison(cfg, jobs).map_err(other)?;
            output::write_outputs(&cmp).map_err(other)?;
            let table = cmp.table(cmp.config.cutoff.unwrap_or(cmp.config.steps), false);
            println!("{:<10} {:>10} {:>10} {:>10}", "method", "time_ms", "v_hat", "w_hat");
            for r in &table {
                println!("{:<10} {:>10} {:>10} {:>10}", r.method.tag(), short(r.time_ms), short(r.v_hat), short(r.w_hat));
            }
            println!("wrote {}", cmp.config.out.display());
            Ok(if cmp.all_diverged() { EXIT_ALL_DIVERGED } else { 0 })
        }
        Command::ListMethods => {
            let mut out = std::io::stdout().lock();
            for m in ObserverMethod::ALL {
                // A closed pipe (e.g. `| head`) just ends the listing.
                if writeln!(out, "{:<10} {:<13} {}", m.tag(), m.category().as_str(), m.representation()).is_err() {
                    break;
                }
            }
            Ok(0)
        }
        Command::Oracle { benchmark, steps, grid, seed, out } => {
            let spec = load_benchmark(&benchmark)?;
            let traj = simulate_from_box(&spec.system, &spec.r0, &spec.inputs(steps), steps, seed).map_err(other)?;
            let clouds = consistent_clouds(&spec.system, &spec.r0, &traj, steps, grid)
                .map_err(|e| CliError::Config(ConfigFileError::Invalid(e.to_string())))?;
            let sink: Box<dyn std::io::Write> = match &out {
                Some(p) => Box::new(std::fs::File::create(p).map_err(|e| other(format!("{}: {e}", p.display())))?),
                None => Box::new(std::io::stdout().lock()),
            };
            let mut w = csv::Writer::from_writer(sink);
            let n = spec.system.n_states();
            let mut header = vec!["step".to_string()];
            header.extend((1..=n).map(|i| format!("x{i}")));
            w.write_record(&header).map_err(other)?;
            for (k, pts) in clouds.steps.iter().enumerate() {
                for p in pts {
                    let mut row = vec![k.to_string()];
                    row.extend(p.iter().map(|x| fmt_f64(*x)));
                    w.write_record(&row).map_err(other)?;
                }
            }
            w.flush().map_err(other)?;
            if let Some(k) = clouds.empty_at {
                log::warn!("no consistent grid point at step {k}");
            }
            Ok(0)
        }
        Command::Validate { config } => {
            let cfg = read_config(&config)?.resolve()?;
            println!("ok: {} with {} methods, {} seeds, {} steps", cfg.benchmark, cfg.observers.len(), cfg.seeds.len(), cfg.steps);
            Ok(0)
        }
    }
}

fn short(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.4}")
    } else {
        fmt_f64(x)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GE_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
