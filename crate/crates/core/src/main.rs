use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bathywave::config::RunConfig;
use bathywave::experiment::{
    dispersion_table, run_experiment, sweep_epsilon, write_dispersion_csv, RunStatus,
};
use bathywave::params::{coefficients_from_bbm, validate_coefficients, BbmParams};
use bathywave::verify::run_suite;
use bathywave::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_NON_FINITE: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "bathywave", version, about = "Boussinesq-type waves over strong bathymetry")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write its energy series
    Run,
    /// Run one configuration across several epsilons
    Sweep {
        /// Comma-separated epsilons; falls back to `epsilons` in the config
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
    },
    /// Run the numerical checks and write a JSON report
    Verify {
        /// Smaller families and fewer trials
        #[arg(long)]
        quick: bool,
    },
    /// Tabulate flat-bottom eigenvalues for the configured coefficients
    Dispersion {
        #[arg(long, default_value_t = 8)]
        xi_max: u32,
        /// Comma-separated epsilons; defaults to the configured one
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        /// Also measure frequencies by integrating each mode
        #[arg(long)]
        measure: bool,
        #[arg(long, default_value_t = 128)]
        n: usize,
    },
    /// Report which regimes a parameter set satisfies
    Regimes {
        #[arg(long, allow_hyphen_values = true)]
        lambda1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lambda2: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
}

fn load(common: &Common) -> Result<RunConfig, Error> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| Error::ConfigInvalid("--config is required".into()))?;
    let mut cfg = RunConfig::load(path).map_err(|e| match e {
        Error::Io(io) => Error::ConfigInvalid(format!("{}: {io}", path.display())),
        other => other,
    })?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: Option<&RunConfig>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.out.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::NonFinite { .. } => EXIT_NON_FINITE,
        _ => EXIT_CONFIG,
    }
}

fn execute(cli: &Cli) -> Result<u8, Error> {
    let common = &cli.common;
    match &cli.command {
        Command::Run => {
            let cfg = load(common)?;
            let out = out_dir(common, Some(&cfg));
            let s = run_experiment(&cfg, Some(&out))?;
            println!("{}", serde_json::to_string_pretty(&s)?);
            Ok(match s.status {
                RunStatus::Completed => 0,
                RunStatus::BlowUp => EXIT_NON_FINITE,
            })
        }
        Command::Sweep { epsilons } => {
            let cfg = load(common)?;
            let eps = epsilons.clone().or_else(|| cfg.epsilons.clone()).unwrap_or_default();
            let out = out_dir(common, Some(&cfg));
            let s = sweep_epsilon(&cfg, &eps, Some(&out))?;
            println!("{}", serde_json::to_string_pretty(&s)?);
            Ok(if s.points.iter().any(|p| p.status == "blow_up") {
                EXIT_NON_FINITE
            } else {
                0
            })
        }
        Command::Verify { quick } => {
            let out = out_dir(common, None);
            let report = run_suite(common.seed.unwrap_or(0), *quick)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("verify_report.json"), serde_json::to_string_pretty(&report)?)?;
            print!("{}", report.summary());
            Ok(if report.passed() { 0 } else { EXIT_VERIFY })
        }
        Command::Dispersion {
            xi_max,
            epsilons,
            measure,
            n,
        } => {
            let cfg = load(common)?;
            let c = cfg.coefficient_set()?;
            let eps = epsilons.clone().unwrap_or_else(|| vec![cfg.epsilon]);
            let xis: Vec<u32> = (1..=*xi_max).collect();
            let rows = dispersion_table(&c, &eps, &xis, measure.then_some((*n, 3.0)))?;
            let out = out_dir(common, Some(&cfg));
            std::fs::create_dir_all(&out)?;
            let path = out.join("dispersion.csv");
            write_dispersion_csv(&path, &rows)?;
            println!("{}", path.display());
            Ok(0)
        }
        Command::Regimes {
            lambda1,
            lambda2,
            mu,
            theta,
            dim,
        } => {
            let (coeffs, dim) = match (lambda1, lambda2, mu, theta) {
                (Some(l1), Some(l2), Some(m), Some(t)) => {
                    (coefficients_from_bbm(&BbmParams::new(*l1, *l2, *m, *t)?)?, *dim)
                }
                (None, None, None, None) => {
                    let cfg = load(common)?;
                    (cfg.coefficient_set()?, cfg.grid.n.len())
                }
                _ => {
                    return Err(Error::ConfigInvalid(
                        "give all of --lambda1 --lambda2 --mu --theta, or --config".into(),
                    ))
                }
            };
            let report = validate_coefficients(&coeffs, dim);
            println!("{}", serde_json::to_string_pretty(&(coeffs, report))?);
            Ok(0)
        }
    }
}

fn init_threads(n: Option<usize>) {
    if let Some(n) = n {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    init_threads(cli.common.threads);
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
