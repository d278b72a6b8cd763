//! `fsde`: batch experiments for fBm-driven SDE schemes.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical or I/O failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{ConstantsArgs, Output};
use config::{Config, ConfigError, KEY_HELP};

#[derive(Parser, Debug)]
#[command(name = "fsde", version, about = "Schemes and asymptotic errors for SDEs driven by fractional Brownian motion", after_help = KEY_HELP)]
struct Cli {
    /// Worker threads for path-level parallelism (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Omit timestamps so identical configs give byte-identical outputs.
    #[arg(long, global = true)]
    reproducible: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample n_paths fBm paths at m_ref, one CSV per path.
    #[command(after_help = KEY_HELP)]
    SampleFbm { config: PathBuf },
    /// Solve each path at every level in m_levels and the reference at m_ref.
    #[command(after_help = KEY_HELP)]
    Solve { config: PathBuf },
    /// Raw and normalized errors per path and level, with predicted limits.
    #[command(after_help = KEY_HELP)]
    ErrorTable { config: PathBuf },
    /// Error table plus a per-level check of the predicted limit.
    #[command(after_help = KEY_HELP)]
    VerifyLimit { config: PathBuf },
    /// Hermite-variation constants C_(l) and C_10* as CSV.
    Constants {
        /// Comma-separated Hurst values.
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.5")]
        hurst: Vec<f64>,
        /// Comma-separated Hermite orders l.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        orders: Vec<usize>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Also write the table to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regime classification for a scheme over a list of Hurst values.
    Classify {
        /// "em", "milstein:k" or "cn".
        #[arg(long)]
        scheme: String,
        #[arg(long, value_delimiter = ',', required = true)]
        hurst: Vec<f64>,
        /// Classify for a drift-free equation.
        #[arg(long)]
        b_vanishes: bool,
    },
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(ConfigError("--workers: must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let out = Output {
        reproducible: cli.reproducible,
    };
    match cli.command {
        Command::SampleFbm { config } => {
            let files = commands::sample_fbm(&Config::load(&config)?, out)?;
            println!("wrote {} paths", files.len());
        }
        Command::Solve { config } => {
            let files = commands::solve(&Config::load(&config)?, out)?;
            println!("wrote {} solution files", files.len());
        }
        Command::ErrorTable { config } => {
            let report = commands::error_table_cmd(&Config::load(&config)?, out)?;
            println!("regime: {}", report.regime);
            for s in &report.summary {
                println!("m={:2} mean|err|={:.4e} ± {:.1e}", s.m, s.mean_abs_terminal, s.se_abs_terminal);
            }
            if let Some(fit) = &report.slope {
                println!("slope {:.4} ± {:.4}", fit.slope, fit.slope_ci95());
            }
            if let Some(reason) = &report.prediction_missing {
                println!("prediction absent: {reason}");
            }
        }
        Command::VerifyLimit { config } => {
            let (check, verdicts) = commands::verify_limit_cmd(&Config::load(&config)?, out)?;
            for (l, v) in check.levels.iter().zip(&verdicts) {
                println!(
                    "m={:2} {} median_ratio={} ks_p={} corr_b={:.3}±{:.3}",
                    l.m,
                    if v.pass { "PASS" } else { "FAIL" },
                    l.median_ratio.map_or("-".into(), |x| format!("{x:.3}")),
                    l.ks_conditional_p.map_or("-".into(), |x| format!("{x:.4}")),
                    l.corr_with_b.0,
                    l.corr_with_b.1
                );
            }
        }
        Command::Constants { hurst, orders, tol, out: file } => {
            let args = ConstantsArgs {
                hurst,
                orders,
                tol,
                out: file,
            };
            print!("{}", commands::constants(&args, out)?);
        }
        Command::Classify { scheme, hurst, b_vanishes } => {
            print!("{}", commands::classify(&scheme, &hurst, b_vanishes)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
