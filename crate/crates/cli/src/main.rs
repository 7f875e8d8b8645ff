// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod kernel_table;
mod output;
mod run;
mod verify;

use clap::{Parser, Subcommand};
use config::RunConfig;
use error::{CliError, CliResult};
use pointnls::specfun::EvalPolicy;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Default output directory for `solve` and `scan` when neither the flag nor the config sets one.
pub const OUT_DIR_ENV: &str = "POINTNLS_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "pointnls", version, about = "Point-interaction NLS: kernels, charge solver, observables")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate a special function as `t,value_re,value_im`.
    KernelTable {
        #[arg(long, value_enum)]
        function: kernel_table::Function,
        #[arg(long, allow_hyphen_values = true)]
        tmin: f64,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long)]
        log_spacing: bool,
        /// λ for Q.
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Write `kernel_<function>.csv` here instead of stdout.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Solve one configuration.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Halve the steps and double ρ_max this many times.
        #[arg(long, default_value_t = 0)]
        refine: u32,
    },
    /// Solve a configuration over a grid of β0 and σ values.
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        refine: u32,
        /// Comma-separated β0 values (default: the config's).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        beta0_list: Vec<f64>,
        /// Comma-separated σ values (default: the config's).
        #[arg(long, value_delimiter = ',')]
        sigma_list: Vec<f64>,
    },
    /// Run a quick self-check suite and print a pass/fail table.
    Verify {
        #[arg(long, value_enum)]
        suite: verify::Suite,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Err(e) = dispatch(cli) {
        eprintln!("pointnls: {e}");
        std::process::exit(e.exit_code());
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::KernelTable {
            function,
            tmin,
            tmax,
            points,
            log_spacing,
            lambda,
            out_dir,
        } => {
            let ts = kernel_table::sample_points(tmin, tmax, points, log_spacing)?;
            let rows = kernel_table::table(function, &ts, lambda, &EvalPolicy::default())?;
            match out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
                    let name = format!("kernel_{}.csv", format!("{function:?}").to_lowercase());
                    output::write_csv(&dir.join(name), &rows)?;
                }
                None => print!("{}", output::csv_string(&rows)),
            }
            Ok(())
        }
        Command::Solve { config, out_dir, refine } => {
            let cfg = RunConfig::load(&config)?.refined(refine);
            let dir = run::resolve_out_dir(out_dir.as_deref(), Some(&cfg));
            let s = run::run_one(&cfg, &dir)?;
            println!("{}: {} sup|q| = {:.6e}, files in {}", s.name, s.status, s.sup_q, dir.display());
            Ok(())
        }
        Command::Scan {
            config,
            out_dir,
            refine,
            beta0_list,
            sigma_list,
        } => {
            let cfg = RunConfig::load(&config)?.refined(refine);
            let dir = run::resolve_out_dir(out_dir.as_deref(), Some(&cfg));
            let beta0s = if beta0_list.is_empty() { vec![cfg.params.beta0] } else { beta0_list };
            let sigmas = if sigma_list.is_empty() { vec![cfg.params.sigma] } else { sigma_list };
            scan(&cfg, &beta0s, &sigmas, &dir)
        }
        Command::Verify { suite } => {
            let checks = verify::run(suite)?;
            print!("{}", verify::render(suite, &checks));
            let failed = checks.iter().filter(|c| !c.passed()).count();
            if failed > 0 {
                return Err(CliError::VerifyFailed(failed));
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct ScanSummary<'a> {
    beta0: &'a [f64],
    sigma: &'a [f64],
    cells: Vec<run::CellOutcome>,
    files: Vec<String>,
}

fn scan(cfg: &RunConfig, beta0s: &[f64], sigmas: &[f64], dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let cells = run::scan(cfg, beta0s, sigmas, dir);
    let name = format!("{}_scan.json", cfg.outputs.name);
    let mut files: Vec<String> = cells
        .iter()
        .flat_map(|c| match c {
            run::CellOutcome::Ok(s) => s.files.clone(),
            run::CellOutcome::Failed { .. } => Vec::new(),
        })
        .collect();
    files.push(name.clone());
    let first_failure = cells.iter().find_map(|c| match c {
        run::CellOutcome::Failed { exit_code, error, name, .. } => Some((*exit_code, format!("{name}: {error}"))),
        run::CellOutcome::Ok(_) => None,
    });
    for c in &cells {
        match c {
            run::CellOutcome::Ok(s) => println!("{}: {} sup|q| = {:.6e}", s.name, s.status, s.sup_q),
            run::CellOutcome::Failed { name, error, .. } => println!("{name}: error: {error}"),
        }
    }
    let summary = ScanSummary {
        beta0: beta0s,
        sigma: sigmas,
        cells,
        files,
    };
    output::write_json(&dir.join(&name), &summary)?;
    if let Some((code, msg)) = first_failure {
        eprintln!("pointnls: {msg}");
        std::process::exit(code);
    }
    Ok(())
}
