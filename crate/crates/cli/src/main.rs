use std::path::PathBuf;
use std::process::ExitCode;

use bcfd_cli::{config::Mode, emit_table, experiments, load_config, AppError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bcfd", version, about = "Keller-Segel solver on non-uniform staggered grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory for all outputs.
    #[arg(long, global = true, env = "BCFD_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,

    /// Only report errors.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Single run with diagnostics and optional snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Error sweep over a list of resolutions with tau = h_fix.
    Convergence {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run until t_final or blow-up and summarize the peak.
    Blowup {
        #[arg(long)]
        config: PathBuf,
    },
}

fn execute(cli: &Cli) -> Result<(), AppError> {
    let (mode, path) = match &cli.command {
        Command::Run { config } => (Mode::Run, config),
        Command::Convergence { config } => (Mode::Convergence, config),
        Command::Blowup { config } => (Mode::Blowup, config),
    };
    let cfg = load_config(path, mode)?;
    match mode {
        Mode::Convergence => {
            let rows = experiments::run_convergence(&cfg);
            experiments::write_convergence(&rows, &cli.out_dir)?;
            if !cli.quiet {
                print!("{}", emit_table(&rows));
            }
            if let Some(bad) = rows.iter().find(|r| !r.is_ok()) {
                return Err(AppError::Run(format!("run with M = {} failed: {}", bad.m, bad.status)));
            }
        }
        Mode::Run | Mode::Blowup => {
            let out = experiments::run_single(&cfg, &cli.out_dir)?;
            if !cli.quiet {
                let s = &out.summary;
                println!(
                    "{}: {} steps to t = {:e}, peak max U = {:e} at t = {:e}, mass drift {:e}",
                    s.termination, s.steps, s.t_halt, s.peak_u_max, s.t_peak, s.max_relative_mass_drift
                );
                if let Some(e) = &s.errors {
                    println!("errors: rho {:e}, c {:e}, grad c {:e}", e.e_rho, e.e_c, e.e_gradc);
                }
                println!("outputs in {}", cli.out_dir.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
