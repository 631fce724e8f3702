//! `qbcharge`: simulate, analyze and scan driven quantum battery packs.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical or model error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "qbcharge", version, about = "Charging dynamics of harmonically driven quantum battery packs")]
struct Cli {
    /// Accepted for compatibility; no random numbers are used anywhere.
    #[arg(long, global = true)]
    seedless: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the Schrodinger equation from the uncharged state.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "t-max")]
        t_max: f64,
        /// Step size; defaults to 1/200 of the fastest period.
        #[arg(long)]
        dt: Option<f64>,
        /// Check convergence by halving the step twice.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form saturation curves and the optimal linear-drive parameters.
    Analytic {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Drive strength.
        #[arg(long = "A")]
        a: Option<f64>,
        /// Drive frequency.
        #[arg(long = "w")]
        w: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        omega0: f64,
        /// Branch index for `optimal`.
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long = "t-max", default_value_t = 10.0)]
        t_max: f64,
        /// Sample spacing of the emitted curve.
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Floquet reconstruction next to direct integration.
    Floquet {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = qbcharge::floquet::DEFAULT_N_MAX)]
        nmax: usize,
        /// Defaults to five drive periods.
        #[arg(long = "t-max")]
        t_max: Option<f64>,
        /// Step of the direct integration; defaults to 1/2000 of the fastest period.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Saturation map over one scan family.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Earliest time to a saturation threshold over one or more scan families.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        threshold: f64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Parallel,
    Circular,
    Chrwa,
    Optimal,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate { config, t_max, dt, tol, out } => commands::simulate(&config, t_max, dt, tol, &out),
        Command::Analytic { mode, a, w, omega0, k, t_max, dt, out } => {
            commands::analytic(commands::AnalyticArgs { mode, a, w, omega0, k, t_max, dt }, &out)
        }
        Command::Floquet { config, nmax, t_max, dt, out } => commands::floquet(&config, nmax, t_max, dt, &out),
        Command::Sweep { config, dt, out } => commands::sweep(&config, dt, &out),
        Command::Optimize { config, threshold, dt, out } => commands::optimize(&config, threshold, dt, &out),
    };
    match result {
        Ok(files) => {
            for f in files {
                println!("{f}");
            }
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("{failure}");
            ExitCode::from(failure.code())
        }
    }
}
