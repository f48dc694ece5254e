//! `cryomux` command-line front end.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use cryomux::Error;

/// Exit status for malformed input files or arguments.
const EXIT_INPUT: u8 = 2;
/// Exit status for a fit that did not converge (a partial report is still written).
const EXIT_UNCONVERGED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "cryomux", version, about = "Cryogenic multiplexer and resonator characterisation toolkit")]
struct Cli {
    /// Directory searched for relative input paths and default config files.
    #[arg(long, global = true, env = "CRYOMUX_CONFIG_DIR")]
    config_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Parallel,
    Serial,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesise a noisy transmission trace through a measurement chain.
    Simulate {
        #[arg(long, default_value = "chain.json")]
        chain: PathBuf,
        #[arg(long, default_value = "sweep.json")]
        sweep: PathBuf,
        /// Trace CSV to write.
        #[arg(long)]
        out: PathBuf,
        /// Also write the noiseless through trace (chain without its samples).
        #[arg(long)]
        through_out: Option<PathBuf>,
        /// Overrides the chain's rng_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit a resonance trace and report quality factors and photon number.
    #[command(group(ArgGroup::new("power").args(["p_sample_dbm", "chain"])))]
    FitSpectrum {
        #[arg(long)]
        trace: PathBuf,
        /// Through trace to divide out before fitting.
        #[arg(long)]
        through: Option<PathBuf>,
        /// Drive power at the sample, for the photon number.
        #[arg(long, allow_negative_numbers = true)]
        p_sample_dbm: Option<f64>,
        /// Chain used to compute the power at the sample (needs --sweep).
        #[arg(long, requires = "sweep")]
        chain: Option<PathBuf>,
        #[arg(long, requires = "chain")]
        sweep: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the TLS loss model to quality factor versus photon number.
    FitPower {
        #[arg(long)]
        points: PathBuf,
        /// Coupling Q used to convert loaded to internal Q.
        #[arg(long)]
        q_c_mag: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Participation-ratio loss budget for one or more samples.
    LossBudget {
        #[arg(long, default_value = "loss_budget.json")]
        components: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residual photon number and temperature from the ac-Stark shift.
    #[command(group(ArgGroup::new("input").required(true).args(["delta_ac", "temp"])))]
    Stark {
        /// Dispersive shift per photon in Hz (signed).
        #[arg(long, allow_negative_numbers = true)]
        chi: f64,
        /// Readout resonator frequency in Hz.
        #[arg(long)]
        nu_r: f64,
        /// Qubit frequency in Hz.
        #[arg(long)]
        nu_q: Option<f64>,
        /// Measured Stark shift in Hz.
        #[arg(long, allow_negative_numbers = true)]
        delta_ac: Option<f64>,
        /// Resonator temperature in K.
        #[arg(long)]
        temp: Option<f64>,
    },
    /// Program the switch and report the selection, timing and S-parameters.
    MuxProgram {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Port to select (0-based).
        #[arg(long)]
        port: usize,
        /// Supply voltage in V; defaults to the configuration's nominal value.
        #[arg(long)]
        vdd: Option<f64>,
        /// Control clock period in s.
        #[arg(long, default_value_t = 1e-8)]
        tclk: f64,
        /// Switch configuration JSON; defaults to the millikelvin configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// S-parameter CSV to write.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 4e9)]
        start_hz: f64,
        #[arg(long, default_value_t = 8e9)]
        stop_hz: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
    },
}

/// Outcome of a command that produced a report.
pub enum Outcome {
    Ok,
    Unconverged,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NumericSingularity(_) | Error::PoorWindow(_) => EXIT_UNCONVERGED,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let ctx = config::Context::new(cli.config_dir);
    match commands::dispatch(&ctx, cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Unconverged) => {
            eprintln!("error: fit did not converge; partial report written");
            ExitCode::from(EXIT_UNCONVERGED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
