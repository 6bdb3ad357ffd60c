//! `amo-lab`: command-line front end to `amo-core`.
//!
//! Every subcommand prints one JSON document to stdout wrapping the input
//! echo and the result. Exit codes: 0 success, 1 other failure, 2 usage,
//! 3 numerical degeneracy (singular box, degenerate construction), 4 regime
//! violation (λ ≤ e^{7β̂}).

mod commands;
mod config;
mod error;
mod json;
mod sweep;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::{
    cmd_cf, cmd_green, cmd_localize, cmd_regular, cmd_resonance, cmd_uniformity, CfArgs, GreenArgs, LocalizeArgs,
    Outcome, RegularArgs, ResonanceArgs, UniformityArgs,
};
use error::CliError;
use sweep::{cmd_sweep, SweepArgs};

#[derive(Parser)]
#[command(name = "amo-lab", version, about = "Finite-volume laboratory for the almost Mathieu operator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Continued-fraction report: convergents, Δ_n bounds, β sequence
    Cf(CfArgs),
    /// One Green's function entry by Cramer's rule, checked against a dense inverse
    Green(GreenArgs),
    /// (t, k)-regularity of a site
    Regular(RegularArgs),
    /// Resonant / non-resonant classification of a site and its interval sets
    Resonance(ResonanceArgs),
    /// Uniformity margin of a non-resonant or resonant phase set
    Uniformity(UniformityArgs),
    /// Localization verdict for a single-point experiment
    Localize(LocalizeArgs),
    /// Localization verdicts over every point of an experiment
    Sweep(SweepArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Cf(_) => "cf",
            Command::Green(_) => "green",
            Command::Regular(_) => "regular",
            Command::Resonance(_) => "resonance",
            Command::Uniformity(_) => "uniformity",
            Command::Localize(_) => "localize",
            Command::Sweep(_) => "sweep",
        }
    }

    fn input(&self) -> serde_json::Value {
        match self {
            Command::Cf(a) => json::to_value(a),
            Command::Green(a) => json::to_value(a),
            Command::Regular(a) => json::to_value(a),
            Command::Resonance(a) => json::to_value(a),
            Command::Uniformity(a) => json::to_value(a),
            Command::Localize(a) => json::to_value(a),
            Command::Sweep(a) => json::to_value(a),
        }
    }

    fn run(&self) -> Result<Outcome, CliError> {
        match self {
            Command::Cf(a) => cmd_cf(a),
            Command::Green(a) => cmd_green(a),
            Command::Regular(a) => cmd_regular(a),
            Command::Resonance(a) => cmd_resonance(a),
            Command::Uniformity(a) => cmd_uniformity(a),
            Command::Localize(a) => cmd_localize(a),
            Command::Sweep(a) => cmd_sweep(a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut doc = json!({
        "tool": "amo-lab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
        "input": cli.command.input(),
    });
    let code = match cli.command.run() {
        Ok(Outcome { result, code }) => {
            doc["result"] = result;
            code
        }
        Err(e) => {
            eprintln!("amo-lab: {e}");
            doc["error"] = json::to_value(&e);
            e.code
        }
    };
    print!("{}", json::render(&doc));
    ExitCode::from(code)
}
