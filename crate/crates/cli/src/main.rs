//! `ctau` — estimate restricted concordance probabilities from
//! subject-level CSVs, pool study estimates with time-aware
//! meta-regression, run simulation scenarios, search fractional
//! polynomial powers, and render SVG plots of the fitted curves.

// Negated comparisons like `!(x > 0.0)` deliberately reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;
mod svg;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ctau", version, about = "Time-restricted concordance estimation and meta-analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Estimate C(tau) and its bootstrap variance from one study's subject-level CSV
    Estimate(commands::estimate::EstimateArgs),
    /// Fit a meta-analysis or meta-regression model to study summaries
    Fit(commands::fit::FitArgs),
    /// Run a simulation scenario and summarize the operating characteristics
    Simulate(commands::simulate::SimulateArgs),
    /// Rank all fractional-polynomial power pairs by held-out weighted RMSE
    Powergrid(commands::powergrid::PowergridArgs),
    /// Render study bubbles and fitted curves as a static SVG
    Plot(commands::plot::PlotArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(args) => commands::estimate::run(args),
        Command::Fit(args) => commands::fit::run(args),
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Powergrid(args) => commands::powergrid::run(args),
        Command::Plot(args) => commands::plot::run(args),
    };
    if let Err(message) = result {
        eprintln!("error: {message}");
        std::process::exit(1);
    }
}
