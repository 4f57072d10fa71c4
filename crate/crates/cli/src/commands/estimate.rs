use super::{EstimatorArg, UnoVariantArg};
use crate::output::{read_file, stem, write_atomic};
use clap::Args;
use ctau_core::io;
use ctau_core::survival::{bootstrap_variance, estimate, CIndexEstimate};
use std::path::PathBuf;

#[derive(Args)]
pub struct EstimateArgs {
    /// Subject-level CSV with header `time,event,score`
    #[arg(long)]
    input: PathBuf,
    /// Truncation time of the estimate
    #[arg(long)]
    tau: f64,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Uno)]
    estimator: EstimatorArg,
    #[arg(long, value_enum, default_value_t = UnoVariantArg::Gerds)]
    uno_variant: UnoVariantArg,
    /// Bootstrap resamples for the variance
    #[arg(long, default_value_t = 1000)]
    bootstrap: u32,
    /// Seed of the bootstrap streams (defaults to 0, never the clock)
    #[arg(long)]
    seed: Option<u64>,
    /// Study label in the output row (defaults to the input file stem)
    #[arg(long)]
    study_id: Option<String>,
    /// Write the row to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit the header row (useful when concatenating studies)
    #[arg(long)]
    no_header: bool,
}

pub fn run(args: EstimateArgs) -> Result<(), String> {
    let text = read_file(&args.input)?;
    let sample = io::parse_subject_csv(&text).map_err(|e| e.to_string())?;
    let estimator = args.estimator.to_core(args.uno_variant);

    let c_hat = estimate(&sample, args.tau, estimator).map_err(|e| e.to_string())?;
    let boot = bootstrap_variance(&sample, args.tau, estimator, args.bootstrap as usize, args.seed.unwrap_or(0))
        .map_err(|e| e.to_string())?;
    if boot.dropped > 0 {
        eprintln!("note: {} of {} bootstrap resamples were dropped", boot.dropped, boot.reps);
    }

    let result = CIndexEstimate::new(args.tau, c_hat, boot.variance, sample.len(), estimator, Some(boot.reps))
        .map_err(|e| e.to_string())?;

    let study_id = args.study_id.unwrap_or_else(|| stem(&args.input));
    let mut out = String::new();
    if !args.no_header {
        out.push_str(io::SUMMARY_HEADER);
        out.push('\n');
    }
    out.push_str(&format!(
        "{},{},{},{},{}\n",
        study_id, result.tau, result.c_hat, result.var_hat, result.n
    ));

    match &args.out {
        Some(path) => write_atomic(path, &out)?,
        None => print!("{out}"),
    }
    Ok(())
}
