use super::TransformArg;
use crate::output::{csv_safe, read_file, write_atomic};
use clap::Args;
use ctau_core::io;
use ctau_core::meta::{fp2_power_grid, FitStatus};
use std::path::PathBuf;

#[derive(Args)]
pub struct PowergridArgs {
    /// Study-summary CSV used for fitting
    #[arg(long)]
    input: PathBuf,
    /// Held-out study-summary CSV for the weighted RMSE (defaults to the
    /// fitting studies)
    #[arg(long)]
    holdout: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TransformArg::Logit)]
    transform: TransformArg,
    /// Output directory for grid.csv
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: PowergridArgs) -> Result<(), String> {
    let studies = io::parse_summary_csv(&read_file(&args.input)?).map_err(|e| e.to_string())?;
    let holdout = match &args.holdout {
        Some(path) => io::parse_summary_csv(&read_file(path)?).map_err(|e| e.to_string())?,
        None => studies.clone(),
    };

    let grid = fp2_power_grid(&studies, args.transform.to_core(), &holdout).map_err(|e| e.to_string())?;

    let mut csv = String::from("rank,p1,p2,rmse,status,detail\n");
    for (rank, entry) in grid.iter().enumerate() {
        let (status, detail) = match &entry.status {
            FitStatus::Ok => ("ok", String::new()),
            FitStatus::Warning(m) => ("warning", csv_safe(m)),
            FitStatus::Failed(m) => ("failed", csv_safe(m)),
        };
        let rmse = if entry.rmse.is_nan() { String::new() } else { entry.rmse.to_string() };
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rank + 1,
            entry.powers.0,
            entry.powers.1,
            rmse,
            status,
            detail
        ));
    }
    write_atomic(&args.out.join("grid.csv"), &csv)?;

    println!("{:<6} {:>6} {:>6} {:>14} {:>8}", "rank", "p1", "p2", "rmse", "status");
    for (rank, entry) in grid.iter().enumerate().take(10) {
        let status = match &entry.status {
            FitStatus::Ok => "ok",
            FitStatus::Warning(_) => "warning",
            FitStatus::Failed(_) => "failed",
        };
        println!(
            "{:<6} {:>6} {:>6} {:>14.6} {:>8}",
            rank + 1,
            entry.powers.0,
            entry.powers.1,
            entry.rmse,
            status
        );
    }
    Ok(())
}
