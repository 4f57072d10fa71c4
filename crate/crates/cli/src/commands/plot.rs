use crate::output::{read_file, stem, write_atomic};
use crate::svg::{self, CurveSeries};
use clap::Args;
use ctau_core::io;
use std::path::{Path, PathBuf};

#[derive(Args)]
pub struct PlotArgs {
    /// Study-summary CSV drawn as bubbles (area proportional to 1/var_hat)
    #[arg(long)]
    studies: PathBuf,
    /// Fitted-curve CSVs (`tau,point,...`), one polyline each
    #[arg(long, value_delimiter = ',')]
    curves: Vec<PathBuf>,
    /// Optional true-curve CSV drawn in black
    #[arg(long)]
    oracle: Option<PathBuf>,
    /// Output SVG path
    #[arg(long)]
    out: PathBuf,
}

fn read_curve(path: &Path) -> Result<CurveSeries, String> {
    let text = read_file(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| format!("{}: empty curve file", path.display()))?;
    let columns: Vec<String> = header.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
    let tau_idx = columns
        .iter()
        .position(|c| c == "tau")
        .ok_or_else(|| format!("{}: missing tau column", path.display()))?;
    let val_idx = columns
        .iter()
        .position(|c| c == "point" || c == "value" || c == "c")
        .ok_or_else(|| format!("{}: missing point column", path.display()))?;

    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |idx: usize, what: &str| -> Result<f64, String> {
            fields
                .get(idx)
                .and_then(|f| f.trim().parse::<f64>().ok())
                .ok_or_else(|| format!("{}: line {}: bad {what} value", path.display(), i + 2))
        };
        points.push((parse(tau_idx, "tau")?, parse(val_idx, "point")?));
    }
    if points.is_empty() {
        return Err(format!("{}: curve has no data rows", path.display()));
    }
    Ok(CurveSeries { label: stem(path), points })
}

pub fn run(args: PlotArgs) -> Result<(), String> {
    let studies = io::parse_summary_csv(&read_file(&args.studies)?).map_err(|e| e.to_string())?;
    let curves = args.curves.iter().map(|p| read_curve(p)).collect::<Result<Vec<_>, _>>()?;
    let oracle = args.oracle.as_deref().map(read_curve).transpose()?;

    let rendered = svg::render(&studies, &curves, oracle.as_ref())?;
    write_atomic(&args.out, &rendered)?;
    Ok(())
}
