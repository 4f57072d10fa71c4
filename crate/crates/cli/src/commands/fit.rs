use super::{FamilyArg, SubsetArg, TransformArg};
use crate::output::{csv_safe, read_file, write_atomic};
use clap::Args;
use ctau_core::io;
use ctau_core::meta::{self, FitStatus, KnotRule, MetaFit, MetaModelSpec};
use std::path::PathBuf;

#[derive(Args)]
pub struct FitArgs {
    /// Study-summary CSV with header `study_id,tau,c_hat,var_hat,n`
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = FamilyArg::Ma)]
    family: FamilyArg,
    #[arg(long, value_enum, default_value_t = TransformArg::Logit)]
    transform: TransformArg,
    #[arg(long, value_enum, default_value_t = SubsetArg::All)]
    subset: SubsetArg,
    /// Fractional-polynomial powers as `p1,p2`
    #[arg(long, default_value = "-0.5,0.5", allow_hyphen_values = true)]
    fp_powers: String,
    /// Explicit spline knots as a comma-separated list (default: automatic)
    #[arg(long)]
    knots: Option<String>,
    /// Floor the Hartung-Knapp scale factor at 1
    #[arg(long)]
    hk_floor: bool,
    /// Points of the fitted-curve CSV over the observed tau range
    #[arg(long, default_value_t = 200)]
    curve_points: usize,
    /// Output directory for report.csv, report.txt, and curve.csv
    #[arg(long)]
    out: PathBuf,
}

fn parse_number_list(text: &str, what: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("cannot parse {what} entry {p:?}: {e}")))
        .collect()
}

pub fn run(args: FitArgs) -> Result<(), String> {
    let text = read_file(&args.input)?;
    let studies = io::parse_summary_csv(&text).map_err(|e| e.to_string())?;

    let powers = parse_number_list(&args.fp_powers, "fp-powers")?;
    if powers.len() != 2 {
        return Err(format!("fp-powers expects exactly two values, got {}", powers.len()));
    }
    let mut spec = MetaModelSpec::new(args.family.to_core(), args.transform.to_core())
        .with_subset(args.subset.to_core())
        .with_fp_powers((powers[0], powers[1]));
    if let Some(knots) = &args.knots {
        spec = spec.with_knots(KnotRule::Explicit(parse_number_list(knots, "knots")?));
    }
    spec.hk_floor = args.hk_floor;

    // A non-converged decay fit is a reportable analytical outcome, not a
    // command failure; precondition violations still error out.
    let fit = meta::fit(&spec, &studies).map_err(|e| e.to_string())?;

    if args.curve_points < 2 {
        return Err("curve-points must be at least 2".into());
    }
    let tau_min = studies.iter().map(|s| s.tau).fold(f64::INFINITY, f64::min);
    let tau_max = studies.iter().map(|s| s.tau).fold(f64::NEG_INFINITY, f64::max);
    let curve_csv = render_curve_csv(&fit, tau_min, tau_max, args.curve_points)?;
    let report_csv = render_report_csv(&fit);
    let report_txt = render_report_table(&fit);

    write_atomic(&args.out.join("report.csv"), &report_csv)?;
    write_atomic(&args.out.join("report.txt"), &report_txt)?;
    write_atomic(&args.out.join("curve.csv"), &curve_csv)?;
    print!("{report_txt}");
    Ok(())
}

fn status_word(status: &FitStatus) -> &'static str {
    match status {
        FitStatus::Ok => "ok",
        FitStatus::Warning(_) => "warning",
        FitStatus::Failed(_) => "failed",
    }
}

fn status_detail(status: &FitStatus) -> String {
    match status {
        FitStatus::Ok => String::new(),
        FitStatus::Warning(m) | FitStatus::Failed(m) => csv_safe(m),
    }
}

fn render_curve_csv(fit: &MetaFit, tau_min: f64, tau_max: f64, points: usize) -> Result<String, String> {
    let mut out = String::from("tau,point,ci_low,ci_high\n");
    if fit.converged.is_failed() {
        return Ok(out);
    }
    let step = (tau_max - tau_min) / (points - 1) as f64;
    for i in 0..points {
        let tau = tau_min + i as f64 * step;
        let pred = meta::predict(fit, tau).map_err(|e| e.to_string())?;
        out.push_str(&format!("{},{},{},{}\n", tau, pred.point, pred.ci_low, pred.ci_high));
    }
    Ok(out)
}

fn render_report_csv(fit: &MetaFit) -> String {
    let mut out = String::from(
        "model,family,transform,subset,k_used,clamped,sigma_a,sigma_a2,q_stat,q_df,q_pvalue,status,detail,term,estimate,hk_se\n",
    );
    let spec = &fit.spec;
    let base = format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        spec.label(),
        spec.family.label(),
        spec.transform.label(),
        spec.subset.label(),
        fit.k_used,
        fit.clamped,
        fit.sigma_a(),
        fit.between_study_var,
        fit.q_stat,
        fit.q_df,
        fit.q_pvalue,
        status_word(&fit.converged),
        status_detail(&fit.converged),
    );
    if fit.coefficients.is_empty() {
        out.push_str(&format!("{base},,,\n"));
        return out;
    }
    let names = fit.design.coefficient_names();
    for (i, (name, value)) in names.iter().zip(&fit.coefficients).enumerate() {
        let se = fit.coef_cov.at(i, i).max(0.0).sqrt();
        out.push_str(&format!("{base},{name},{value},{se}\n"));
    }
    out
}

fn render_report_table(fit: &MetaFit) -> String {
    let mut out = String::new();
    out.push_str(&format!("model           {}\n", fit.spec.label()));
    out.push_str(&format!("status          {}\n", status_word(&fit.converged)));
    if let FitStatus::Warning(m) | FitStatus::Failed(m) = &fit.converged {
        out.push_str(&format!("detail          {m}\n"));
    }
    out.push_str(&format!("studies used    {}", fit.k_used));
    if fit.clamped > 0 {
        out.push_str(&format!("  ({} estimate(s) clamped off the unit boundary)", fit.clamped));
    }
    out.push('\n');
    if fit.converged.is_failed() {
        return out;
    }
    out.push_str(&format!("sigma_a         {:.4}  (transform scale)\n", fit.sigma_a()));
    out.push_str(&format!(
        "heterogeneity   Q = {:.2}, df = {}, p = {:.4}\n",
        fit.q_stat, fit.q_df, fit.q_pvalue
    ));
    out.push_str("coefficients (Hartung-Knapp standard errors)\n");
    let names = fit.design.coefficient_names();
    for (i, (name, value)) in names.iter().zip(&fit.coefficients).enumerate() {
        let se = fit.coef_cov.at(i, i).max(0.0).sqrt();
        out.push_str(&format!("  {name:<14} {value:>12.6}  (se {se:.6})\n"));
    }
    out
}
