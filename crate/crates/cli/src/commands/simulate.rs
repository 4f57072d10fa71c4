use crate::output::{csv_safe, read_file, write_atomic};
use clap::Args;
use ctau_core::meta::MetaModelSpec;
use ctau_core::sim::{
    self, eval_coverage, eval_failure_rate, parse_config, run_scenario, ScenarioRun,
};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Args)]
pub struct SimulateArgs {
    /// Scenario config file (`key = value`); defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Root seed; required here or in the config file (no clock seeding)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    studies: Option<usize>,
    #[arg(long)]
    tau_max: Option<f64>,
    #[arg(long)]
    sigma_a: Option<f64>,
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long)]
    oracle_samples: Option<usize>,
    #[arg(long)]
    censor_rate: Option<f64>,
    #[arg(long)]
    tau_support_min: Option<f64>,
    #[arg(long)]
    n_grid_min: Option<usize>,
    #[arg(long)]
    n_grid_max: Option<usize>,
    #[arg(long)]
    n_grid_step: Option<usize>,
    #[arg(long)]
    gamma_shape: Option<f64>,
    #[arg(long)]
    gamma_rate: Option<f64>,
    #[arg(long)]
    weibull_sigma: Option<f64>,
    #[arg(long)]
    score_sd: Option<f64>,
    /// Comma-separated model labels, e.g. `ma(logit),fp2(logit)`
    #[arg(long)]
    models: Option<String>,
}

pub fn run(args: SimulateArgs) -> Result<(), String> {
    let mut parsed = match &args.config {
        Some(path) => parse_config(&read_file(path)?).map_err(|e| e.to_string())?,
        None => sim::ParsedScenario {
            config: sim::ScenarioConfig::default(),
            models: sim::default_models(),
            seed_present: false,
        },
    };

    let cfg = &mut parsed.config;
    if let Some(v) = args.replications {
        cfg.replications = v;
    }
    if let Some(v) = args.studies {
        cfg.studies = v;
    }
    if let Some(v) = args.tau_max {
        cfg.tau_max = v;
    }
    if let Some(v) = args.sigma_a {
        cfg.sigma_a = v;
    }
    if let Some(v) = args.bootstrap {
        cfg.bootstrap_reps = v;
    }
    if let Some(v) = args.oracle_samples {
        cfg.oracle_samples = v;
    }
    if let Some(v) = args.censor_rate {
        cfg.censor_rate = v;
    }
    if let Some(v) = args.tau_support_min {
        cfg.tau_support_min = v;
    }
    if let Some(v) = args.n_grid_min {
        cfg.n_grid_min = v;
    }
    if let Some(v) = args.n_grid_max {
        cfg.n_grid_max = v;
    }
    if let Some(v) = args.n_grid_step {
        cfg.n_grid_step = v;
    }
    if let Some(v) = args.gamma_shape {
        cfg.gamma_shape = v;
    }
    if let Some(v) = args.gamma_rate {
        cfg.gamma_rate = v;
    }
    if let Some(v) = args.weibull_sigma {
        cfg.weibull_sigma = v;
    }
    if let Some(v) = args.score_sd {
        cfg.score_sd = v;
    }
    match args.seed {
        Some(seed) => cfg.seed = seed,
        None if parsed.seed_present => {}
        None => return Err("MissingSeed: simulate requires --seed or a seed entry in the config file".into()),
    }
    if let Some(models) = &args.models {
        parsed.models = models
            .split(',')
            .map(|m| MetaModelSpec::parse_label(m.trim()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
    }

    let run = run_scenario(&parsed.config, &parsed.models).map_err(|e| e.to_string())?;

    write_atomic(&args.out.join("scenario.txt"), &parsed.config.render(&parsed.models))?;
    write_atomic(&args.out.join("replications.csv"), &render_replications(&run))?;
    write_atomic(&args.out.join("summary_failure.csv"), &render_failures(&run))?;
    write_atomic(&args.out.join("summary_prediction.csv"), &render_predictions(&run))?;
    write_atomic(&args.out.join("summary_coverage.csv"), &render_coverage(&run))?;
    write_atomic(&args.out.join("summary_area.csv"), &render_areas(&run))?;

    print_summary(&run);
    Ok(())
}

fn render_replications(run: &ScenarioRun) -> String {
    let mut out = String::from(
        "scenario,replication,seed,model,status,detail,prediction,ci_low,ci_high,area,sigma_a2\n",
    );
    for rep in &run.replications {
        for model in &rep.models {
            let (status, detail) = match &model.status {
                ctau_core::meta::FitStatus::Ok => ("ok", String::new()),
                ctau_core::meta::FitStatus::Warning(m) => ("warning", csv_safe(m)),
                ctau_core::meta::FitStatus::Failed(m) => ("failed", csv_safe(m)),
            };
            let (point, lo, hi) = match &model.prediction {
                Some(p) => (p.point.to_string(), p.ci_low.to_string(), p.ci_high.to_string()),
                None => (String::new(), String::new(), String::new()),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                run.tag,
                rep.replication,
                rep.seed,
                model.label,
                status,
                detail,
                point,
                lo,
                hi,
                model.area.map(|a| a.to_string()).unwrap_or_default(),
                model.between_study_var.map(|v| v.to_string()).unwrap_or_default(),
            ));
        }
    }
    out
}

fn render_failures(run: &ScenarioRun) -> String {
    let rates = eval_failure_rate(&run.replications);
    let mut out = String::from("model,replications,failures,failure_rate_pct\n");
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for rep in &run.replications {
        for model in &rep.models {
            if !model.status.is_ok() {
                *counts.entry(model.label.as_str()).or_default() += 1;
            }
        }
    }
    for (label, rate) in &rates {
        let total = run.replications.len();
        let failures = counts.get(label.as_str()).copied().unwrap_or(0);
        out.push_str(&format!("{label},{total},{failures},{rate}\n"));
    }
    out
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn per_model_values(run: &ScenarioRun, pick: impl Fn(&ctau_core::sim::ModelOutcome) -> Option<f64>) -> BTreeMap<String, Vec<f64>> {
    let mut map: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for rep in &run.replications {
        for model in &rep.models {
            let entry = map.entry(model.label.clone()).or_default();
            if let Some(v) = pick(model) {
                entry.push(v);
            }
        }
    }
    map
}

fn render_predictions(run: &ScenarioRun) -> String {
    let mut out = String::from("model,eval_tau,true_value,used,mean_prediction,bias,sd_prediction\n");
    for (label, values) in per_model_values(run, |m| m.prediction.as_ref().map(|p| p.point)) {
        let (mean, sd) = mean_sd(&values);
        out.push_str(&format!(
            "{label},{},{},{},{},{},{}\n",
            run.eval_tau,
            run.true_value,
            values.len(),
            mean,
            mean - run.true_value,
            sd
        ));
    }
    out
}

fn render_coverage(run: &ScenarioRun) -> String {
    let coverage = eval_coverage(&run.replications, run.true_value);
    let mut out = String::from("model,eval_tau,true_value,used,coverage,ci_low,ci_high\n");
    for (label, est) in &coverage {
        out.push_str(&format!(
            "{label},{},{},{},{},{},{}\n",
            run.eval_tau, run.true_value, est.used, est.p_hat, est.ci_low, est.ci_high
        ));
    }
    out
}

fn render_areas(run: &ScenarioRun) -> String {
    let mut out = String::from("model,used,mean_area_x1000,sd_area_x1000\n");
    for (label, values) in per_model_values(run, |m| m.area) {
        let scaled: Vec<f64> = values.iter().map(|a| a * 1000.0).collect();
        let (mean, sd) = mean_sd(&scaled);
        out.push_str(&format!("{label},{},{},{}\n", scaled.len(), mean, sd));
    }
    out
}

fn print_summary(run: &ScenarioRun) {
    println!("scenario {}   replications {}", run.tag, run.replications.len());
    println!(
        "true C at eval tau {:.3}: {:.4}",
        run.eval_tau, run.true_value
    );
    let rates = eval_failure_rate(&run.replications);
    let coverage = eval_coverage(&run.replications, run.true_value);
    let predictions = per_model_values(run, |m| m.prediction.as_ref().map(|p| p.point));
    let areas = per_model_values(run, |m| m.area);
    println!(
        "{:<22} {:>9} {:>10} {:>9} {:>12}",
        "model", "fail %", "mean pred", "coverage", "area x1000"
    );
    for (label, rate) in &rates {
        let mean_pred = predictions.get(label).map(|v| mean_sd(v).0).unwrap_or(f64::NAN);
        let cov = coverage.get(label).map(|c| c.p_hat).unwrap_or(f64::NAN);
        let area = areas
            .get(label)
            .map(|v| mean_sd(&v.iter().map(|a| a * 1000.0).collect::<Vec<_>>()).0)
            .unwrap_or(f64::NAN);
        println!("{label:<22} {rate:>9.2} {mean_pred:>10.4} {cov:>9.3} {area:>12.2}");
    }
}
