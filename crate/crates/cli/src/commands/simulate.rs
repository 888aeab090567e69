//! `uptake simulate`: draw a synthetic survey file from known truth
//! parameters, in exactly the format `fit` reads back.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};

use uptake_core::model::{
    draw_random_intercepts, simulate_dataset, CovariateDistribution, ParameterVector,
    SimulationLayout,
};
use uptake_core::survey::write_survey;

use crate::commands::{classify_model, input, require_file, CmdResult, Failure};
use crate::config::{parse_key_values, RunConfig};

fn parse_floats(key: &str, value: &str) -> Result<Vec<f64>, Failure> {
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| input(anyhow!("truth key '{key}': {e} in '{}'", s.trim())))
        })
        .collect()
}

fn parse_probs<const N: usize>(key: &str, value: &str) -> Result<[f64; N], Failure> {
    let v = parse_floats(key, value)?;
    v.try_into()
        .map_err(|v: Vec<f64>| input(anyhow!("truth key '{key}': expected {N} values, got {}", v.len())))
}

pub fn cmd_simulate(cfg: &RunConfig, truth_path: &Path, out_file: Option<PathBuf>) -> CmdResult {
    require_file(truth_path, "truth file")?;
    let text = std::fs::read_to_string(truth_path)
        .with_context(|| format!("cannot read {}", truth_path.display()))
        .map_err(input)?;
    let entries = parse_key_values(&text).map_err(input)?;

    let beta_text = entries
        .get("beta")
        .ok_or_else(|| input(anyhow!("truth file must set 'beta' (11 comma-separated values)")))?;
    let beta_vec = parse_floats("beta", beta_text)?;
    let beta: [f64; 11] = beta_vec
        .try_into()
        .map_err(|v: Vec<f64>| input(anyhow!("'beta' must have 11 values, got {}", v.len())))?;

    let sigma_alpha = match entries.get("sigma_alpha") {
        Some(v) => v
            .parse::<f64>()
            .map_err(|e| input(anyhow!("truth key 'sigma_alpha': {e}")))?,
        None => 0.3,
    };
    if !(sigma_alpha > 0.0 && sigma_alpha.is_finite()) {
        return Err(input(anyhow!("'sigma_alpha' must be positive and finite")));
    }

    let mut states: Vec<String> = match entries.get("states") {
        Some(v) => v.split(',').map(|s| s.trim().to_ascii_uppercase()).collect(),
        None => cfg.roster.clone(),
    };
    states.sort();
    states.dedup();
    if states.is_empty() {
        return Err(input(anyhow!("'states' is empty")));
    }

    let alpha = match entries.get("alpha") {
        Some(v) => {
            let alpha = parse_floats("alpha", v)?;
            if alpha.len() != states.len() {
                return Err(input(anyhow!(
                    "'alpha' has {} values for {} states",
                    alpha.len(),
                    states.len()
                )));
            }
            alpha
        }
        None => draw_random_intercepts(states.len(), sigma_alpha, cfg.seed),
    };

    let state_counts: Vec<(String, usize)> = match (entries.get("records_per_state"), entries.get("n_total")) {
        (Some(v), _) => {
            let per: usize =
                v.parse().map_err(|e| input(anyhow!("'records_per_state': {e}")))?;
            states.iter().map(|s| (s.clone(), per)).collect()
        }
        (None, Some(v)) => {
            let total: usize = v.parse().map_err(|e| input(anyhow!("'n_total': {e}")))?;
            let base = total / states.len();
            let extra = total % states.len();
            states
                .iter()
                .enumerate()
                .map(|(i, s)| (s.clone(), base + usize::from(i < extra)))
                .collect()
        }
        (None, None) => {
            return Err(input(anyhow!(
                "truth file must set 'records_per_state' or 'n_total'"
            )))
        }
    };
    if state_counts.iter().map(|(_, n)| n).sum::<usize>() == 0 {
        return Err(input(anyhow!("zero records requested")));
    }

    let mut covariates = CovariateDistribution::default();
    if let Some(v) = entries.get("p_gender") {
        covariates.gender = parse_probs("p_gender", v)?;
    }
    if let Some(v) = entries.get("p_race") {
        covariates.race = parse_probs("p_race", v)?;
    }
    if let Some(v) = entries.get("p_education") {
        covariates.education = parse_probs("p_education", v)?;
    }
    if let Some(v) = entries.get("p_income") {
        covariates.income = parse_probs("p_income", v)?;
    }

    let truth =
        ParameterVector { beta, alpha, log_sigma_alpha: sigma_alpha.ln() };
    let layout = SimulationLayout { state_counts, covariates };
    let data = simulate_dataset(&truth, &layout, cfg.seed).map_err(classify_model)?;

    let mut comments = cfg.provenance();
    comments.push(("truth_file".into(), truth_path.display().to_string()));
    comments.push(("records".into(), data.records.len().to_string()));

    let out_path = out_file.unwrap_or_else(|| cfg.out_dir.join("synthetic_survey.tsv"));
    if let Some(parent) = out_path.parent() {
        std::fs::create_dir_all(parent).map_err(input)?;
    }
    let mut buf = Vec::new();
    write_survey(&data, &comments, &mut buf).map_err(input)?;
    std::fs::write(&out_path, buf).map_err(input)?;

    println!(
        "simulated {} records over {} states into {}",
        data.records.len(),
        data.states.len(),
        out_path.display()
    );
    Ok(())
}
