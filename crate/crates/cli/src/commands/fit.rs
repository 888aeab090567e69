//! `uptake fit`: survey microdata to posterior summaries, intercept ladder,
//! diagnostics, raw draws, and a run manifest.

use std::fmt::Write as _;

use anyhow::anyhow;

use uptake_core::hmc::{hmc_sample, HmcConfig};
use uptake_core::model::{parameter_names, ModelInstance, Posterior, PriorSpec};
use uptake_core::report::{emit_diagnostics, random_intercept_ladder, summarize_posterior};
use uptake_core::survey::design::encode_design;
use uptake_core::survey::{parse_survey, ParseOptions, SurveyDataset};

use crate::commands::{classify_hmc, classify_model, input, numeric, require_file, CmdResult};
use crate::config::RunConfig;
use crate::output::{
    full, render_draws, render_ladder_tsv, render_summary_table, render_summary_tsv, sig6,
    write_diagnostics, write_file,
};

fn check_response_variation(data: &SurveyDataset) -> CmdResult {
    let ones = data.records.iter().filter(|r| r.vaccinated == 1).count();
    if ones == 0 || ones == data.records.len() {
        return Err(numeric(anyhow!(
            "degenerate response: every retained respondent has vaccinated={} \
             (complete separation; the model is unidentified)",
            u8::from(ones > 0)
        )));
    }
    Ok(())
}

pub fn cmd_fit(cfg: &RunConfig) -> CmdResult {
    let path = cfg
        .survey_file
        .as_ref()
        .ok_or_else(|| input(anyhow!("no survey file: pass --survey-file or set survey_file")))?;
    require_file(path, "survey file")?;
    let file = std::fs::File::open(path).map_err(input)?;
    let opts = ParseOptions {
        columns: cfg.columns.clone(),
        levels: cfg.levels.clone(),
        roster: cfg.roster.clone(),
    };
    let data = parse_survey(file, &opts).map_err(input)?;
    check_response_variation(&data)?;

    let design = encode_design(&data).map_err(input)?;
    let roster = design.roster().to_vec();
    let prior = PriorSpec {
        beta_scale: cfg.beta_prior_scale,
        sigma_alpha_hyper_scale: cfg.sigma_alpha_prior_scale,
    };
    let model = ModelInstance::new(design, prior).map_err(classify_model)?;
    let names = parameter_names(&roster);

    let hmc_config = HmcConfig {
        chains: cfg.chains,
        iterations: cfg.iterations,
        warmup_fraction: cfg.warmup_fraction,
        target_accept: cfg.target_accept,
        leapfrog_steps: cfg.leapfrog_steps,
        seed: cfg.seed,
    };
    hmc_config.validate().map_err(classify_hmc)?;
    let chains = hmc_sample(&Posterior::new(&model), &hmc_config).map_err(classify_hmc)?;

    let summary = summarize_posterior(&chains, &names).map_err(numeric)?;
    let ladder = random_intercept_ladder(&summary, &roster).map_err(numeric)?;
    let diagnostics = emit_diagnostics(&chains, &names).map_err(numeric)?;

    let mut comments = cfg.provenance();
    comments.push(("survey_file".into(), path.display().to_string()));
    comments.push(("records".into(), data.records.len().to_string()));
    comments.push(("dropped_rows".into(), data.dropped_count.to_string()));
    comments.push(("states".into(), roster.len().to_string()));

    let out = &cfg.out_dir;
    write_file(&out.join("posterior_summary.tsv"), &render_summary_tsv(&summary, &comments))
        .map_err(input)?;
    write_file(&out.join("posterior_summary.txt"), &render_summary_table(&summary, &comments))
        .map_err(input)?;
    write_file(&out.join("random_intercepts.tsv"), &render_ladder_tsv(&ladder, &comments))
        .map_err(input)?;
    write_diagnostics(&out.join("diagnostics"), &diagnostics, &comments).map_err(input)?;
    write_file(&out.join("draws.tsv"), &render_draws(&chains, &names, &comments))
        .map_err(input)?;

    let max_rhat = summary.max_rhat().unwrap_or(f64::NAN);
    let min_ess = summary
        .rows
        .iter()
        .map(|r| r.ess)
        .filter(|e| e.is_finite())
        .min_by(|a, b| a.partial_cmp(b).unwrap())
        .unwrap_or(f64::NAN);

    let mut manifest = String::new();
    for (k, v) in &comments {
        let _ = writeln!(manifest, "{k} = {v}");
    }
    let _ = writeln!(manifest, "chains = {}", cfg.chains);
    let _ = writeln!(manifest, "iterations = {}", cfg.iterations);
    let _ = writeln!(manifest, "warmup = {}", hmc_config.warmup());
    let _ = writeln!(manifest, "retained_per_chain = {}", chains.retained());
    let _ = writeln!(manifest, "dimension = {}", chains.dim);
    let _ = writeln!(manifest, "max_rhat = {}", full(max_rhat));
    let _ = writeln!(manifest, "min_ess = {}", full(min_ess));
    for c in 0..chains.chain_count() {
        let _ = writeln!(
            manifest,
            "chain_{c} = accept_rate {} step_size {} divergences {}",
            full(chains.accept_rate[c]),
            full(chains.step_size[c]),
            chains.divergence_count[c]
        );
    }
    write_file(&out.join("manifest.txt"), &manifest).map_err(input)?;

    println!(
        "fit complete: {} records, {} states, {} parameters; max rhat {}, min ess {}; \
         outputs in {}",
        data.records.len(),
        roster.len(),
        chains.dim,
        sig6(max_rhat),
        sig6(min_ess),
        out.display()
    );
    Ok(())
}
