//! `uptake diagnose`: recompute summaries and diagnostic series from a
//! draws file written by `fit`.

use std::path::Path;

use anyhow::anyhow;

use uptake_core::hmc::{ChainDraws, ChainSet};
use uptake_core::model::ParameterNames;
use uptake_core::report::{emit_diagnostics, random_intercept_ladder, summarize_posterior};

use crate::commands::{input, numeric, require_file, CmdResult, Failure};
use crate::config::RunConfig;
use crate::output::{
    render_ladder_tsv, render_summary_table, render_summary_tsv, sig6, write_diagnostics,
    write_file,
};

struct DrawsFile {
    chains: ChainSet,
    names: ParameterNames,
}

fn parse_meta<T: std::str::FromStr>(meta: &str, key: &str) -> Result<T, Failure>
where
    T::Err: std::fmt::Display,
{
    meta.parse::<T>().map_err(|e| input(anyhow!("draws file: bad '{key}': {e}")))
}

fn parse_draws(text: &str) -> Result<DrawsFile, Failure> {
    let mut meta = std::collections::BTreeMap::new();
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();

    for line in text.lines() {
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once(':') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if header.is_none() {
            if fields.first() != Some(&"chain") || fields.get(1) != Some(&"draw") {
                return Err(input(anyhow!("draws file: missing 'chain\\tdraw\\t...' header")));
            }
            header = Some(fields[2..].iter().map(|s| s.to_string()).collect());
            continue;
        }
        let chain: usize = parse_meta(fields[0], "chain index")?;
        let values: Result<Vec<f64>, Failure> = fields[2..]
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| input(anyhow!("draws file: {e} in '{s}'"))))
            .collect();
        rows.push((chain, values?));
    }

    let names_vec = header.ok_or_else(|| input(anyhow!("draws file has no header")))?;
    let dim: usize = parse_meta(meta.get("dim").map_or("", |s| s), "dim")?;
    let chain_count: usize = parse_meta(meta.get("chains").map_or("", |s| s), "chains")?;
    let fixed_count: usize =
        parse_meta(meta.get("fixed_effects").map_or("", |s| s), "fixed_effects")?;
    if names_vec.len() != dim {
        return Err(input(anyhow!(
            "draws file: {} columns but dim = {dim}",
            names_vec.len()
        )));
    }

    let parse_list = |key: &str| -> Result<Vec<f64>, Failure> {
        match meta.get(key) {
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| input(anyhow!("'{key}': {e}"))))
                .collect(),
            None => Ok(vec![f64::NAN; chain_count]),
        }
    };

    let mut per_chain: Vec<Vec<f64>> = vec![Vec::new(); chain_count];
    for (chain, values) in rows {
        if chain >= chain_count || values.len() != dim {
            return Err(input(anyhow!("draws file: malformed row for chain {chain}")));
        }
        per_chain[chain].extend(values);
    }
    if per_chain.iter().any(Vec::is_empty) {
        return Err(input(anyhow!("draws file: a chain has no rows")));
    }

    let divergences: Vec<usize> = match meta.get("divergences") {
        Some(v) => v
            .split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|e| input(anyhow!("'divergences': {e}"))))
            .collect::<Result<_, _>>()?,
        None => vec![0; chain_count],
    };

    let chains = ChainSet {
        draws: per_chain.into_iter().map(|data| ChainDraws::from_flat(dim, data)).collect(),
        accept_rate: parse_list("accept_rate")?,
        step_size: parse_list("step_size")?,
        divergence_count: divergences,
        dim,
        warmup: parse_meta(meta.get("warmup").map_or("0", |s| s), "warmup").unwrap_or(0),
        seed: parse_meta(meta.get("seed").map_or("0", |s| s), "seed").unwrap_or(0),
    };
    Ok(DrawsFile { chains, names: ParameterNames { names: names_vec, fixed_count } })
}

pub fn cmd_diagnose(cfg: &RunConfig, draws_path: &Path) -> CmdResult {
    require_file(draws_path, "draws file")?;
    let text = std::fs::read_to_string(draws_path).map_err(input)?;
    let DrawsFile { chains, names } = parse_draws(&text)?;

    let summary = summarize_posterior(&chains, &names).map_err(numeric)?;
    let diagnostics = emit_diagnostics(&chains, &names).map_err(numeric)?;

    let mut comments = cfg.provenance();
    comments.push(("draws_file".into(), draws_path.display().to_string()));

    let out = &cfg.out_dir;
    write_file(&out.join("posterior_summary.tsv"), &render_summary_tsv(&summary, &comments))
        .map_err(input)?;
    write_file(&out.join("posterior_summary.txt"), &render_summary_table(&summary, &comments))
        .map_err(input)?;
    write_diagnostics(&out.join("diagnostics"), &diagnostics, &comments).map_err(input)?;

    // when the alpha block carries state names, rebuild the ladder too
    let alpha_names = &names.names[names.fixed_count..names.names.len().saturating_sub(1)];
    let roster: Vec<String> = alpha_names
        .iter()
        .filter_map(|n| n.strip_prefix("alpha_").map(str::to_string))
        .collect();
    if roster.len() == alpha_names.len() && !roster.is_empty() {
        let ladder = random_intercept_ladder(&summary, &roster).map_err(numeric)?;
        write_file(&out.join("random_intercepts.tsv"), &render_ladder_tsv(&ladder, &comments))
            .map_err(input)?;
    }

    println!(
        "diagnostics for {} parameters from {} chains x {} draws; max rhat {}; outputs in {}",
        chains.dim,
        chains.chain_count(),
        chains.retained(),
        sig6(summary.max_rhat().unwrap_or(f64::NAN)),
        out.display()
    );
    Ok(())
}
