//! `uptake cluster`: county rates to gap curve, assignments, and cluster
//! summaries.

use anyhow::anyhow;

use uptake_core::cluster::{
    agglomerate, build_state_features, cut_tree, feature_matrix, gap_statistic,
    summarize_clusters,
};
use uptake_core::survey::parse_county_rates;

use crate::commands::{classify_cluster, input, require_file, CmdResult};
use crate::config::RunConfig;
use crate::output::{
    render_assignments, render_cluster_summary, render_gap_curve, sig6, write_file,
};

pub fn cmd_cluster(cfg: &RunConfig) -> CmdResult {
    let path = cfg
        .county_file
        .as_ref()
        .ok_or_else(|| input(anyhow!("no county file: pass --county-file or set county_file")))?;
    require_file(path, "county file")?;
    let file = std::fs::File::open(path).map_err(input)?;
    let mut table = parse_county_rates(file).map_err(input)?;
    let excluded = table.retain_states(&cfg.roster);
    if table.entries.is_empty() {
        return Err(input(anyhow!("no county rows left after roster filtering")));
    }

    let features = build_state_features(&table).map_err(classify_cluster)?;
    let matrix = feature_matrix(&features);
    let states: Vec<String> = features.iter().map(|f| f.state.clone()).collect();

    let gap = gap_statistic(&matrix, cfg.linkage, cfg.k_max, cfg.gap_draws, cfg.seed)
        .map_err(classify_cluster)?;
    let dendrogram = agglomerate(&matrix, cfg.linkage).map_err(classify_cluster)?;
    let assignment = cut_tree(&dendrogram, gap.chosen_k).map_err(classify_cluster)?;
    let summary = summarize_clusters(&assignment, &states, &table).map_err(classify_cluster)?;

    let mut comments = cfg.provenance();
    comments.push(("county_file".into(), path.display().to_string()));
    comments.push(("linkage".into(), format!("{:?}", cfg.linkage).to_lowercase()));
    comments.push(("states".into(), states.len().to_string()));
    comments.push(("dropped_rows".into(), table.dropped_count.to_string()));
    comments.push(("excluded_out_of_roster_rows".into(), excluded.to_string()));
    if let Some(date) = &table.coverage_date {
        comments.push(("coverage_date".into(), date.clone()));
    }

    write_file(&cfg.out_dir.join("gap_curve.tsv"), &render_gap_curve(&gap, &comments))
        .map_err(input)?;
    write_file(
        &cfg.out_dir.join("cluster_assignments.tsv"),
        &render_assignments(&summary, &comments),
    )
    .map_err(input)?;
    write_file(
        &cfg.out_dir.join("cluster_summary.txt"),
        &render_cluster_summary(&summary, &comments),
    )
    .map_err(input)?;

    let means: Vec<String> =
        summary.clusters.iter().map(|c| sig6(c.pooled_mean)).collect();
    println!(
        "clustered {} states into k={} groups (pooled means: {}); outputs in {}",
        states.len(),
        gap.chosen_k,
        means.join(" / "),
        cfg.out_dir.display()
    );
    Ok(())
}
