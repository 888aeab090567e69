//! Artifact writers. Machine files are tab-separated with full-precision
//! numbers (shortest round-trip form); human tables round to six
//! significant digits. Every file starts with `# key: value` provenance
//! comments, and nothing time-dependent is ever written, so identical runs
//! produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

use uptake_core::cluster::{ClusterSummary, GapResult};
use uptake_core::hmc::ChainSet;
use uptake_core::model::{ParameterNames, FIXED_EFFECT_CONTRASTS};
use uptake_core::report::{Density, DiagnosticSeries, LadderRow, PosteriorSummary};

/// Rounds to six significant digits for human-readable tables.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.00000".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let dec = (5 - mag).max(0) as usize;
    format!("{x:.dec$}")
}

/// Full-precision text: parses back to the same f64.
pub fn full(x: f64) -> String {
    format!("{x}")
}

fn comment_block(comments: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in comments {
        let _ = writeln!(s, "# {k}: {v}");
    }
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create directory {}", parent.display()))?;
    }
    let mut f = fs::File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    f.write_all(contents.as_bytes())
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn opt(or: Option<f64>, f: impl Fn(f64) -> String) -> String {
    or.map(f).unwrap_or_default()
}

/// Machine-readable posterior summary, one record per parameter.
pub fn render_summary_tsv(
    summary: &PosteriorSummary,
    comments: &[(String, String)],
) -> String {
    let mut s = comment_block(comments);
    s.push_str("name\testimate\tsd\tci_low\tci_high\todds_ratio\trhat\tess\n");
    for r in &summary.rows {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.name,
            full(r.mean),
            full(r.sd),
            full(r.ci_low),
            full(r.ci_high),
            opt(r.odds_ratio, full),
            full(r.rhat),
            full(r.ess),
        );
    }
    s
}

/// Aligned human-readable posterior table with contrast descriptions for
/// the fixed-effect block.
pub fn render_summary_table(
    summary: &PosteriorSummary,
    comments: &[(String, String)],
) -> String {
    let mut rows: Vec<[String; 6]> = Vec::with_capacity(summary.rows.len() + 1);
    rows.push([
        "parameter".into(),
        "estimate (95% CI)".into(),
        "odds ratio".into(),
        "rhat".into(),
        "ess".into(),
        "contrast".into(),
    ]);
    for (i, r) in summary.rows.iter().enumerate() {
        let contrast = if i < summary.fixed_count { FIXED_EFFECT_CONTRASTS[i] } else { "" };
        rows.push([
            r.name.clone(),
            format!("{} ({}, {})", sig6(r.mean), sig6(r.ci_low), sig6(r.ci_high)),
            opt(r.odds_ratio, sig6),
            sig6(r.rhat),
            sig6(r.ess),
            contrast.to_string(),
        ]);
    }
    let mut widths = [0usize; 6];
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut s = comment_block(comments);
    for row in &rows {
        let mut line = String::new();
        for (w, cell) in widths.iter().zip(row) {
            let _ = write!(line, "{cell:<w$}  ");
        }
        let _ = writeln!(s, "{}", line.trim_end());
    }
    s
}

pub fn render_ladder_tsv(ladder: &[LadderRow], comments: &[(String, String)]) -> String {
    let mut s = comment_block(comments);
    s.push_str("state\tmean\tci_low\tci_high\n");
    for row in ladder {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}",
            row.state,
            full(row.mean),
            full(row.ci_low),
            full(row.ci_high)
        );
    }
    s
}

/// One diagnostics file per parameter: a trace section per chain followed
/// by the density section.
pub fn write_diagnostics(
    dir: &Path,
    series: &DiagnosticSeries,
    comments: &[(String, String)],
) -> Result<()> {
    for param in &series.params {
        let mut s = comment_block(comments);
        let _ = writeln!(s, "# parameter: {}", param.name);
        for (chain, trace) in param.traces.iter().enumerate() {
            let _ = writeln!(s, "[trace chain={chain}]");
            s.push_str("draw\tvalue\n");
            for (i, v) in trace {
                let _ = writeln!(s, "{i}\t{}", full(*v));
            }
        }
        match &param.density {
            Density::Curve(curve) => {
                let _ = writeln!(s, "[density bandwidth={}]", full(curve.bandwidth));
                s.push_str("x\tdensity\n");
                for (x, d) in &curve.points {
                    let _ = writeln!(s, "{}\t{}", full(*x), full(*d));
                }
            }
            Density::PointMass(v) => {
                let _ = writeln!(s, "[density point_mass={}]", full(*v));
            }
        }
        write_file(&dir.join(format!("{}.txt", param.name)), &s)?;
    }
    Ok(())
}

pub fn render_gap_curve(gap: &GapResult, comments: &[(String, String)]) -> String {
    let mut s = comment_block(comments);
    let _ = writeln!(s, "# chosen_k: {}", gap.chosen_k);
    s.push_str("k\tgap\tse\tref_log_w_mean\tlog_w\n");
    for row in &gap.rows {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}",
            row.k,
            full(row.gap),
            full(row.se),
            full(row.ref_log_w_mean),
            full(row.log_w)
        );
    }
    s
}

pub fn render_assignments(summary: &ClusterSummary, comments: &[(String, String)]) -> String {
    let mut s = comment_block(comments);
    s.push_str("state\tcluster\n");
    for (state, label) in summary.assignments() {
        let _ = writeln!(s, "{state}\t{label}");
    }
    s
}

pub fn render_cluster_summary(
    summary: &ClusterSummary,
    comments: &[(String, String)],
) -> String {
    let mut s = comment_block(comments);
    for band in &summary.clusters {
        let _ = writeln!(
            s,
            "[cluster {} mean={} sd={} states={}]",
            band.label,
            sig6(band.pooled_mean),
            sig6(band.pooled_sd),
            band.members.len()
        );
        let _ = writeln!(s, "members\t{}", band.members.join(","));
        match &band.density {
            Density::Curve(curve) => {
                s.push_str("rate\tdensity\n");
                for (x, d) in &curve.points {
                    let _ = writeln!(s, "{}\t{}", full(*x), full(*d));
                }
            }
            Density::PointMass(v) => {
                let _ = writeln!(s, "point_mass\t{}", full(*v));
            }
        }
    }
    s
}

/// Raw draws in a self-describing table the `diagnose` subcommand can read
/// back.
pub fn render_draws(
    chains: &ChainSet,
    names: &ParameterNames,
    comments: &[(String, String)],
) -> String {
    let join = |xs: &[f64]| xs.iter().map(|x| full(*x)).collect::<Vec<_>>().join(",");
    let mut s = comment_block(comments);
    let _ = writeln!(s, "# chains: {}", chains.chain_count());
    let _ = writeln!(s, "# retained: {}", chains.retained());
    let _ = writeln!(s, "# warmup: {}", chains.warmup);
    let _ = writeln!(s, "# dim: {}", chains.dim);
    let _ = writeln!(s, "# fixed_effects: {}", names.fixed_count);
    let _ = writeln!(s, "# accept_rate: {}", join(&chains.accept_rate));
    let _ = writeln!(s, "# step_size: {}", join(&chains.step_size));
    let _ = writeln!(
        s,
        "# divergences: {}",
        chains.divergence_count.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
    );
    let _ = writeln!(s, "chain\tdraw\t{}", names.names.join("\t"));
    for (c, draws) in chains.draws.iter().enumerate() {
        for i in 0..draws.n_draws() {
            let row = draws.row(i).iter().map(|x| full(*x)).collect::<Vec<_>>().join("\t");
            let _ = writeln!(s, "{c}\t{i}\t{row}");
        }
    }
    s
}
