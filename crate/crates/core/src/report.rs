//! Posterior summaries and convergence diagnostics over raw chains.
//!
//! Summaries pool post-warmup draws across chains; intervals are central
//! 95% empirical quantiles and odds ratios are the exponentiated estimates
//! of the fixed-effect block. Convergence is assessed with split R-hat
//! (each chain halved before comparing within- to between-chain variance)
//! and an autocorrelation-based effective sample size with Geyer's
//! initial-positive-sequence truncation.

use crate::hmc::{ChainDraws, ChainSet};
use crate::model::ParameterNames;
use crate::stats::{gaussian_kde, mean, quantile, sample_sd, sample_variance, DensityCurve};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("degenerate chain: zero variance")]
    DegenerateChain,
    #[error("need at least {needed} draws per chain, got {got}")]
    TooFewDraws { needed: usize, got: usize },
    #[error("{labels} parameter labels do not match draw dimension {dim}")]
    LabelMismatch { labels: usize, dim: usize },
    #[error("roster of {roster} states does not match {alphas} random intercepts")]
    RosterMismatch { roster: usize, alphas: usize },
    #[error("no chains or no retained draws")]
    EmptyChains,
}

/// Splits every chain in half (the middle draw of an odd-length chain is
/// dropped) and trims to a common half length.
fn split_halves(chains: &[Vec<f64>]) -> Result<Vec<&[f64]>, ReportError> {
    if chains.is_empty() {
        return Err(ReportError::EmptyChains);
    }
    let half = chains.iter().map(|c| c.len() / 2).min().unwrap_or(0);
    if half < 4 {
        let got = chains.iter().map(Vec::len).min().unwrap_or(0);
        return Err(ReportError::TooFewDraws { needed: 8, got });
    }
    let mut halves = Vec::with_capacity(2 * chains.len());
    for c in chains {
        halves.push(&c[..half]);
        halves.push(&c[c.len() - half..]);
    }
    Ok(halves)
}

fn all_draws_equal(chains: &[Vec<f64>]) -> bool {
    let first = chains.iter().flatten().next();
    match first {
        Some(&v) => chains.iter().flatten().all(|&x| x == v),
        None => true,
    }
}

/// Split-chain potential scale reduction factor.
///
/// With one chain the two halves are compared against each other. Errors
/// when the draws have zero total variance; returns infinity when the
/// within-chain variance alone vanishes.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64, ReportError> {
    let halves = split_halves(chains)?;
    if all_draws_equal(chains) {
        return Err(ReportError::DegenerateChain);
    }
    let n = halves[0].len() as f64;
    let m = halves.len() as f64;

    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let within: f64 = halves.iter().map(|h| sample_variance(h)).sum::<f64>() / m;
    let between = n * sample_variance(&means);

    let var_plus = (n - 1.0) / n * within + between / n;
    if var_plus == 0.0 {
        return Err(ReportError::DegenerateChain);
    }
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((var_plus / within).sqrt())
}

/// Autocorrelation-based effective sample size of the chains.
///
/// Lag autocovariances are averaged across chains and converted to combined
/// autocorrelations via the pooled variance estimate; the sum is truncated
/// at the first negative Geyer pair and the result clipped to
/// `[1, total draws]`.
pub fn effective_sample_size(chains: &[Vec<f64>]) -> Result<f64, ReportError> {
    if chains.is_empty() {
        return Err(ReportError::EmptyChains);
    }
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if n < 8 {
        return Err(ReportError::TooFewDraws { needed: 8, got: n });
    }
    if all_draws_equal(chains) {
        return Err(ReportError::DegenerateChain);
    }
    let total = chains.len() * n;
    let m = chains.len() as f64;
    let nf = n as f64;

    let means: Vec<f64> = chains.iter().map(|c| mean(&c[..n])).collect();
    let variances: Vec<f64> = chains.iter().map(|c| sample_variance(&c[..n])).collect();
    let within = variances.iter().sum::<f64>() / m;
    let var_plus = if chains.len() > 1 {
        let between = nf * sample_variance(&means);
        (nf - 1.0) / nf * within + between / nf
    } else {
        (nf - 1.0) / nf * within
    };
    if var_plus == 0.0 {
        return Err(ReportError::DegenerateChain);
    }

    // biased (1/n) autocovariance averaged over chains
    let acov = |lag: usize| -> f64 {
        chains
            .iter()
            .zip(&means)
            .map(|(c, &mu)| {
                (0..n - lag).map(|i| (c[i] - mu) * (c[i + lag] - mu)).sum::<f64>() / nf
            })
            .sum::<f64>()
            / m
    };
    let rho = |lag: usize| 1.0 - (within - acov(lag)) / var_plus;

    let mut tau = -rho(0);
    let mut lag = 0usize;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair < 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    let ess = total as f64 / tau.max(f64::MIN_POSITIVE);
    Ok(ess.clamp(1.0, total as f64))
}

/// Odds ratio for a change of `d` units in a predictor with coefficient
/// `beta`: `exp(d * beta)`.
pub fn odds_ratio(beta: f64, d: f64) -> f64 {
    (d * beta).exp()
}

/// One parameter's posterior summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `exp(mean)`, present for fixed effects only.
    pub odds_ratio: Option<f64>,
    /// NaN when the draws are degenerate.
    pub rhat: f64,
    /// NaN when the draws are degenerate.
    pub ess: f64,
}

/// Per-parameter summaries in flat parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub rows: Vec<ParameterSummary>,
    pub fixed_count: usize,
}

impl PosteriorSummary {
    /// Largest finite split R-hat across parameters.
    pub fn max_rhat(&self) -> Option<f64> {
        self.rows
            .iter()
            .map(|r| r.rhat)
            .filter(|r| r.is_finite())
            .max_by(|a, b| a.partial_cmp(b).unwrap())
    }
}

/// Pools post-warmup draws and summarizes every parameter: mean, sd,
/// central 95% interval, odds ratio for the fixed-effect block, split
/// R-hat, and effective sample size.
pub fn summarize_posterior(
    chains: &ChainSet,
    names: &ParameterNames,
) -> Result<PosteriorSummary, ReportError> {
    if chains.chain_count() == 0 || chains.retained() == 0 {
        return Err(ReportError::EmptyChains);
    }
    if names.names.len() != chains.dim {
        return Err(ReportError::LabelMismatch { labels: names.names.len(), dim: chains.dim });
    }

    let mut rows = Vec::with_capacity(chains.dim);
    for (p, name) in names.names.iter().enumerate() {
        let per_chain = chains.param_chains(p);
        let mut pooled = chains.pooled_param(p);
        pooled.sort_by(|a, b| a.partial_cmp(b).expect("non-finite draw"));
        let m = mean(&pooled);
        let rhat = match split_rhat(&per_chain) {
            Ok(r) => r,
            Err(ReportError::DegenerateChain) => f64::NAN,
            Err(e) => return Err(e),
        };
        let ess = match effective_sample_size(&per_chain) {
            Ok(e) => e,
            Err(ReportError::DegenerateChain) => f64::NAN,
            Err(e) => return Err(e),
        };
        rows.push(ParameterSummary {
            name: name.clone(),
            mean: m,
            sd: sample_sd(&pooled),
            ci_low: quantile(&pooled, 0.025),
            ci_high: quantile(&pooled, 0.975),
            odds_ratio: (p < names.fixed_count).then(|| m.exp()),
            rhat,
            ess,
        });
    }
    Ok(PosteriorSummary { rows, fixed_count: names.fixed_count })
}

/// One state's random-intercept estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderRow {
    pub state: String,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Random intercepts ordered from highest to lowest posterior mean.
pub fn random_intercept_ladder(
    summary: &PosteriorSummary,
    roster: &[String],
) -> Result<Vec<LadderRow>, ReportError> {
    let alphas = summary.rows.len().saturating_sub(summary.fixed_count + 1);
    if alphas != roster.len() {
        return Err(ReportError::RosterMismatch { roster: roster.len(), alphas });
    }
    let mut rows: Vec<LadderRow> = roster
        .iter()
        .zip(&summary.rows[summary.fixed_count..summary.fixed_count + alphas])
        .map(|(state, r)| LadderRow {
            state: state.clone(),
            mean: r.mean,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
        })
        .collect();
    rows.sort_by(|a, b| b.mean.partial_cmp(&a.mean).expect("non-finite mean"));
    Ok(rows)
}

/// Density representation for one parameter's pooled draws.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Curve(DensityCurve),
    /// All draws equal; a kernel density has no bandwidth to work with.
    PointMass(f64),
}

/// Plot-ready series of one parameter: per-chain thinned traces and a
/// pooled density.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDiagnostic {
    pub name: String,
    /// Per chain: (draw index, value) pairs, at most [`TRACE_POINTS`] each.
    pub traces: Vec<Vec<(usize, f64)>>,
    pub density: Density,
}

/// Diagnostic series for every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticSeries {
    pub params: Vec<ParameterDiagnostic>,
}

/// Maximum trace points kept per chain.
pub const TRACE_POINTS: usize = 1000;
/// Kernel-density grid resolution.
pub const DENSITY_GRID: usize = 256;

fn thin_trace(chain: &ChainDraws, p: usize) -> Vec<(usize, f64)> {
    let n = chain.n_draws();
    let stride = n.div_ceil(TRACE_POINTS).max(1);
    (0..n).step_by(stride).map(|i| (i, chain.row(i)[p])).collect()
}

/// Builds trace and density series for every parameter.
pub fn emit_diagnostics(
    chains: &ChainSet,
    names: &ParameterNames,
) -> Result<DiagnosticSeries, ReportError> {
    if chains.chain_count() == 0 || chains.retained() == 0 {
        return Err(ReportError::EmptyChains);
    }
    if names.names.len() != chains.dim {
        return Err(ReportError::LabelMismatch { labels: names.names.len(), dim: chains.dim });
    }
    let params = names
        .names
        .iter()
        .enumerate()
        .map(|(p, name)| {
            let traces = chains.draws.iter().map(|c| thin_trace(c, p)).collect();
            let pooled = chains.pooled_param(p);
            let density = match gaussian_kde(&pooled, DENSITY_GRID) {
                Some(curve) => Density::Curve(curve),
                None => Density::PointMass(pooled[0]),
            };
            ParameterDiagnostic { name: name.clone(), traces, density }
        })
        .collect();
    Ok(DiagnosticSeries { params })
}
