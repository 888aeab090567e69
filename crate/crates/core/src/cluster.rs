//! Grouping states by their county-level vaccination-rate distributions.
//!
//! Each state is reduced to an 11-dimensional summary of its county rates
//! (mean, sd, deciles 10%..90%), the columns are standardized across states,
//! and states are merged agglomeratively under Ward (default), complete, or
//! average linkage with Euclidean distances. The number of clusters is
//! chosen by the gap statistic against uniform reference draws over the
//! feature ranges, using the one-standard-error rule.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::report::Density;
use crate::rng::substream;
use crate::stats::{gaussian_kde, mean, quantile, sample_sd};
use crate::survey::CountyRateTable;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("need at least 2 items to cluster, got {0}")]
    TooFewItems(usize),
    #[error("feature vectors have inconsistent dimensions")]
    InconsistentDimensions,
    #[error("non-finite feature value")]
    NonFiniteFeature,
    #[error("degenerate features: all points identical")]
    DegenerateFeatures,
    #[error("cluster count {k} out of range 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("gap statistic needs at least 10 reference draws, got {0}")]
    TooFewReferences(usize),
    #[error("k_max {k_max} must be smaller than the item count {items}")]
    KMaxTooLarge { k_max: usize, items: usize },
    #[error("assignment length {assigned} does not cover the {items} items")]
    AssignmentMismatch { assigned: usize, items: usize },
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("state {0} has no county entries")]
    StateWithoutCounties(String),
}

/// Number of per-state summary features: mean, sd, deciles 10%..90%.
pub const FEATURE_DIM: usize = 11;

/// One state's standardized feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFeatures {
    pub state: String,
    pub values: [f64; FEATURE_DIM],
    pub county_count: usize,
}

/// Standardizes each column to zero mean and unit (sample) variance across
/// rows; columns with zero spread become all zeros.
pub fn standardize_columns(matrix: &mut [Vec<f64>]) {
    if matrix.is_empty() {
        return;
    }
    let dim = matrix[0].len();
    for col in 0..dim {
        let xs: Vec<f64> = matrix.iter().map(|row| row[col]).collect();
        let m = mean(&xs);
        let sd = sample_sd(&xs);
        for row in matrix.iter_mut() {
            row[col] = if sd > 0.0 { (row[col] - m) / sd } else { 0.0 };
        }
    }
}

/// Reduces the county table to one standardized 11-dimensional summary per
/// state (sorted by state code).
pub fn build_state_features(table: &CountyRateTable) -> Result<Vec<StateFeatures>, ClusterError> {
    let mut by_state: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for e in &table.entries {
        by_state.entry(e.state.as_str()).or_default().push(e.rate);
    }
    if let Some((state, _)) = by_state.iter().find(|(_, rates)| rates.is_empty()) {
        return Err(ClusterError::StateWithoutCounties(state.to_string()));
    }

    let mut states = Vec::with_capacity(by_state.len());
    let mut matrix: Vec<Vec<f64>> = Vec::with_capacity(by_state.len());
    let mut counts = Vec::with_capacity(by_state.len());
    for (state, mut rates) in by_state {
        rates.sort_by(|a, b| a.partial_cmp(b).expect("rates are finite"));
        let mut row = Vec::with_capacity(FEATURE_DIM);
        row.push(mean(&rates));
        row.push(sample_sd(&rates));
        for d in 1..=9 {
            row.push(quantile(&rates, d as f64 / 10.0));
        }
        states.push(state.to_string());
        counts.push(rates.len());
        matrix.push(row);
    }
    standardize_columns(&mut matrix);

    Ok(states
        .into_iter()
        .zip(matrix)
        .zip(counts)
        .map(|((state, row), county_count)| {
            let mut values = [0.0; FEATURE_DIM];
            values.copy_from_slice(&row);
            StateFeatures { state, values, county_count }
        })
        .collect())
}

/// Feature rows in the same order as the input collection.
pub fn feature_matrix(features: &[StateFeatures]) -> Vec<Vec<f64>> {
    features.iter().map(|f| f.values.to_vec()).collect()
}

/// Cluster-distance update rule for agglomeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    Ward,
    Complete,
    Average,
}

impl std::str::FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ward" => Ok(Linkage::Ward),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(format!("unknown linkage '{other}' (ward|complete|average)")),
        }
    }
}

/// One agglomeration step. `a` and `b` are cluster ids: leaves are
/// `0..n`, the cluster created by merge `m` has id `n + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

/// The stepwise merge tree of an agglomerative clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
    pub leaf_count: usize,
    /// Left-to-right leaf ordering from a depth-first walk of the tree.
    pub leaf_order: Vec<usize>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Agglomerative clustering by Lance-Williams updates over Euclidean
/// distances. For Ward linkage the tracked dissimilarity is kept in the
/// squared domain and reported heights are its square root, so a singleton
/// pair merges at its plain Euclidean distance under every linkage. Ties
/// break toward the lowest pair of cluster ids.
pub fn agglomerate(points: &[Vec<f64>], linkage: Linkage) -> Result<Dendrogram, ClusterError> {
    let n = points.len();
    if n < 2 {
        return Err(ClusterError::TooFewItems(n));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(ClusterError::InconsistentDimensions);
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(ClusterError::NonFiniteFeature);
    }

    let total_ids = 2 * n - 1;
    let mut dist = vec![vec![f64::INFINITY; total_ids]; total_ids];
    for i in 0..n {
        for j in (i + 1)..n {
            let d2 = squared_distance(&points[i], &points[j]);
            dist[i][j] = match linkage {
                Linkage::Ward => d2,
                Linkage::Complete | Linkage::Average => d2.sqrt(),
            };
        }
    }

    let mut active: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; total_ids];
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best = (usize::MAX, usize::MAX);
        let mut best_d = f64::INFINITY;
        for (ai, &i) in active.iter().enumerate() {
            for &j in &active[ai + 1..] {
                let d = dist[i.min(j)][i.max(j)];
                if d < best_d {
                    best_d = d;
                    best = (i.min(j), i.max(j));
                }
            }
        }
        let (i, j) = best;
        let new_id = n + step;
        let (ni, nj) = (size[i] as f64, size[j] as f64);

        for &m in &active {
            if m == i || m == j {
                continue;
            }
            let dim_ = dist[i.min(m)][i.max(m)];
            let djm = dist[j.min(m)][j.max(m)];
            let updated = match linkage {
                Linkage::Ward => {
                    let nm = size[m] as f64;
                    ((ni + nm) * dim_ + (nj + nm) * djm - nm * best_d) / (ni + nj + nm)
                }
                Linkage::Complete => dim_.max(djm),
                Linkage::Average => (ni * dim_ + nj * djm) / (ni + nj),
            };
            dist[m.min(new_id)][m.max(new_id)] = updated;
        }

        size[new_id] = size[i] + size[j];
        active.retain(|&c| c != i && c != j);
        active.push(new_id);
        let height = match linkage {
            Linkage::Ward => best_d.sqrt(),
            Linkage::Complete | Linkage::Average => best_d,
        };
        merges.push(Merge { a: i, b: j, height, size: size[new_id] });
    }

    let mut leaf_order = Vec::with_capacity(n);
    let mut stack = vec![total_ids - 1];
    while let Some(id) = stack.pop() {
        if id < n {
            leaf_order.push(id);
        } else {
            let m = &merges[id - n];
            stack.push(m.b);
            stack.push(m.a);
        }
    }

    Ok(Dendrogram { merges, leaf_count: n, leaf_order })
}

/// Partition obtained by undoing the last `k - 1` merges.
///
/// Labels are `0..k`, assigned in order of each cluster's smallest leaf
/// index, so the result is independent of merge bookkeeping.
pub fn cut_tree(dendrogram: &Dendrogram, k: usize) -> Result<Vec<usize>, ClusterError> {
    let n = dendrogram.leaf_count;
    if k == 0 || k > n {
        return Err(ClusterError::KOutOfRange { k, max: n });
    }

    // leaves under every internal node
    let mut node_leaves: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for m in &dendrogram.merges {
        let mut leaves = node_leaves[m.a].clone();
        leaves.extend_from_slice(&node_leaves[m.b]);
        node_leaves.push(leaves);
    }

    let mut assignment: Vec<usize> = (0..n).collect();
    for (t, _) in dendrogram.merges.iter().enumerate().take(n - k) {
        for &leaf in &node_leaves[n + t] {
            assignment[leaf] = n + t;
        }
    }

    // compress to 0..k in order of smallest member index
    let mut label_of = BTreeMap::new();
    let mut next = 0usize;
    for a in assignment.iter_mut() {
        let label = *label_of.entry(*a).or_insert_with(|| {
            let l = next;
            next += 1;
            l
        });
        *a = label;
    }
    debug_assert_eq!(next, k);
    Ok(assignment)
}

/// Renumbers cluster labels so cluster 0 has the lowest mean `score` and so
/// on upward. `scores` is per item.
pub fn relabel_by_ascending_mean(assignment: &[usize], scores: &[f64]) -> Vec<usize> {
    let k = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&a, &s) in assignment.iter().zip(scores) {
        sums[a] += s;
        counts[a] += 1;
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| {
        let mx = sums[x] / counts[x].max(1) as f64;
        let my = sums[y] / counts[y].max(1) as f64;
        mx.partial_cmp(&my).expect("finite scores")
    });
    let mut new_label = vec![0usize; k];
    for (rank, &old) in order.iter().enumerate() {
        new_label[old] = rank;
    }
    assignment.iter().map(|&a| new_label[a]).collect()
}

/// Within-cluster dispersion: for each cluster the sum of squared pairwise
/// distances over ordered pairs divided by twice the cluster size, summed
/// over clusters (equivalently the pooled within-cluster sum of squares).
pub fn within_dispersion(points: &[Vec<f64>], assignment: &[usize]) -> f64 {
    let k = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut total = 0.0;
    for cluster in 0..k {
        let members: Vec<usize> =
            (0..points.len()).filter(|&i| assignment[i] == cluster).collect();
        if members.is_empty() {
            continue;
        }
        let mut pair_sum = 0.0;
        for (ai, &i) in members.iter().enumerate() {
            for &j in &members[ai + 1..] {
                pair_sum += squared_distance(&points[i], &points[j]);
            }
        }
        // ordered pairs count both directions
        total += 2.0 * pair_sum / (2.0 * members.len() as f64);
    }
    total
}

/// Gap curve entry for one candidate cluster count.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub k: usize,
    /// `mean_b log W*_kb - log W_k`.
    pub gap: f64,
    /// Reference dispersion mean `mean_b log W*_kb`.
    pub ref_log_w_mean: f64,
    /// Simulation standard error `sd_b(log W*_kb) * sqrt(1 + 1/B)`.
    pub se: f64,
    /// Observed `log W_k`.
    pub log_w: f64,
}

/// Gap curve plus the selected cluster count.
#[derive(Debug, Clone, PartialEq)]
pub struct GapResult {
    pub rows: Vec<GapRow>,
    pub chosen_k: usize,
}

/// Gap statistic over `1..=k_max` with `b_refs` uniform reference draws
/// spanning the observed per-column range. `chosen_k` is the smallest `k`
/// with `Gap(k) >= Gap(k+1) - s_{k+1}` (one-standard-error rule), falling
/// back to `k_max`. Deterministic for a fixed seed; reference draws run in
/// parallel.
pub fn gap_statistic(
    points: &[Vec<f64>],
    linkage: Linkage,
    k_max: usize,
    b_refs: usize,
    seed: u64,
) -> Result<GapResult, ClusterError> {
    let n = points.len();
    if n < 2 {
        return Err(ClusterError::TooFewItems(n));
    }
    if k_max >= n {
        return Err(ClusterError::KMaxTooLarge { k_max, items: n });
    }
    if k_max == 0 {
        return Err(ClusterError::KOutOfRange { k: 0, max: n - 1 });
    }
    if b_refs < 10 {
        return Err(ClusterError::TooFewReferences(b_refs));
    }

    let dim = points[0].len();
    let identical = points.iter().all(|p| p == &points[0]);
    if identical {
        return Err(ClusterError::DegenerateFeatures);
    }

    let log_w_curve = |pts: &[Vec<f64>]| -> Result<Vec<f64>, ClusterError> {
        let dendro = agglomerate(pts, linkage)?;
        (1..=k_max)
            .map(|k| {
                let assignment = cut_tree(&dendro, k)?;
                Ok(within_dispersion(pts, &assignment).ln())
            })
            .collect()
    };
    let observed = log_w_curve(points)?;

    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in points {
        for d in 0..dim {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }

    let reference_curves: Result<Vec<Vec<f64>>, ClusterError> = (0..b_refs)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, "gap-ref", b as u64);
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    (0..dim)
                        .map(|d| {
                            if hi[d] > lo[d] {
                                rng.random_range(lo[d]..hi[d])
                            } else {
                                lo[d]
                            }
                        })
                        .collect()
                })
                .collect();
            log_w_curve(&pts)
        })
        .collect();
    let reference_curves = reference_curves?;

    let mut rows = Vec::with_capacity(k_max);
    for (idx, k) in (1..=k_max).enumerate() {
        let ref_logs: Vec<f64> = reference_curves.iter().map(|c| c[idx]).collect();
        let ref_mean = mean(&ref_logs);
        // population sd over the B reference draws, inflated by sqrt(1 + 1/B)
        let var =
            ref_logs.iter().map(|x| (x - ref_mean) * (x - ref_mean)).sum::<f64>() / b_refs as f64;
        let se = (var * (1.0 + 1.0 / b_refs as f64)).sqrt();
        rows.push(GapRow {
            k,
            gap: ref_mean - observed[idx],
            ref_log_w_mean: ref_mean,
            se,
            log_w: observed[idx],
        });
    }

    let mut chosen_k = k_max;
    for i in 0..rows.len() - 1 {
        if rows[i].gap >= rows[i + 1].gap - rows[i + 1].se {
            chosen_k = rows[i].k;
            break;
        }
    }
    Ok(GapResult { rows, chosen_k })
}

/// One cluster's membership and pooled county-rate statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterBand {
    /// 1-based label after ordering clusters by ascending pooled mean.
    pub label: usize,
    pub members: Vec<String>,
    pub pooled_mean: f64,
    pub pooled_sd: f64,
    /// Kernel density of member counties' rates.
    pub density: Density,
}

/// Clusters ordered by ascending pooled mean rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    pub clusters: Vec<ClusterBand>,
}

impl ClusterSummary {
    /// (state, 1-based cluster label) pairs covering every member.
    pub fn assignments(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = self
            .clusters
            .iter()
            .flat_map(|c| c.members.iter().map(|s| (s.clone(), c.label)))
            .collect();
        out.sort();
        out
    }
}

/// Pools the county rates of each cluster's member states and summarizes
/// them; clusters come back ordered (and labeled) by ascending pooled mean.
pub fn summarize_clusters(
    assignment: &[usize],
    states: &[String],
    table: &CountyRateTable,
) -> Result<ClusterSummary, ClusterError> {
    if assignment.len() != states.len() {
        return Err(ClusterError::AssignmentMismatch {
            assigned: assignment.len(),
            items: states.len(),
        });
    }
    let k = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut rates_by_state: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for e in &table.entries {
        rates_by_state.entry(e.state.as_str()).or_default().push(e.rate);
    }

    let mut bands = Vec::with_capacity(k);
    for cluster in 0..k {
        let mut members: Vec<String> = states
            .iter()
            .zip(assignment)
            .filter(|(_, &a)| a == cluster)
            .map(|(s, _)| s.clone())
            .collect();
        if members.is_empty() {
            return Err(ClusterError::EmptyCluster(cluster));
        }
        members.sort();
        let mut pooled: Vec<f64> = Vec::new();
        for state in &members {
            match rates_by_state.get(state.as_str()) {
                Some(rates) => pooled.extend_from_slice(rates),
                None => return Err(ClusterError::StateWithoutCounties(state.clone())),
            }
        }
        let density = match gaussian_kde(&pooled, crate::report::DENSITY_GRID) {
            Some(curve) => Density::Curve(curve),
            None => Density::PointMass(pooled[0]),
        };
        bands.push(ClusterBand {
            label: 0,
            members,
            pooled_mean: mean(&pooled),
            pooled_sd: sample_sd(&pooled),
            density,
        });
    }
    bands.sort_by(|a, b| a.pooled_mean.partial_cmp(&b.pooled_mean).expect("finite means"));
    for (i, band) in bands.iter_mut().enumerate() {
        band.label = i + 1;
    }
    Ok(ClusterSummary { clusters: bands })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survey::parse_county_rates;

    fn table_from(text: &str) -> CountyRateTable {
        parse_county_rates(text.as_bytes()).unwrap()
    }

    #[test]
    fn single_county_state_features() {
        let t = table_from("state,county,rate_percent\nVT,Lamoille,60\n");
        // pre-standardization values checked via the raw summaries: rebuild
        // by hand since a single state standardizes to zeros
        let f = build_state_features(&t).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].county_count, 1);
        assert_eq!(f[0].values, [0.0; FEATURE_DIM]);
    }

    #[test]
    fn features_are_deterministic_and_standardized() {
        let text = "state,county,rate_percent\n\
                    MA,a,80\nMA,b,90\nMA,c,85\n\
                    TX,d,55\nTX,e,65\n\
                    VT,f,70\nVT,g,75\nVT,h,72\n";
        let t = table_from(text);
        let f1 = build_state_features(&t).unwrap();
        let f2 = build_state_features(&t).unwrap();
        assert_eq!(f1, f2);
        let matrix = feature_matrix(&f1);
        for col in 0..FEATURE_DIM {
            let xs: Vec<f64> = matrix.iter().map(|r| r[col]).collect();
            assert!(mean(&xs).abs() < 1e-10, "col {col} mean");
            let sd = sample_sd(&xs);
            assert!(sd == 0.0 || (sd - 1.0).abs() < 1e-10, "col {col} sd {sd}");
        }
    }

    #[test]
    fn two_items_merge_at_their_distance() {
        let points = vec![vec![0.0, 0.0], vec![3.0, 4.0]];
        for linkage in [Linkage::Ward, Linkage::Complete, Linkage::Average] {
            let d = agglomerate(&points, linkage).unwrap();
            assert_eq!(d.merges.len(), 1);
            assert!((d.merges[0].height - 5.0).abs() < 1e-12, "{linkage:?}");
            assert_eq!(d.merges[0].size, 2);
        }
    }

    #[test]
    fn tight_pairs_merge_first() {
        // two tight pairs far apart; the offsets are exactly representable,
        // so the intra-pair distances tie and the lowest pair must win
        let points = vec![
            vec![0.0, 0.0],
            vec![0.125, 0.0],
            vec![10.0, 10.0],
            vec![10.125, 10.0],
        ];
        for linkage in [Linkage::Ward, Linkage::Complete, Linkage::Average] {
            let d = agglomerate(&points, linkage).unwrap();
            assert_eq!((d.merges[0].a, d.merges[0].b), (0, 1), "{linkage:?}");
            assert_eq!((d.merges[1].a, d.merges[1].b), (2, 3), "{linkage:?}");
            let cut = cut_tree(&d, 2).unwrap();
            assert_eq!(cut, vec![0, 0, 1, 1], "{linkage:?}");
        }
    }

    #[test]
    fn too_few_items_errors() {
        assert!(matches!(
            agglomerate(&[vec![1.0]], Linkage::Ward),
            Err(ClusterError::TooFewItems(1))
        ));
    }

    #[test]
    fn cut_tree_extremes() {
        let points: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 * i as f64]).collect();
        let d = agglomerate(&points, Linkage::Ward).unwrap();
        assert_eq!(cut_tree(&d, 1).unwrap(), vec![0; 6]);
        assert_eq!(cut_tree(&d, 6).unwrap(), vec![0, 1, 2, 3, 4, 5]);
        assert!(matches!(cut_tree(&d, 0), Err(ClusterError::KOutOfRange { .. })));
        assert!(matches!(cut_tree(&d, 7), Err(ClusterError::KOutOfRange { .. })));
    }

    #[test]
    fn cut_tree_is_a_partition() {
        let mut rng = substream(31, "cut-partition", 0);
        let points: Vec<Vec<f64>> =
            (0..12).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let d = agglomerate(&points, Linkage::Ward).unwrap();
        for k in 1..=12 {
            let cut = cut_tree(&d, k).unwrap();
            assert_eq!(cut.len(), 12);
            let mut seen = vec![0usize; k];
            for &a in &cut {
                assert!(a < k);
                seen[a] += 1;
            }
            assert!(seen.iter().all(|&c| c > 0), "k={k}: empty label");
        }
    }

    #[test]
    fn ward_heights_nondecreasing_on_random_data() {
        let mut rng = substream(32, "ward-monotone", 0);
        for trial in 0..20 {
            let n = rng.random_range(3..15);
            let points: Vec<Vec<f64>> =
                (0..n).map(|_| (0..4).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
            let d = agglomerate(&points, Linkage::Ward).unwrap();
            for w in d.merges.windows(2) {
                assert!(w[1].height >= w[0].height - 1e-12, "trial {trial}");
            }
        }
    }

    #[test]
    fn leaf_order_is_a_permutation() {
        let mut rng = substream(33, "leaf-order", 0);
        let points: Vec<Vec<f64>> =
            (0..9).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
        let d = agglomerate(&points, Linkage::Average).unwrap();
        let mut order = d.leaf_order.clone();
        order.sort_unstable();
        assert_eq!(order, (0..9).collect::<Vec<_>>());
    }

    // Exhaustive oracle: recompute every cluster pair's dissimilarity from
    // member points at each step and merge the nearest pair.
    fn oracle_agglomerate(points: &[Vec<f64>], linkage: Linkage) -> Vec<(usize, usize, f64)> {
        let n = points.len();
        let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
        let mut next_id = n;
        let mut merges = Vec::new();
        let dissim = |a: &[usize], b: &[usize]| -> f64 {
            match linkage {
                Linkage::Ward => {
                    let centroid = |ms: &[usize]| -> Vec<f64> {
                        let mut c = vec![0.0; points[0].len()];
                        for &m in ms {
                            for (cd, xd) in c.iter_mut().zip(&points[m]) {
                                *cd += xd;
                            }
                        }
                        c.iter().map(|x| x / ms.len() as f64).collect()
                    };
                    let (na, nb) = (a.len() as f64, b.len() as f64);
                    2.0 * na * nb / (na + nb) * squared_distance(&centroid(a), &centroid(b))
                }
                Linkage::Complete => a
                    .iter()
                    .flat_map(|&i| b.iter().map(move |&j| squared_distance(&points[i], &points[j]).sqrt()))
                    .fold(0.0, f64::max),
                Linkage::Average => {
                    let total: f64 = a
                        .iter()
                        .flat_map(|&i| {
                            b.iter().map(move |&j| squared_distance(&points[i], &points[j]).sqrt())
                        })
                        .sum();
                    total / (a.len() * b.len()) as f64
                }
            }
        };
        while clusters.len() > 1 {
            let mut best = (0usize, 1usize);
            let mut best_d = f64::INFINITY;
            for x in 0..clusters.len() {
                for y in (x + 1)..clusters.len() {
                    let (i, j) = if clusters[x].0 < clusters[y].0 { (x, y) } else { (y, x) };
                    let d = dissim(&clusters[i].1, &clusters[j].1);
                    if d < best_d {
                        best_d = d;
                        best = (i, j);
                    }
                }
            }
            let (x, y) = (best.0.min(best.1), best.0.max(best.1));
            let (id_b, members_b) = clusters.remove(y);
            let (id_a, members_a) = clusters.remove(x);
            let height = match linkage {
                Linkage::Ward => best_d.sqrt(),
                _ => best_d,
            };
            merges.push((id_a.min(id_b), id_a.max(id_b), height));
            let mut members = members_a;
            members.extend(members_b);
            clusters.push((next_id, members));
            next_id += 1;
        }
        merges
    }

    #[test]
    fn agglomeration_matches_exhaustive_oracle() {
        let mut rng = substream(34, "oracle", 0);
        for trial in 0..60 {
            let n = rng.random_range(3..=8);
            let dim = rng.random_range(1..4);
            let points: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
                .collect();
            for linkage in [Linkage::Ward, Linkage::Complete, Linkage::Average] {
                let fast = agglomerate(&points, linkage).unwrap();
                let slow = oracle_agglomerate(&points, linkage);
                for (m, (a, b, h)) in fast.merges.iter().zip(&slow) {
                    assert_eq!((m.a, m.b), (*a, *b), "trial {trial} {linkage:?}");
                    assert!(
                        (m.height - h).abs() <= 1e-9 * h.abs().max(1.0),
                        "trial {trial} {linkage:?}: {} vs {h}",
                        m.height
                    );
                }
            }
        }
    }

    fn blobs(seed: u64, centers: &[Vec<f64>], per_blob: &[usize], sd: f64) -> Vec<Vec<f64>> {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = substream(seed, "blobs", 0);
        let mut pts = Vec::new();
        for (c, &count) in centers.iter().zip(per_blob) {
            for _ in 0..count {
                pts.push(
                    c.iter()
                        .map(|&x| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            x + sd * z
                        })
                        .collect(),
                );
            }
        }
        pts
    }

    #[test]
    fn gap_statistic_finds_three_blobs() {
        let mut c1 = vec![0.0; FEATURE_DIM];
        let mut c2 = vec![0.0; FEATURE_DIM];
        c1[0] = 8.0;
        c2[1] = 8.0;
        let centers = vec![vec![0.0; FEATURE_DIM], c1, c2];
        for seed in [1, 2, 3] {
            let pts = blobs(seed, &centers, &[17, 16, 16], 1.0);
            let gap = gap_statistic(&pts, Linkage::Ward, 8, 50, seed).unwrap();
            assert_eq!(gap.chosen_k, 3, "seed {seed}");
            assert!(gap.rows.iter().all(|r| r.se >= 0.0));
        }
    }

    #[test]
    fn gap_statistic_single_blob_chooses_one() {
        let centers = vec![vec![0.0; FEATURE_DIM]];
        for seed in [4, 5, 6] {
            let pts = blobs(seed, &centers, &[49], 1.0);
            let gap = gap_statistic(&pts, Linkage::Ward, 8, 50, seed).unwrap();
            assert_eq!(gap.chosen_k, 1, "seed {seed}");
        }
    }

    #[test]
    fn gap_statistic_is_deterministic() {
        let pts = blobs(7, &[vec![0.0; 4], vec![6.0, 6.0, 0.0, 0.0]], &[10, 10], 0.8);
        let a = gap_statistic(&pts, Linkage::Ward, 5, 20, 99).unwrap();
        let b = gap_statistic(&pts, Linkage::Ward, 5, 20, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gap_statistic_preconditions() {
        let pts = blobs(8, &[vec![0.0; 3]], &[12], 1.0);
        assert!(matches!(
            gap_statistic(&pts, Linkage::Ward, 12, 20, 1),
            Err(ClusterError::KMaxTooLarge { .. })
        ));
        assert!(matches!(
            gap_statistic(&pts, Linkage::Ward, 4, 5, 1),
            Err(ClusterError::TooFewReferences(5))
        ));
        let identical = vec![vec![1.0, 2.0]; 10];
        assert!(matches!(
            gap_statistic(&identical, Linkage::Ward, 3, 20, 1),
            Err(ClusterError::DegenerateFeatures)
        ));
    }

    #[test]
    fn relabel_orders_by_mean_score() {
        let assignment = vec![0, 0, 1, 1, 2];
        let scores = vec![90.0, 92.0, 50.0, 52.0, 70.0];
        let relabeled = relabel_by_ascending_mean(&assignment, &scores);
        // cluster with mean 51 -> 0, mean 70 -> 1, mean 91 -> 2
        assert_eq!(relabeled, vec![2, 2, 0, 0, 1]);
    }

    #[test]
    fn summarize_single_cluster_matches_grand_mean() {
        let t = table_from("state,county,rate_percent\nMA,a,80\nMA,b,90\nTX,c,55\n");
        let states = vec!["MA".to_string(), "TX".to_string()];
        let s = summarize_clusters(&[0, 0], &states, &t).unwrap();
        assert_eq!(s.clusters.len(), 1);
        assert!((s.clusters[0].pooled_mean - 75.0).abs() < 1e-12);
        assert_eq!(s.clusters[0].label, 1);
    }

    #[test]
    fn summarize_two_counties_hand_values() {
        let t = table_from("state,county,rate_percent\nMA,a,60\nMA,b,70\nTX,c,50\n");
        let states = vec!["MA".to_string(), "TX".to_string()];
        let s = summarize_clusters(&[1, 0], &states, &t).unwrap();
        // TX (mean 50) sorts first, MA second
        assert_eq!(s.clusters[0].members, vec!["TX".to_string()]);
        let ma = &s.clusters[1];
        assert!((ma.pooled_mean - 65.0).abs() < 1e-12);
        assert!((ma.pooled_sd - 7.0711).abs() < 5e-4);
        assert_eq!(s.assignments(), vec![("MA".to_string(), 2), ("TX".to_string(), 1)]);
    }

    #[test]
    fn summarize_rejects_mismatch() {
        let t = table_from("state,county,rate_percent\nMA,a,80\n");
        let states = vec!["MA".to_string()];
        assert!(matches!(
            summarize_clusters(&[0, 1], &states, &t),
            Err(ClusterError::AssignmentMismatch { .. })
        ));
    }
}
