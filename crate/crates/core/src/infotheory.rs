//! Entropy and mutual-information estimates for selection processes.
//!
//! All quantities are in nats.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::ensemble::{NoiseKind, ReplicationBatch, StatisticEnsemble};
use crate::error::{input, Result};
use crate::stats;

/// Bias correction applied to plug-in entropies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    #[default]
    None,
    /// Adds `(support_size - 1) / (2R)`.
    MillerMadow,
}

/// `-sum p_hat ln p_hat` over the nonzero cells of a histogram.
pub fn plugin_entropy(counts: &[u64], correction: Correction) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return input("entropy of an empty histogram");
    }
    let n = total as f64;
    let mut h = 0.0;
    let mut support = 0usize;
    for &c in counts.iter().filter(|&&c| c > 0) {
        let p = c as f64 / n;
        h -= p * p.ln();
        support += 1;
    }
    if correction == Correction::MillerMadow {
        h += (support as f64 - 1.0) / (2.0 * n);
    }
    Ok(h.max(0.0))
}

fn label_counts<T: Hash + Eq>(labels: impl IntoIterator<Item = T>) -> Vec<u64> {
    let mut map: HashMap<T, u64> = HashMap::new();
    for l in labels {
        *map.entry(l).or_insert(0) += 1;
    }
    let mut counts: Vec<u64> = map.into_values().collect();
    // summation order must not depend on hash iteration order
    counts.sort_unstable();
    counts
}

/// Plug-in entropy of a stream of hashable labels; zero for an empty stream.
pub fn plugin_entropy_of_labels<T: Hash + Eq>(labels: impl IntoIterator<Item = T>) -> f64 {
    let counts = label_counts(labels);
    if counts.is_empty() {
        return 0.0;
    }
    plugin_entropy(&counts, Correction::None).unwrap_or(0.0)
}

/// Delta-method standard error of the plug-in entropy,
/// `sqrt((sum p ln^2 p - H^2) / R)`.
pub fn entropy_standard_error(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let (mut h, mut h2) = (0.0, 0.0);
    for &c in counts.iter().filter(|&&c| c > 0) {
        let p = c as f64 / n;
        h -= p * p.ln();
        h2 += p * p.ln() * p.ln();
    }
    ((h2 - h * h).max(0.0) / n).sqrt()
}

/// Information-usage estimate of a replication batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoEstimate {
    pub h_t: f64,
    pub h_t_given_phi: f64,
    /// `max(0, h_t - h_t_given_phi)`.
    pub mutual_information: f64,
    pub replications: usize,
    pub correction: Correction,
    pub support_size: usize,
    /// Standard error of `h_t`.
    pub h_t_se: f64,
}

/// Empirical selection histogram over `0..=m` (the last cell is the fallback
/// sentinel).
pub fn selection_counts(batch: &ReplicationBatch) -> Vec<u64> {
    let mut counts = vec![0u64; batch.m() + 1];
    for &s in batch.selections() {
        counts[s] += 1;
    }
    counts
}

/// Empirical `P(T = i)` over `0..=m`.
pub fn selection_pmf(batch: &ReplicationBatch) -> Vec<f64> {
    let r = batch.replications() as f64;
    selection_counts(batch).into_iter().map(|c| c as f64 / r).collect()
}

/// Estimates `H(T)`, `H(T | phi)` and `I(T; phi)`.
///
/// `H(T | phi)` is the average of the exact per-replication conditional
/// entropies the rule reported, so only `H(T)` carries estimation error.
pub fn estimate_information_usage(batch: &ReplicationBatch, correction: Correction) -> InfoEstimate {
    let counts = selection_counts(batch);
    let support_size = counts.iter().filter(|&&c| c > 0).count();
    let outcomes = batch.rule().outcome_count(batch.m());
    let h_t = plugin_entropy(&counts, correction)
        .expect("batches are nonempty")
        .min((outcomes as f64).ln());
    let h_t_given_phi = stats::mean(batch.rule_conditional_entropy()).max(0.0);
    InfoEstimate {
        h_t,
        h_t_given_phi,
        mutual_information: (h_t - h_t_given_phi).max(0.0),
        replications: batch.replications(),
        correction,
        support_size,
        h_t_se: entropy_standard_error(&counts),
    }
}

/// Equal-probability (marginal quantile) bin index of every entry.
fn quantile_bins(xs: &[f64], bins: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
    let mut out = vec![0; xs.len()];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = rank * bins / xs.len();
    }
    out
}

/// Plug-in mutual information of the 2-D histogram with equal-probability
/// marginal bins.
pub fn binned_mutual_information(x: &[f64], y: &[f64], bins: usize) -> Result<f64> {
    if x.len() != y.len() {
        return input(format!("length mismatch: {} vs {}", x.len(), y.len()));
    }
    if x.len() < 1000 {
        return input(format!("binned MI needs >= 1000 pairs, got {}", x.len()));
    }
    if bins < 4 {
        return input(format!("binned MI needs >= 4 bins, got {bins}"));
    }
    let bx = quantile_bins(x, bins);
    let by = quantile_bins(y, bins);
    let mut joint = vec![0u64; bins * bins];
    let mut mx = vec![0u64; bins];
    let mut my = vec![0u64; bins];
    for (&a, &b) in bx.iter().zip(&by) {
        joint[a * bins + b] += 1;
        mx[a] += 1;
        my[b] += 1;
    }
    let h = |c: &[u64]| plugin_entropy(c, Correction::None);
    Ok((h(&mx)? + h(&my)? - h(&joint)?).max(0.0))
}

/// Binary indicators `Z[r, i] = 1(phi_i < epsilon)`, packed per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueIndicator {
    pub epsilon: f64,
    m: usize,
    words: usize,
    bits: Vec<u64>,
}

impl PValueIndicator {
    pub fn from_batch(batch: &ReplicationBatch, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        let m = batch.m();
        let words = m.div_ceil(64);
        let mut bits = vec![0u64; words * batch.replications()];
        for r in 0..batch.replications() {
            let row = batch
                .phi_row(r)
                .ok_or_else(|| crate::error::Error::Input("batch was sampled without keeping phi".into()))?;
            for (i, &v) in row.iter().enumerate() {
                if v < epsilon {
                    bits[r * words + i / 64] |= 1 << (i % 64);
                }
            }
        }
        Ok(Self { epsilon, m, words, bits })
    }

    pub fn replications(&self) -> usize {
        self.bits.len() / self.words.max(1)
    }

    pub fn get(&self, r: usize, i: usize) -> bool {
        self.bits[r * self.words + i / 64] >> (i % 64) & 1 == 1
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.bits[r * self.words..(r + 1) * self.words]
    }

    /// Fraction of replications with `Z[., i] = 1`.
    pub fn column_mean(&self, i: usize) -> f64 {
        let r = self.replications();
        (0..r).filter(|&k| self.get(k, i)).count() as f64 / r as f64
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return input(format!("epsilon must lie in (0, 1/2), got {epsilon}"));
    }
    Ok(())
}

/// Selection information carried by small p-values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PValueInformation {
    /// Plug-in `I(T; Z_epsilon)`.
    pub i_tz: f64,
    /// Empirical `P(phi_T < epsilon)`.
    pub p_small: f64,
    pub p_small_se: f64,
    /// Whether the row-pattern histogram is exact; false means the pattern
    /// entropy (and hence the estimate) is a lower bound.
    pub exact: bool,
}

/// Patterns with more than this many coordinates are flagged inexact.
pub const EXACT_PATTERN_WIDTH: usize = 20;

pub fn pvalue_information(
    batch: &ReplicationBatch,
    ensemble: &StatisticEnsemble,
    epsilon: f64,
) -> Result<PValueInformation> {
    if ensemble.kind() != NoiseKind::BernoulliUniformPvalue {
        return input(format!("p-value information needs a uniform p-value ensemble, got {}", ensemble.kind().name()));
    }
    check_epsilon(epsilon)?;
    let z = PValueIndicator::from_batch(batch, epsilon)?;
    let sel = batch.selections();
    let h_t = plugin_entropy_of_labels(sel.iter().copied());
    let h_z = plugin_entropy_of_labels((0..z.replications()).map(|r| z.row(r)));
    let h_tz = plugin_entropy_of_labels((0..z.replications()).map(|r| (sel[r], z.row(r))));
    let small: Vec<f64> = batch
        .reported_value()
        .iter()
        .map(|&v| if v < epsilon { 1.0 } else { 0.0 })
        .collect();
    let ms = stats::mean_se(&small);
    Ok(PValueInformation {
        i_tz: (h_t + h_z - h_tz).max(0.0),
        p_small: ms.mean,
        p_small_se: ms.se,
        exact: z.m() <= EXACT_PATTERN_WIDTH,
    })
}

/// Max-information of a deterministic selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxInformation {
    /// `max_i ln(1 / P(T = i))` over reachable outcomes.
    pub max_information: f64,
    /// `ln((m - 1) / P(T != signal))` when a signal index is designated.
    pub single_signal: Option<f64>,
}

fn check_pmf(pmf: &[f64]) -> Result<()> {
    if pmf.is_empty() {
        return input("empty pmf");
    }
    if pmf.iter().any(|&p| !(p >= 0.0)) {
        return input("pmf has negative or NaN entries");
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return input(format!("pmf sums to {total}"));
    }
    Ok(())
}

pub fn max_information_rank(pmf: &[f64], signal: Option<usize>) -> Result<MaxInformation> {
    check_pmf(pmf)?;
    let max_information = pmf
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    let single_signal = match signal {
        None => None,
        Some(s) if s >= pmf.len() => return input(format!("signal index {s} outside pmf")),
        Some(s) => {
            let miss = 1.0 - pmf[s];
            let m = pmf.len() as f64;
            Some(if miss > 0.0 { ((m - 1.0) / miss).ln() } else { f64::INFINITY })
        }
    };
    Ok(MaxInformation {
        max_information,
        single_signal,
    })
}

/// Lower bound on approximate max-information at level `level` for a
/// deterministic selection: `max_{i : P(T=i) >= 2 level} ln(1/P(T=i)) - ln 2`.
/// `None` when no outcome is that likely.
pub fn approx_max_information_lower_bound(pmf: &[f64], level: f64) -> Result<Option<f64>> {
    check_pmf(pmf)?;
    if !(level > 0.0) {
        return input(format!("approximation level must be positive, got {level}"));
    }
    Ok(pmf
        .iter()
        .filter(|&&p| p > 0.0 && p >= 2.0 * level)
        .map(|&p| -p.ln() - 2f64.ln())
        .reduce(f64::max))
}

/// Per-index term of the selection KL decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexDivergence {
    pub index: usize,
    pub selection_probability: f64,
    /// `E[phi_i | T = i] - mu_i`.
    pub delta: f64,
    /// Gaussian-fit `D(P(phi_i | T = i) || P(phi_i))`.
    pub divergence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KlDecomposition {
    pub terms: Vec<IndexDivergence>,
    /// Indices selected at least once but fewer than `min_count` times.
    pub undersampled: Vec<usize>,
    /// `sum_i P(T = i) D_i` over the retained indices.
    pub weighted_divergence: f64,
    /// `sum_i P(T = i) delta_i^2` over the retained indices.
    pub weighted_delta_sq: f64,
}

/// `D(N(m1, v1) || N(m0, v0))`.
pub fn gaussian_kl(m1: f64, v1: f64, m0: f64, v0: f64) -> f64 {
    0.5 * (v1 / v0 + (m1 - m0) * (m1 - m0) / v0 - 1.0 + (v0 / v1).ln())
}

/// Decomposes the selection's dependence into per-index divergences between
/// the conditional law of `phi_i` given `T = i` and its marginal law, each
/// fitted as a Gaussian.
pub fn kl_selection_decomposition(
    batch: &ReplicationBatch,
    ensemble: &StatisticEnsemble,
    min_count: usize,
) -> Result<KlDecomposition> {
    if !matches!(ensemble.kind(), NoiseKind::GaussianIid | NoiseKind::GaussianCorrelated) {
        return input(format!("KL decomposition needs a Gaussian ensemble, got {}", ensemble.kind().name()));
    }
    if batch.m() != ensemble.m() {
        return input("batch/ensemble dimension mismatch");
    }
    if !batch.has_phi() {
        return input("batch was sampled without keeping phi");
    }
    let m = batch.m();
    let reps = batch.replications();
    let mut conditional: Vec<Vec<f64>> = vec![Vec::new(); m];
    for (r, &s) in batch.selections().iter().enumerate() {
        if s < m {
            conditional[s].push(batch.phi_row(r).expect("checked")[s]);
        }
    }
    let mut terms = Vec::new();
    let mut undersampled = Vec::new();
    for (i, cond) in conditional.iter().enumerate() {
        if cond.is_empty() {
            continue;
        }
        if cond.len() < min_count.max(2) {
            undersampled.push(i);
            continue;
        }
        let marginal: Vec<f64> = (0..reps).map(|r| batch.phi_row(r).expect("checked")[i]).collect();
        let (m1, v1) = (stats::mean(cond), stats::variance(cond));
        let (m0, v0) = (stats::mean(&marginal), stats::variance(&marginal));
        let divergence = if v1 > 0.0 && v0 > 0.0 { gaussian_kl(m1, v1, m0, v0) } else { 0.0 };
        terms.push(IndexDivergence {
            index: i,
            selection_probability: cond.len() as f64 / reps as f64,
            delta: m1 - ensemble.mean(i),
            divergence,
        });
    }
    let weighted_divergence = terms.iter().map(|t| t.selection_probability * t.divergence).sum();
    let weighted_delta_sq = terms.iter().map(|t| t.selection_probability * t.delta * t.delta).sum();
    Ok(KlDecomposition {
        terms,
        undersampled,
        weighted_divergence,
        weighted_delta_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{sample_batch, sample_batch_with, BatchOptions};
    use crate::rng::{stream, StreamTag};
    use crate::selection::SelectionRule;

    const KEEP: BatchOptions = BatchOptions { keep_phi: true };
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn plugin_entropy_examples() {
        let h = plugin_entropy(&[5; 8], Correction::None).unwrap();
        assert!((h - 8f64.ln()).abs() < 1e-12);
        assert!((h - 2.0794).abs() < 1e-4);
        assert_eq!(plugin_entropy(&[17], Correction::None).unwrap(), 0.0);
        // -0.75 ln 0.75 - 0.25 ln 0.25, evaluated to 16 digits
        let h = plugin_entropy(&[7500, 2500], Correction::None).unwrap();
        assert!((h - 0.562_335_144_618_808_8).abs() < 1e-12);
        assert!(plugin_entropy(&[], Correction::None).is_err());
        assert!(plugin_entropy(&[0, 0], Correction::None).is_err());
        let mm = plugin_entropy(&[7500, 2500], Correction::MillerMadow).unwrap();
        assert!((mm - h - 1.0 / 20_000.0).abs() < 1e-15);
    }

    #[test]
    fn argmax_on_symmetric_nulls_uses_log_m() {
        let e = StatisticEnsemble::null_gaussian(1000, 1.0).unwrap();
        let b = sample_batch(&e, &SelectionRule::Argmax, 200_000, 3).unwrap();
        let est = estimate_information_usage(&b, Correction::MillerMadow);
        assert_eq!(est.h_t_given_phi, 0.0);
        assert!((est.mutual_information - 1000f64.ln()).abs() < 0.01, "{est:?}");
    }

    #[test]
    fn full_randomization_uses_no_information() {
        let e = StatisticEnsemble::null_gaussian(20, 1.0).unwrap();
        let b = sample_batch(&e, &SelectionRule::TopKUniform { m0: 20 }, 50_000, 3).unwrap();
        let est = estimate_information_usage(&b, Correction::MillerMadow);
        assert!((est.h_t_given_phi - 20f64.ln()).abs() < 1e-9);
        assert!(est.mutual_information < 0.002, "{est:?}");
    }

    #[test]
    fn top_k_on_symmetric_nulls() {
        let e = StatisticEnsemble::null_gaussian(1000, 1.0).unwrap();
        let b = sample_batch(&e, &SelectionRule::TopKUniform { m0: 10 }, 200_000, 4).unwrap();
        let est = estimate_information_usage(&b, Correction::MillerMadow);
        assert!((est.mutual_information - 100f64.ln()).abs() < 0.01, "{est:?}");
    }

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut r = stream(seed, StreamTag::INNER, 0);
        (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
    }

    #[test]
    fn binned_mi_examples() {
        let x = normals(1, 100_000);
        let same = binned_mutual_information(&x, &x, 16).unwrap();
        assert!(same >= 0.9 * 16f64.ln());
        let y = normals(2, 100_000);
        assert!(binned_mutual_information(&x, &y, 16).unwrap() <= 0.02);
        let noisy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let mi = binned_mutual_information(&x, &noisy, 32).unwrap();
        let truth = 0.5 * 2f64.ln();
        assert!((mi - truth).abs() <= 0.1 * truth, "{mi}");

        assert!(binned_mutual_information(&x[..10], &y[..10], 16).is_err());
        assert!(binned_mutual_information(&x, &y[..5000], 16).is_err());
        assert!(binned_mutual_information(&x, &y, 2).is_err());
    }

    #[test]
    fn pvalue_argmin_frequency() {
        let e = StatisticEnsemble::uniform_pvalues(5).unwrap();
        let b = sample_batch_with(&e, &SelectionRule::Argmin, 100_000, 6, KEEP).unwrap();
        let info = pvalue_information(&b, &e, 0.05).unwrap();
        let expected = 1.0 - 0.95f64.powi(5);
        assert!((info.p_small - expected).abs() < 4.0 * info.p_small_se, "{info:?}");
        assert!(info.exact);
        let bound = 0.05 + (info.i_tz / (1.0 / (2.0 * 0.05f64)).ln()).sqrt();
        assert!(bound >= info.p_small);

        let z = PValueIndicator::from_batch(&b, 0.05).unwrap();
        for i in 0..5 {
            assert!((z.column_mean(i) - 0.05).abs() < 4.0 * (0.05 * 0.95 / 100_000f64).sqrt());
        }
    }

    #[test]
    fn pvalue_independent_selection() {
        let e = StatisticEnsemble::uniform_pvalues(5).unwrap();
        let b = sample_batch_with(&e, &SelectionRule::Fixed { index: 2 }, 100_000, 6, KEEP).unwrap();
        let info = pvalue_information(&b, &e, 0.05).unwrap();
        assert_eq!(info.i_tz, 0.0);
        assert!((info.p_small - 0.05).abs() < 4.0 * info.p_small_se);
    }

    #[test]
    fn pvalue_rejects_bad_inputs() {
        let e = StatisticEnsemble::uniform_pvalues(5).unwrap();
        let b = sample_batch_with(&e, &SelectionRule::Argmin, 100, 6, KEEP).unwrap();
        assert!(pvalue_information(&b, &e, 0.5).is_err());
        assert!(pvalue_information(&b, &e, 0.0).is_err());
        let g = StatisticEnsemble::null_gaussian(5, 1.0).unwrap();
        let gb = sample_batch(&g, &SelectionRule::Argmin, 100, 6).unwrap();
        assert!(pvalue_information(&gb, &g, 0.05).is_err());
    }

    #[test]
    fn max_information_examples() {
        let uniform = vec![0.01; 100];
        let mi = max_information_rank(&uniform, None).unwrap();
        assert!((mi.max_information - 100f64.ln()).abs() < 1e-12);
        let skewed = [0.97, 0.01, 0.01, 0.01];
        let mi = max_information_rank(&skewed, Some(0)).unwrap();
        assert!((mi.max_information - 100f64.ln()).abs() < 1e-9);
        assert!((mi.single_signal.unwrap() - (3.0f64 / 0.03).ln()).abs() < 1e-9);
        // unreachable cells are ignored
        let mi = max_information_rank(&[0.5, 0.5, 0.0], None).unwrap();
        assert!((mi.max_information - 2f64.ln()).abs() < 1e-12);
        assert!(max_information_rank(&[0.5, 0.6], None).is_err());
    }

    #[test]
    fn approximate_max_information_bound() {
        let pmf = [0.9, 0.05, 0.05];
        let lb = approx_max_information_lower_bound(&pmf, 0.02).unwrap().unwrap();
        assert!((lb - (20f64.ln() - 2f64.ln())).abs() < 1e-12);
        let lb = approx_max_information_lower_bound(&pmf, 0.1).unwrap().unwrap();
        assert!((lb - (1.0f64 / 0.9).ln() + 2f64.ln()).abs() < 1e-12);
        assert_eq!(approx_max_information_lower_bound(&pmf, 0.6).unwrap(), None);
    }

    #[test]
    fn kl_decomposition_independent_rule() {
        let e = StatisticEnsemble::null_gaussian(4, 1.0).unwrap();
        let b = sample_batch_with(&e, &SelectionRule::TopKUniform { m0: 4 }, 40_000, 1, KEEP).unwrap();
        let kl = kl_selection_decomposition(&b, &e, 30).unwrap();
        assert_eq!(kl.terms.len(), 4);
        for t in &kl.terms {
            assert!(t.divergence < 0.01, "{t:?}");
        }
    }

    #[test]
    fn kl_decomposition_two_nulls() {
        let e = StatisticEnsemble::null_gaussian(2, 1.0).unwrap();
        let b = sample_batch_with(&e, &SelectionRule::Argmax, 50_000, 2, KEEP).unwrap();
        let kl = kl_selection_decomposition(&b, &e, 30).unwrap();
        assert!(kl.weighted_divergence <= 2f64.ln() + 0.05);
        // E[phi_i | T = i] = 1/sqrt(pi) for the max of two standard normals
        for t in &kl.terms {
            assert!((t.delta - 1.0 / std::f64::consts::PI.sqrt()).abs() < 0.02, "{t:?}");
        }
    }

    #[test]
    fn kl_decomposition_flags_undersampled() {
        let e = StatisticEnsemble::gaussian(vec![3.0, 0.0, 0.0], 1.0).unwrap();
        let b = sample_batch_with(&e, &SelectionRule::Argmax, 200, 2, KEEP).unwrap();
        let kl = kl_selection_decomposition(&b, &e, 30).unwrap();
        assert!(kl.terms.iter().any(|t| t.index == 0));
        assert!(!kl.undersampled.is_empty());
    }

    proptest! {
        #[test]
        fn entropy_permutation_invariant_and_bounded(counts in prop::collection::vec(0u64..50, 1..30)) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let h = plugin_entropy(&counts, Correction::None).unwrap();
            let mut rev = counts.clone();
            rev.reverse();
            prop_assert!((h - plugin_entropy(&rev, Correction::None).unwrap()).abs() < 1e-12);
            let support = counts.iter().filter(|&&c| c > 0).count();
            prop_assert!(h <= (support as f64).ln() + 1e-12);
            let total: u64 = counts.iter().sum();
            let uniform = vec![total; support];
            prop_assert!(h <= plugin_entropy(&uniform, Correction::None).unwrap() + 1e-12);
        }
    }
}
