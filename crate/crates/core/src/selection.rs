//! Selection rules: maps from a realized vector of statistics to the index
//! that gets reported.
//!
//! Randomized rules expose their exact conditional distribution given the
//! statistics, so the conditional entropy `H(T | phi)` never has to be
//! estimated. Ties are always broken toward the smallest index.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gumbel};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// The catalog of adaptive selection procedures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectionRule {
    Argmax,
    Argmin,
    /// Uniform draw among the `m0` largest statistics.
    TopKUniform { m0: usize },
    /// Uniform draw among non-fallback statistics at or above `level`;
    /// reports the fallback statistic when none qualify.
    Threshold { level: f64, fallback: usize },
    /// Exponential-weights selection of `k` indices without replacement.
    /// Only the first draw is the batch selection.
    Gibbs { beta: f64, k: usize },
    /// Argmax of per-feature sample variance; needs raw data.
    VarianceFilter,
    /// Random partition into `m0` groups, uniform draw among group maxima.
    GroupedMax { m0: usize },
    /// Data-agnostic choice of a fixed index.
    Fixed { index: usize },
}

/// Outcome of applying a rule to one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Choice {
    /// Index of the reported statistic. For a threshold fallback this is the
    /// fallback coordinate.
    pub index: usize,
    /// True when a threshold rule fell back.
    pub fallback: bool,
    /// `H(T | phi)` in nats for this realization.
    pub conditional_entropy: f64,
}

impl Choice {
    fn deterministic(index: usize) -> Self {
        Choice {
            index,
            fallback: false,
            conditional_entropy: 0.0,
        }
    }
}

impl SelectionRule {
    /// Short identifier used in reports and error messages.
    pub fn name(&self) -> &'static str {
        match self {
            SelectionRule::Argmax => "argmax",
            SelectionRule::Argmin => "argmin",
            SelectionRule::TopKUniform { .. } => "top_k_uniform",
            SelectionRule::Threshold { .. } => "threshold",
            SelectionRule::Gibbs { .. } => "gibbs",
            SelectionRule::VarianceFilter => "variance_filter",
            SelectionRule::GroupedMax { .. } => "grouped_max",
            SelectionRule::Fixed { .. } => "fixed",
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(
            self,
            SelectionRule::Argmax | SelectionRule::Argmin | SelectionRule::Fixed { .. }
        )
    }

    /// Number of distinct outcomes over `m` statistics; threshold rules get
    /// one extra for the fallback sentinel.
    pub fn outcome_count(&self, m: usize) -> usize {
        match self {
            SelectionRule::Threshold { .. } => m + 1,
            _ => m,
        }
    }

    /// Checks the rule's parameters against `m` candidate statistics.
    pub fn validate(&self, m: usize) -> Result<()> {
        if m == 0 {
            return input("selection needs at least one statistic");
        }
        match *self {
            SelectionRule::TopKUniform { m0 } if m0 == 0 || m0 > m => {
                input(format!("top_k_uniform m0={m0} outside 1..={m}"))
            }
            SelectionRule::Threshold { fallback, level } => {
                if fallback >= m {
                    input(format!("threshold fallback index {fallback} outside 0..{m}"))
                } else if level.is_nan() {
                    input("threshold level is NaN")
                } else {
                    Ok(())
                }
            }
            SelectionRule::Gibbs { beta, k } => {
                if !(beta >= 0.0) || !beta.is_finite() {
                    input(format!("gibbs beta={beta} must be finite and >= 0"))
                } else if k == 0 || k > m {
                    input(format!("gibbs k={k} outside 1..={m}"))
                } else {
                    Ok(())
                }
            }
            SelectionRule::GroupedMax { m0 } => {
                if m0 == 0 || m0 > m || m % m0 != 0 {
                    input(format!("grouped_max needs m0 dividing m (m={m}, m0={m0})"))
                } else {
                    Ok(())
                }
            }
            SelectionRule::Fixed { index } if index >= m => {
                input(format!("fixed index {index} outside 0..{m}"))
            }
            _ => Ok(()),
        }
    }

    /// Applies the rule to a realized statistic vector.
    ///
    /// The variance filter cannot run on summary statistics alone; use
    /// [`variance_filter_select`] with a raw data view instead.
    pub fn select<R: Rng + ?Sized>(&self, phi: &[f64], rng: &mut R) -> Result<Choice> {
        self.validate(phi.len())?;
        match *self {
            SelectionRule::Argmax => argmax_select(phi).map(Choice::deterministic),
            SelectionRule::Argmin => argmin_select(phi).map(Choice::deterministic),
            SelectionRule::Fixed { index } => Ok(Choice::deterministic(index)),
            SelectionRule::TopKUniform { m0 } => Ok(Choice {
                index: top_k_uniform_select(phi, m0, rng)?,
                fallback: false,
                conditional_entropy: (m0 as f64).ln(),
            }),
            SelectionRule::Threshold { level, fallback } => {
                threshold_select(phi, level, fallback, rng)
            }
            SelectionRule::Gibbs { beta, .. } => {
                let pmf = gibbs_pmf(phi, beta)?;
                let index = sample_pmf(&pmf, rng);
                Ok(Choice {
                    index,
                    fallback: false,
                    conditional_entropy: entropy_of_pmf(&pmf),
                })
            }
            SelectionRule::GroupedMax { m0 } => {
                let index = grouped_max_select(phi, m0, rng)?;
                Ok(Choice {
                    index,
                    fallback: false,
                    conditional_entropy: grouped_max_entropy(phi.len(), m0)?,
                })
            }
            SelectionRule::VarianceFilter => Err(Error::Config(
                "variance_filter rule needs raw per-feature samples, not summary statistics"
                    .into(),
            )),
        }
    }

    /// Exact distribution of the selected outcome given `phi`.
    ///
    /// Returns `None` for the variance filter, whose choice is not a function
    /// of the summary statistics.
    pub fn conditional_pmf(&self, phi: &[f64]) -> Result<Option<Vec<f64>>> {
        self.validate(phi.len())?;
        let m = phi.len();
        let one_hot = |i: usize| {
            let mut p = vec![0.0; m];
            p[i] = 1.0;
            p
        };
        let pmf = match *self {
            SelectionRule::Argmax => one_hot(argmax_select(phi)?),
            SelectionRule::Argmin => one_hot(argmin_select(phi)?),
            SelectionRule::Fixed { index } => one_hot(index),
            SelectionRule::TopKUniform { m0 } => {
                let mut p = vec![0.0; m];
                for i in top_k_indices(phi, m0) {
                    p[i] = 1.0 / m0 as f64;
                }
                p
            }
            SelectionRule::Threshold { level, fallback } => {
                let hits = exceedances(phi, level, fallback);
                let mut p = vec![0.0; m + 1];
                if hits.is_empty() {
                    p[m] = 1.0;
                } else {
                    for &i in &hits {
                        p[i] = 1.0 / hits.len() as f64;
                    }
                }
                p
            }
            SelectionRule::Gibbs { beta, .. } => gibbs_pmf(phi, beta)?,
            SelectionRule::GroupedMax { m0 } => grouped_max_pmf(phi, m0)?,
            SelectionRule::VarianceFilter => return Ok(None),
        };
        Ok(Some(pmf))
    }
}

fn check_finite(phi: &[f64]) -> Result<()> {
    if phi.is_empty() {
        return input("empty statistic vector");
    }
    if phi.iter().any(|x| x.is_nan()) {
        return input("statistic vector contains NaN");
    }
    Ok(())
}

/// Smallest index attaining the maximum.
pub fn argmax_select(phi: &[f64]) -> Result<usize> {
    check_finite(phi)?;
    let mut best = 0;
    for (i, &v) in phi.iter().enumerate().skip(1) {
        if v > phi[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Smallest index attaining the minimum.
pub fn argmin_select(phi: &[f64]) -> Result<usize> {
    check_finite(phi)?;
    let mut best = 0;
    for (i, &v) in phi.iter().enumerate().skip(1) {
        if v < phi[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Descending by value, ascending by index among equal values.
fn rank_order(phi: &[f64], a: usize, b: usize) -> Ordering {
    phi[b].partial_cmp(&phi[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b))
}

/// Indices of the `m0` largest statistics, largest first.
pub fn top_k_indices(phi: &[f64], m0: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..phi.len()).collect();
    let m0 = m0.min(phi.len());
    if m0 == 0 {
        return Vec::new();
    }
    if m0 < idx.len() {
        idx.select_nth_unstable_by(m0 - 1, |&a, &b| rank_order(phi, a, b));
        idx.truncate(m0);
    }
    idx.sort_by(|&a, &b| rank_order(phi, a, b));
    idx
}

pub fn top_k_uniform_select<R: Rng + ?Sized>(phi: &[f64], m0: usize, rng: &mut R) -> Result<usize> {
    check_finite(phi)?;
    if m0 == 0 || m0 > phi.len() {
        return input(format!("top_k_uniform m0={m0} outside 1..={}", phi.len()));
    }
    let top = top_k_indices(phi, m0);
    Ok(top[rng.random_range(0..m0)])
}

fn exceedances(phi: &[f64], level: f64, fallback: usize) -> Vec<usize> {
    phi.iter()
        .enumerate()
        .filter(|&(i, &v)| i != fallback && v >= level)
        .map(|(i, _)| i)
        .collect()
}

/// Threshold-`level` selection with a designated fallback statistic.
pub fn threshold_select<R: Rng + ?Sized>(
    phi: &[f64],
    level: f64,
    fallback: usize,
    rng: &mut R,
) -> Result<Choice> {
    check_finite(phi)?;
    if fallback >= phi.len() {
        return input(format!("fallback index {fallback} outside 0..{}", phi.len()));
    }
    let hits = exceedances(phi, level, fallback);
    if hits.is_empty() {
        return Ok(Choice {
            index: fallback,
            fallback: true,
            conditional_entropy: 0.0,
        });
    }
    Ok(Choice {
        index: hits[rng.random_range(0..hits.len())],
        fallback: false,
        conditional_entropy: (hits.len() as f64).ln(),
    })
}

/// Exponential-weights distribution `pi_i ∝ exp(beta * phi_i)`, computed with
/// the maximum subtracted before exponentiation.
pub fn gibbs_pmf(phi: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_finite(phi)?;
    if !(beta >= 0.0) || !beta.is_finite() {
        return input(format!("gibbs beta={beta} must be finite and >= 0 (use argmin framing for the other orientation)"));
    }
    let max = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = phi.iter().map(|&x| (beta * (x - max)).exp()).collect();
    let z: f64 = w.iter().sum();
    for v in &mut w {
        *v /= z;
    }
    Ok(w)
}

/// Draws `k` indices without replacement: the first from the Gibbs
/// distribution, each later one from the distribution renormalized over the
/// indices not yet drawn.
///
/// Sampled with Gumbel perturbations: ranking `beta * phi_i + G_i` with iid
/// standard Gumbel `G_i` yields exactly the sequential renormalized draw
/// order, in `O(m + k log k)`.
pub fn gibbs_select<R: Rng + ?Sized>(
    phi: &[f64],
    beta: f64,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_finite(phi)?;
    if !(beta >= 0.0) || !beta.is_finite() {
        return input(format!("gibbs beta={beta} must be finite and >= 0 (use argmin framing for the other orientation)"));
    }
    if k == 0 || k > phi.len() {
        return input(format!("gibbs k={k} outside 1..={}", phi.len()));
    }
    let gumbel = Gumbel::new(0.0, 1.0).expect("standard Gumbel");
    let keys: Vec<f64> = phi.iter().map(|&x| beta * x + gumbel.sample(rng)).collect();
    Ok(top_k_indices(&keys, k))
}

/// Expected selected value `sum_i pi_i(beta) phi_i` under the Gibbs weights.
pub fn gibbs_mean(phi: &[f64], beta: f64) -> Result<f64> {
    let pmf = gibbs_pmf(phi, beta)?;
    Ok(pmf.iter().zip(phi).map(|(p, x)| p * x).sum())
}

/// Solves `sum_i pi_i(beta) phi_i = target` for `beta >= 0` by bisection.
///
/// The Gibbs mean is non-decreasing in `beta`, running from the plain average
/// at `beta = 0` toward the maximum. Targets at or below the average return
/// `0`; targets at or above the maximum are unreachable.
pub fn solve_gibbs_beta(phi: &[f64], target: f64) -> Result<f64> {
    check_finite(phi)?;
    let avg = phi.iter().sum::<f64>() / phi.len() as f64;
    let max = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if target <= avg {
        return Ok(0.0);
    }
    if target >= max {
        return input(format!("target {target} must lie below max(phi) = {max}"));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while gibbs_mean(phi, hi)? < target {
        hi *= 2.0;
        if hi > 1e12 {
            return input("gibbs target not reachable with finite beta");
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gibbs_mean(phi, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Random-partition group-max rule.
pub fn grouped_max_select<R: Rng + ?Sized>(phi: &[f64], m0: usize, rng: &mut R) -> Result<usize> {
    check_finite(phi)?;
    let m = phi.len();
    if m0 == 0 || m0 > m || m % m0 != 0 {
        return input(format!("grouped_max needs m0 dividing m (m={m}, m0={m0})"));
    }
    let group = m / m0;
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(rng);
    let winners: Vec<usize> = perm
        .chunks_exact(group)
        .map(|g| {
            *g.iter()
                .min_by(|&&a, &&b| rank_order(phi, a, b))
                .expect("nonempty group")
        })
        .collect();
    Ok(winners[rng.random_range(0..m0)])
}

/// Exact conditional pmf of the grouped-max rule.
///
/// The statistic of descending rank `r` wins its group iff none of the `r`
/// statistics above it share the group, which under a uniform partition has
/// probability `C(m-1-r, g-1) / C(m-1, g-1)` with `g = m / m0`; the final
/// uniform draw among the `m0` winners contributes the factor `1 / m0`.
pub fn grouped_max_pmf(phi: &[f64], m0: usize) -> Result<Vec<f64>> {
    check_finite(phi)?;
    let m = phi.len();
    if m0 == 0 || m0 > m || m % m0 != 0 {
        return input(format!("grouped_max needs m0 dividing m (m={m}, m0={m0})"));
    }
    let g = m / m0;
    let order = top_k_indices(phi, m);
    let mut pmf = vec![0.0; m];
    let mut q = 1.0;
    for (r, &i) in order.iter().enumerate() {
        pmf[i] = q / m0 as f64;
        // q(r+1) = q(r) * (m - r - g) / (m - 1 - r)
        if r + 1 < m {
            let num = m as f64 - r as f64 - g as f64;
            q = if num <= 0.0 { 0.0 } else { q * num / (m - 1 - r) as f64 };
        }
    }
    Ok(pmf)
}

/// Entropy of [`grouped_max_pmf`]. Ranks are strict (ties break by index),
/// so the pmf is a permutation of fixed rank weights and its entropy does
/// not depend on `phi`.
pub fn grouped_max_entropy(m: usize, m0: usize) -> Result<f64> {
    if m0 == 0 || m0 > m || m % m0 != 0 {
        return input(format!("grouped_max needs m0 dividing m (m={m}, m0={m0})"));
    }
    let g = m / m0;
    let mut h = 0.0;
    let mut q = 1.0;
    for r in 0..m {
        let p = q / m0 as f64;
        if p > 0.0 {
            h -= p * p.ln();
        }
        if r + 1 < m {
            let num = m as f64 - r as f64 - g as f64;
            q = if num <= 0.0 { 0.0 } else { q * num / (m - 1 - r) as f64 };
        }
    }
    Ok(h.max(0.0))
}

/// Raw per-feature samples: `m` features (rows) by `n` samples (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataEnsembleView {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl RawDataEnsembleView {
    pub fn new(m: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != m * n {
            return input(format!("raw data has {} entries, expected {m}x{n}", data.len()));
        }
        if m == 0 {
            return input("raw data needs at least one feature");
        }
        Ok(Self { m, n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return input("ragged raw data rows");
        }
        Self::new(rows.len(), n, rows.concat())
    }

    pub fn features(&self) -> usize {
        self.m
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Per-feature sample means.
    pub fn phi(&self) -> Vec<f64> {
        (0..self.m)
            .map(|i| self.row(i).iter().sum::<f64>() / self.n as f64)
            .collect()
    }

    /// Per-feature sums of squared deviations from the feature mean.
    pub fn spread(&self) -> Vec<f64> {
        self.phi()
            .iter()
            .enumerate()
            .map(|(i, &mean)| self.row(i).iter().map(|x| (x - mean) * (x - mean)).sum())
            .collect()
    }
}

/// Index of the feature with the largest sample variance.
pub fn variance_filter_select(view: &RawDataEnsembleView) -> Result<usize> {
    if view.samples() < 2 {
        return input(format!("variance filter needs n >= 2 samples, got {}", view.samples()));
    }
    argmax_select(&view.spread())
}

/// Entropy in nats of a probability vector; zero cells contribute nothing.
pub fn entropy_of_pmf(pmf: &[f64]) -> f64 {
    let h: f64 = pmf.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
    h.max(0.0)
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_pmf<R: Rng + ?Sized>(pmf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in pmf.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}
