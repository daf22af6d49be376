//! Overfitting of empirical risk minimization, measured by information.
//!
//! Inputs `x_1..x_n` are fixed, labels `Y_i in {-1, +1}` are drawn with
//! `P(Y_i = 1) = p_i`, and a classifier is identified with the label pattern
//! it induces on the inputs. ERM is a deterministic function of the labels,
//! so the information it uses is the entropy of the trained pattern.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{overfit_bound, vc_info_bound};
use crate::error::{input, Result};
use crate::infotheory::{plugin_entropy, Correction};
use crate::rng::{stream, StreamTag};
use crate::stats::{mean_se, MeanSe};

/// Largest `n` for which the joint (pattern, labels) histogram is counted.
pub const EXACT_JOINT_MAX_N: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionClass {
    /// `f_t(x) = sign(x - t)`, VC dimension 1.
    Threshold1d,
    /// Finitely many explicit label patterns.
    Explicit { patterns: Vec<Vec<i8>> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationSetup {
    xs: Vec<f64>,
    label_probs: Vec<f64>,
    class: FunctionClass,
    patterns: Vec<Vec<i8>>,
}

/// Label patterns of `sign(x - t)` as `t` sweeps the line: pattern 0 is all
/// `+1`, and pattern `j` flips the points up to the `j`-th distinct value.
pub fn threshold_patterns(xs: &[f64]) -> Vec<Vec<i8>> {
    let mut values: Vec<f64> = xs.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut out = vec![vec![1i8; xs.len()]];
    for v in values {
        out.push(xs.iter().map(|&x| if x <= v { -1 } else { 1 }).collect());
    }
    out
}

impl ClassificationSetup {
    pub fn new(xs: Vec<f64>, label_probs: Vec<f64>, class: FunctionClass) -> Result<Self> {
        if xs.is_empty() {
            return input("classification needs at least one input");
        }
        if xs.len() != label_probs.len() {
            return input(format!("{} inputs but {} label probabilities", xs.len(), label_probs.len()));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return input("inputs must be finite");
        }
        if label_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return input("label probabilities must lie in [0, 1]");
        }
        let patterns = match &class {
            FunctionClass::Threshold1d => threshold_patterns(&xs),
            FunctionClass::Explicit { patterns } => {
                if patterns.is_empty() {
                    return input("explicit class needs at least one pattern");
                }
                if patterns
                    .iter()
                    .any(|p| p.len() != xs.len() || p.iter().any(|v| *v != 1 && *v != -1))
                {
                    return input("explicit patterns must be +-1 vectors of length n");
                }
                patterns.clone()
            }
        };
        Ok(Self {
            xs,
            label_probs,
            class,
            patterns,
        })
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn label_probs(&self) -> &[f64] {
        &self.label_probs
    }

    pub fn class(&self) -> &FunctionClass {
        &self.class
    }

    pub fn patterns(&self) -> &[Vec<i8>] {
        &self.patterns
    }

    /// `L(f)`: expected fraction of misclassified inputs under fresh labels.
    pub fn true_loss(&self, pattern: usize) -> f64 {
        let p = &self.patterns[pattern];
        p.iter()
            .zip(&self.label_probs)
            .map(|(&f, &q)| if f == 1 { 1.0 - q } else { q })
            .sum::<f64>()
            / self.n() as f64
    }

    /// `L_hat(f)` on the given labels.
    pub fn training_loss(&self, pattern: usize, labels: &[i8]) -> f64 {
        let p = &self.patterns[pattern];
        p.iter().zip(labels).filter(|(a, b)| a != b).count() as f64 / self.n() as f64
    }

    /// VC dimension of the class restricted to the inputs.
    pub fn vc_dimension(&self) -> usize {
        match self.class {
            FunctionClass::Threshold1d => 1,
            FunctionClass::Explicit { .. } => shattered_dimension(&self.patterns),
        }
    }

    pub fn draw_labels<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i8> {
        self.label_probs
            .iter()
            .map(|&p| if rng.random::<f64>() < p { 1 } else { -1 })
            .collect()
    }
}

/// Largest `d` such that some `d` inputs are shattered by `patterns`.
pub fn shattered_dimension(patterns: &[Vec<i8>]) -> usize {
    let n = patterns.first().map_or(0, Vec::len);
    let mut best = 0;
    for mask in 1u64..(1u64 << n.min(20)) {
        let d = mask.count_ones() as usize;
        if d <= best || (1usize << d) > patterns.len() {
            continue;
        }
        let mut seen = std::collections::HashSet::new();
        for p in patterns {
            let mut key = 0u64;
            for (bit, i) in (0..n).filter(|i| mask >> i & 1 == 1).enumerate() {
                if p[i] == 1 {
                    key |= 1 << bit;
                }
            }
            seen.insert(key);
        }
        if seen.len() == 1 << d {
            best = d;
        }
    }
    best
}

/// Index of the pattern with fewest training errors (smallest index on ties).
pub fn erm_train(setup: &ClassificationSetup, labels: &[i8]) -> Result<usize> {
    if labels.len() != setup.n() || labels.iter().any(|v| *v != 1 && *v != -1) {
        return input("labels must be a +-1 vector of length n");
    }
    let mut best = (0, usize::MAX);
    for (k, p) in setup.patterns.iter().enumerate() {
        let errors = p.iter().zip(labels).filter(|(a, b)| a != b).count();
        if errors < best.1 {
            best = (k, errors);
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverfitAudit {
    pub n: usize,
    pub replications: usize,
    /// `L(f_hat) - L_hat(f_hat)`.
    pub gap: MeanSe,
    /// Plug-in `I(f_hat(x); Y)`.
    pub information: f64,
    /// True when the information came from the joint (pattern, labels)
    /// histogram; false when only `H(pattern)` was available.
    pub joint_counted: bool,
    pub bound: f64,
    pub vc_dim: usize,
    pub vc_cap: f64,
    pub vc_bound: f64,
    pub distinct_patterns: usize,
    /// `gap <= bound + 3 se` and `I <= vc_cap`.
    pub satisfied: bool,
}

fn counts_of<K: std::hash::Hash + Eq>(labels: impl Iterator<Item = K>) -> Vec<u64> {
    let mut map: HashMap<K, u64> = HashMap::new();
    for l in labels {
        *map.entry(l).or_insert(0) += 1;
    }
    let mut c: Vec<u64> = map.into_values().collect();
    c.sort_unstable();
    c
}

/// Resamples labels, trains by ERM, and checks the information bounds on
/// the train/test gap.
pub fn overfitting_audit(setup: &ClassificationSetup, replications: usize, seed: u64) -> Result<OverfitAudit> {
    if replications == 0 {
        return input("replications must be >= 1");
    }
    let n = setup.n();
    let runs: Vec<Result<(usize, u64, f64)>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, StreamTag::LABELS, r as u64);
            let labels = setup.draw_labels(&mut rng);
            let k = erm_train(setup, &labels)?;
            let key = labels
                .iter()
                .enumerate()
                .filter(|(_, v)| **v == 1)
                .fold(0u64, |acc, (i, _)| acc | 1u64 << (i % 64));
            let gap = setup.true_loss(k) - setup.training_loss(k, &labels);
            Ok((k, key, gap))
        })
        .collect();
    let runs: Vec<(usize, u64, f64)> = runs.into_iter().collect::<Result<_>>()?;

    let h_pattern = plugin_entropy(&counts_of(runs.iter().map(|r| r.0)), Correction::None)?;
    let joint_counted = n <= EXACT_JOINT_MAX_N;
    let information = if joint_counted {
        let h_labels = plugin_entropy(&counts_of(runs.iter().map(|r| r.1)), Correction::None)?;
        let h_joint = plugin_entropy(&counts_of(runs.iter().map(|r| (r.0, r.1))), Correction::None)?;
        (h_pattern + h_labels - h_joint).max(0.0)
    } else {
        h_pattern
    };
    let gaps: Vec<f64> = runs.iter().map(|r| r.2).collect();
    let gap = mean_se(&gaps);
    let vc_dim = setup.vc_dimension().max(1);
    let vc_cap = vc_info_bound(vc_dim, n)?;
    let bound = overfit_bound(information, n)?;
    let vc_bound = overfit_bound(vc_cap, n)?;
    let distinct_patterns = counts_of(runs.iter().map(|r| r.0)).len();
    Ok(OverfitAudit {
        n,
        replications,
        gap,
        information,
        joint_counted,
        bound,
        vc_dim,
        vc_cap,
        vc_bound,
        distinct_patterns,
        satisfied: gap.mean <= bound + 3.0 * gap.se && information <= vc_cap + 1e-9,
    })
}
