//! Generative models for candidate-statistic vectors and seeded replication
//! batches.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, input, Error, Result};
use crate::infotheory::plugin_entropy_of_labels;
use crate::rng::{stream, StreamTag};
use crate::selection::{variance_filter_select, Choice, RawDataEnsembleView, SelectionRule};
use crate::stats;

/// Default replication count for bias estimates.
pub const DEFAULT_BIAS_REPLICATIONS: usize = 10_000;
/// Default replication count for entropy estimates.
pub const DEFAULT_ENTROPY_REPLICATIONS: usize = 50_000;

/// Eigenvalues below `-PSD_TOLERANCE` make a covariance unusable.
pub const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    GaussianIid,
    GaussianCorrelated,
    /// `phi_i = (mu_i - 1) + Exp(1)`.
    ShiftedExponential,
    /// Independent uniform p-values on `[0, 1]`.
    BernoulliUniformPvalue,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::GaussianIid => "gaussian_iid",
            NoiseKind::GaussianCorrelated => "gaussian_correlated",
            NoiseKind::ShiftedExponential => "shifted_exponential",
            NoiseKind::BernoulliUniformPvalue => "bernoulli_uniform_pvalue",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Scale {
    Common(f64),
    PerIndex(Vec<f64>),
}

/// A known generative model for `phi = (phi_1, ..., phi_m)`.
#[derive(Debug, Clone)]
pub struct StatisticEnsemble {
    means: Vec<f64>,
    kind: NoiseKind,
    scale: Scale,
    covariance: Option<DMatrix<f64>>,
    factor: Option<DMatrix<f64>>,
    n: Option<usize>,
}

fn check_means(means: &[f64]) -> Result<()> {
    if means.is_empty() {
        return config("ensemble needs m >= 1 statistics");
    }
    if means.iter().any(|m| !m.is_finite()) {
        return config("ensemble means must be finite");
    }
    Ok(())
}

impl StatisticEnsemble {
    /// Independent Gaussians `N(mu_i, sigma^2)`.
    pub fn gaussian(means: Vec<f64>, sigma: f64) -> Result<Self> {
        check_means(&means)?;
        if !(sigma > 0.0) || !sigma.is_finite() {
            return config(format!("sigma must be positive, got {sigma}"));
        }
        Ok(Self {
            means,
            kind: NoiseKind::GaussianIid,
            scale: Scale::Common(sigma),
            covariance: None,
            factor: None,
            n: None,
        })
    }

    /// `m` independent `N(0, sigma^2)` nulls.
    pub fn null_gaussian(m: usize, sigma: f64) -> Result<Self> {
        Self::gaussian(vec![0.0; m], sigma)
    }

    /// Independent Gaussians with per-index scales `sigma_i`.
    pub fn gaussian_hetero(means: Vec<f64>, sigmas: Vec<f64>) -> Result<Self> {
        check_means(&means)?;
        if sigmas.len() != means.len() {
            return config(format!("{} sigmas for {} means", sigmas.len(), means.len()));
        }
        if sigmas.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return config("every sigma_i must be positive");
        }
        Ok(Self {
            means,
            kind: NoiseKind::GaussianIid,
            scale: Scale::PerIndex(sigmas),
            covariance: None,
            factor: None,
            n: None,
        })
    }

    /// Jointly Gaussian statistics with the given covariance.
    ///
    /// The covariance must be symmetric and positive semidefinite up to
    /// [`PSD_TOLERANCE`] on its eigenvalues.
    pub fn gaussian_correlated(means: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        check_means(&means)?;
        let m = means.len();
        if covariance.nrows() != m || covariance.ncols() != m {
            return config(format!(
                "covariance is {}x{}, expected {m}x{m}",
                covariance.nrows(),
                covariance.ncols()
            ));
        }
        let scale = covariance.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        for i in 0..m {
            for j in 0..i {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > 1e-12 * scale {
                    return config(format!("covariance is not symmetric at ({i}, {j})"));
                }
            }
        }
        let factor = match covariance.clone().cholesky() {
            Some(ch) => ch.l(),
            None => {
                let eig = covariance.clone().symmetric_eigen();
                let min = eig.eigenvalues.min();
                if min < -PSD_TOLERANCE {
                    return config(format!(
                        "covariance is not positive semidefinite (smallest eigenvalue {min:.3e})"
                    ));
                }
                let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
                &eig.eigenvectors * DMatrix::from_diagonal(&roots)
            }
        };
        let sigmas = (0..m).map(|i| covariance[(i, i)].max(0.0).sqrt()).collect();
        Ok(Self {
            means,
            kind: NoiseKind::GaussianCorrelated,
            scale: Scale::PerIndex(sigmas),
            covariance: Some(covariance),
            factor: Some(factor),
            n: None,
        })
    }

    /// Shifted exponentials with means `mu_i`, supported on `[mu_i - 1, inf)`.
    pub fn shifted_exponential(means: Vec<f64>) -> Result<Self> {
        check_means(&means)?;
        Ok(Self {
            means,
            kind: NoiseKind::ShiftedExponential,
            scale: Scale::Common(1.0),
            covariance: None,
            factor: None,
            n: None,
        })
    }

    /// `m` independent uniform p-values (true nulls).
    pub fn uniform_pvalues(m: usize) -> Result<Self> {
        let means = vec![0.5; m];
        check_means(&means)?;
        Ok(Self {
            means,
            kind: NoiseKind::BernoulliUniformPvalue,
            scale: Scale::Common((1.0f64 / 12.0).sqrt()),
            covariance: None,
            factor: None,
            n: None,
        })
    }

    /// Interprets each statistic as an average of `n` samples, so its
    /// variance becomes `sigma^2 / n`. Gaussian kinds only.
    pub fn with_sample_size(mut self, n: usize) -> Result<Self> {
        if n == 0 {
            return config("sample size n must be >= 1");
        }
        if !matches!(self.kind, NoiseKind::GaussianIid | NoiseKind::GaussianCorrelated) {
            return config(format!("sample size applies to Gaussian ensembles, not {}", self.kind.name()));
        }
        self.n = Some(n);
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.means[i]
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn sample_size(&self) -> Option<usize> {
        self.n
    }

    pub fn covariance(&self) -> Option<&DMatrix<f64>> {
        self.covariance.as_ref()
    }

    /// Per-sample noise scale `sigma_i` (before dividing by `sqrt(n)`).
    pub fn unit_sigma(&self, i: usize) -> f64 {
        match &self.scale {
            Scale::Common(s) => *s,
            Scale::PerIndex(v) => v[i],
        }
    }

    /// Standard deviation of `phi_i` itself.
    pub fn sigma(&self, i: usize) -> f64 {
        self.unit_sigma(i) / (self.n.unwrap_or(1) as f64).sqrt()
    }

    pub fn sigmas(&self) -> Vec<f64> {
        (0..self.m()).map(|i| self.sigma(i)).collect()
    }

    /// Largest per-statistic standard deviation.
    pub fn max_sigma(&self) -> f64 {
        self.sigmas().into_iter().fold(0.0, f64::max)
    }

    /// Draws one realization of `phi`.
    pub fn sample_phi<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.m();
        let root_n = (self.n.unwrap_or(1) as f64).sqrt();
        match self.kind {
            NoiseKind::GaussianIid => (0..m)
                .map(|i| {
                    let z: f64 = StandardNormal.sample(rng);
                    self.means[i] + self.unit_sigma(i) / root_n * z
                })
                .collect(),
            NoiseKind::GaussianCorrelated => {
                let z = DVector::from_fn(m, |_, _| StandardNormal.sample(rng));
                let factor = self.factor.as_ref().expect("correlated ensemble has a factor");
                let x = factor * z;
                (0..m).map(|i| self.means[i] + x[i] / root_n).collect()
            }
            NoiseKind::ShiftedExponential => (0..m)
                .map(|i| {
                    let e: f64 = Exp1.sample(rng);
                    self.means[i] - 1.0 + e
                })
                .collect(),
            NoiseKind::BernoulliUniformPvalue => (0..m).map(|_| rng.random::<f64>()).collect(),
        }
    }

    /// Whether raw per-feature samples can be generated.
    pub fn has_raw_data(&self) -> bool {
        self.kind == NoiseKind::GaussianIid && self.n.is_some_and(|n| n >= 2)
    }

    /// Draws raw data `X[i, j] ~ N(mu_i, sigma_i^2)` for `j < n`; the row means
    /// are then distributed exactly as `phi`.
    pub fn sample_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<RawDataEnsembleView> {
        if !self.has_raw_data() {
            return config(format!(
                "raw samples need a gaussian_iid ensemble with n >= 2 (have {}, n = {:?})",
                self.kind.name(),
                self.n
            ));
        }
        let n = self.n.unwrap_or(1);
        let m = self.m();
        let mut data = Vec::with_capacity(m * n);
        for i in 0..m {
            let s = self.unit_sigma(i);
            for _ in 0..n {
                let z: f64 = StandardNormal.sample(rng);
                data.push(self.means[i] + s * z);
            }
        }
        RawDataEnsembleView::new(m, n, data)
    }

    /// Checks that `rule` can run against this ensemble.
    pub fn check_rule(&self, rule: &SelectionRule) -> Result<()> {
        if *rule == SelectionRule::VarianceFilter && !self.has_raw_data() {
            return Err(Error::Config(format!(
                "rule {} needs a raw-data gaussian_iid ensemble with n >= 2, got ensemble kind {} (n = {:?})",
                rule.name(),
                self.kind.name(),
                self.n
            )));
        }
        rule.validate(self.m()).map_err(|e| match e {
            Error::Input(msg) => Error::Config(format!(
                "rule {} incompatible with {} ensemble: {msg}",
                rule.name(),
                self.kind.name()
            )),
            other => other,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    /// Keep the full `R x m` matrix of draws. Needed by estimators that look
    /// at unselected coordinates.
    pub keep_phi: bool,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self { keep_phi: false }
    }
}

/// `R` independent draws of `phi` and the resulting selections.
#[derive(Debug, Clone)]
pub struct ReplicationBatch {
    m: usize,
    seed: u64,
    rule: SelectionRule,
    phi: Option<Vec<f64>>,
    selections: Vec<usize>,
    reported_index: Vec<usize>,
    reported_value: Vec<f64>,
    conditional_entropy: Vec<f64>,
}

impl ReplicationBatch {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn replications(&self) -> usize {
        self.selections.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rule(&self) -> &SelectionRule {
        &self.rule
    }

    /// Encoded selections; the fallback sentinel is `m`.
    pub fn selections(&self) -> &[usize] {
        &self.selections
    }

    pub fn fallback_sentinel(&self) -> usize {
        self.m
    }

    /// Coordinate actually reported per replication (fallback resolved).
    pub fn reported_index(&self) -> &[usize] {
        &self.reported_index
    }

    /// `phi_T` per replication.
    pub fn reported_value(&self) -> &[f64] {
        &self.reported_value
    }

    /// Per-replication `H(T | phi = phi_r)` in nats.
    pub fn rule_conditional_entropy(&self) -> &[f64] {
        &self.conditional_entropy
    }

    pub fn has_phi(&self) -> bool {
        self.phi.is_some()
    }

    /// Row `r` of the draw matrix, if it was kept.
    pub fn phi_row(&self, r: usize) -> Option<&[f64]> {
        self.phi.as_ref().map(|p| &p[r * self.m..(r + 1) * self.m])
    }
}

/// Samples `replications` independent draws and applies `rule` to each.
/// The draw matrix is not kept; use [`sample_batch_with`] when it is needed.
pub fn sample_batch(
    ensemble: &StatisticEnsemble,
    rule: &SelectionRule,
    replications: usize,
    seed: u64,
) -> Result<ReplicationBatch> {
    sample_batch_with(ensemble, rule, replications, seed, BatchOptions::default())
}

pub fn sample_batch_with(
    ensemble: &StatisticEnsemble,
    rule: &SelectionRule,
    replications: usize,
    seed: u64,
    options: BatchOptions,
) -> Result<ReplicationBatch> {
    if replications == 0 {
        return input("replication count must be >= 1");
    }
    ensemble.check_rule(rule)?;
    let m = ensemble.m();
    let rows: Vec<Result<(Choice, f64, Option<Vec<f64>>)>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut phi_rng = stream(seed, StreamTag::PHI, r as u64);
            let mut rule_rng = stream(seed, StreamTag::RULE, r as u64);
            let (phi, choice) = if *rule == SelectionRule::VarianceFilter {
                let view = ensemble.sample_raw(&mut phi_rng)?;
                let index = variance_filter_select(&view)?;
                let choice = Choice {
                    index,
                    fallback: false,
                    conditional_entropy: 0.0,
                };
                (view.phi(), choice)
            } else {
                let phi = ensemble.sample_phi(&mut phi_rng);
                let choice = rule.select(&phi, &mut rule_rng)?;
                (phi, choice)
            };
            let value = phi[choice.index];
            Ok((choice, value, options.keep_phi.then_some(phi)))
        })
        .collect();

    let mut batch = ReplicationBatch {
        m,
        seed,
        rule: rule.clone(),
        phi: options.keep_phi.then(|| Vec::with_capacity(replications * m)),
        selections: Vec::with_capacity(replications),
        reported_index: Vec::with_capacity(replications),
        reported_value: Vec::with_capacity(replications),
        conditional_entropy: Vec::with_capacity(replications),
    };
    for row in rows {
        let (choice, value, phi) = row?;
        batch.selections.push(if choice.fallback { m } else { choice.index });
        batch.reported_index.push(choice.index);
        batch.reported_value.push(value);
        batch.conditional_entropy.push(choice.conditional_entropy);
        if let (Some(all), Some(phi)) = (batch.phi.as_mut(), phi) {
            all.extend_from_slice(&phi);
        }
    }
    if *rule == SelectionRule::VarianceFilter {
        // Gaussian sample variances are independent of the sample means, so
        // the selection's law given phi is its marginal law.
        let h = plugin_entropy_of_labels(batch.selections.iter().copied());
        batch.conditional_entropy.iter_mut().for_each(|c| *c = h);
    }
    Ok(batch)
}

/// Error summary of the reported statistic against its true mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasSummary {
    /// Mean of `phi_T - mu_T`.
    pub bias: f64,
    pub abs_error: f64,
    pub sq_error: f64,
    /// Monte Carlo standard error of `bias`.
    pub std_error: f64,
    pub abs_error_se: f64,
    pub sq_error_se: f64,
    /// Mean of `phi_T`.
    pub mean_selected: f64,
    pub replications: usize,
}

pub fn empirical_bias(batch: &ReplicationBatch, ensemble: &StatisticEnsemble) -> Result<BiasSummary> {
    if batch.m() != ensemble.m() {
        return input(format!(
            "batch has m = {} statistics, ensemble has {}",
            batch.m(),
            ensemble.m()
        ));
    }
    let errors: Vec<f64> = batch
        .reported_index
        .iter()
        .zip(&batch.reported_value)
        .map(|(&i, &v)| v - ensemble.mean(i))
        .collect();
    let ms = stats::mean_se(&errors);
    let abs: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
    let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let abs = stats::mean_se(&abs);
    let sq = stats::mean_se(&sq);
    Ok(BiasSummary {
        bias: ms.mean,
        abs_error: abs.mean,
        sq_error: sq.mean,
        std_error: ms.se,
        abs_error_se: abs.se,
        sq_error_se: sq.se,
        mean_selected: stats::mean(&batch.reported_value),
        replications: batch.replications(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const KEEP: BatchOptions = BatchOptions { keep_phi: true };

    #[test]
    fn single_draw_argmax() {
        let e = StatisticEnsemble::null_gaussian(3, 1.0).unwrap();
        let b = sample_batch_with(&e, &SelectionRule::Argmax, 1, 7, KEEP).unwrap();
        let row = b.phi_row(0).unwrap();
        assert_eq!(row.len(), 3);
        let best = crate::selection::argmax_select(row).unwrap();
        assert_eq!(b.selections()[0], best);
        assert_eq!(b.reported_value()[0], row[best]);
    }

    #[test]
    fn single_candidate_forces_zero() {
        let e = StatisticEnsemble::gaussian(vec![0.3], 2.0).unwrap();
        for rule in [
            SelectionRule::Argmax,
            SelectionRule::TopKUniform { m0: 1 },
            SelectionRule::Gibbs { beta: 1.0, k: 1 },
            SelectionRule::GroupedMax { m0: 1 },
        ] {
            let b = sample_batch(&e, &rule, 100, 3).unwrap();
            assert!(b.selections().iter().all(|&s| s == 0));
            assert!(b.rule_conditional_entropy().iter().all(|&h| h == 0.0));
        }
    }

    #[test]
    fn zero_replications_rejected() {
        let e = StatisticEnsemble::null_gaussian(3, 1.0).unwrap();
        assert!(matches!(sample_batch(&e, &SelectionRule::Argmax, 0, 1), Err(Error::Input(_))));
    }

    #[test]
    fn incompatible_rule_names_both_kinds() {
        let e = StatisticEnsemble::shifted_exponential(vec![1.0; 4]).unwrap();
        let err = sample_batch(&e, &SelectionRule::VarianceFilter, 10, 1).unwrap_err();
        match err {
            Error::Config(msg) => {
                assert!(msg.contains("variance_filter"));
                assert!(msg.contains("shifted_exponential"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let e = StatisticEnsemble::null_gaussian(4, 1.0).unwrap();
        let err = sample_batch(&e, &SelectionRule::TopKUniform { m0: 9 }, 10, 1).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn constructor_validation() {
        assert!(StatisticEnsemble::gaussian(vec![], 1.0).is_err());
        assert!(StatisticEnsemble::gaussian(vec![0.0], 0.0).is_err());
        assert!(StatisticEnsemble::gaussian_hetero(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(StatisticEnsemble::gaussian_hetero(vec![0.0, 0.0], vec![1.0, -1.0]).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(StatisticEnsemble::gaussian_correlated(vec![0.0; 2], asym).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            StatisticEnsemble::gaussian_correlated(vec![0.0; 2], indefinite),
            Err(Error::Config(_))
        ));
        assert!(StatisticEnsemble::uniform_pvalues(3).unwrap().with_sample_size(4).is_err());
    }

    #[test]
    fn singular_psd_covariance_is_accepted() {
        // perfectly correlated pair: rank one, PSD
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let e = StatisticEnsemble::gaussian_correlated(vec![0.0, 5.0], cov).unwrap();
        let mut rng = stream(1, StreamTag::PHI, 0);
        for _ in 0..100 {
            let phi = e.sample_phi(&mut rng);
            assert!((phi[1] - phi[0] - 5.0).abs() < 1e-9);
        }
    }

    #[test]
    fn batches_are_reproducible() {
        let e = StatisticEnsemble::gaussian(vec![0.0, 0.5, 1.0, 0.2], 1.0).unwrap();
        let rule = SelectionRule::Gibbs { beta: 1.0, k: 1 };
        let a = sample_batch_with(&e, &rule, 500, 42, KEEP).unwrap();
        let b = sample_batch_with(&e, &rule, 500, 42, KEEP).unwrap();
        assert_eq!(a.selections(), b.selections());
        assert_eq!(a.phi, b.phi);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = single.install(|| sample_batch_with(&e, &rule, 500, 42, KEEP).unwrap());
        assert_eq!(a.phi, c.phi);
        assert_eq!(a.selections(), c.selections());
        let d = sample_batch_with(&e, &rule, 500, 43, KEEP).unwrap();
        assert_ne!(a.phi, d.phi);
    }

    #[test]
    fn fixed_rule_is_unbiased() {
        let e = StatisticEnsemble::gaussian(vec![1.0, -2.0, 0.5], 1.5).unwrap();
        let b = sample_batch(&e, &SelectionRule::Fixed { index: 0 }, 10_000, 9).unwrap();
        let s = empirical_bias(&b, &e).unwrap();
        assert!(s.bias.abs() <= 4.0 * s.std_error, "{s:?}");
    }

    #[test]
    fn marginal_means_match() {
        let cov = DMatrix::from_row_slice(3, 3, &[1.0, 0.6, 0.2, 0.6, 2.0, 0.3, 0.2, 0.3, 0.5]);
        let ensembles = vec![
            StatisticEnsemble::gaussian_hetero(vec![1.0, -1.0, 0.0], vec![0.5, 1.0, 2.0]).unwrap(),
            StatisticEnsemble::gaussian_correlated(vec![0.0, 2.0, -1.0], cov).unwrap(),
            StatisticEnsemble::shifted_exponential(vec![0.0, 1.0, 3.0]).unwrap(),
            StatisticEnsemble::uniform_pvalues(3).unwrap(),
            StatisticEnsemble::gaussian(vec![0.0, 1.0, 2.0], 1.0).unwrap().with_sample_size(25).unwrap(),
        ];
        let reps = 100_000;
        for e in ensembles {
            let b = sample_batch_with(&e, &SelectionRule::Argmax, reps, 5, KEEP).unwrap();
            for i in 0..3 {
                let mean = (0..reps).map(|r| b.phi_row(r).unwrap()[i]).sum::<f64>() / reps as f64;
                let tol = 4.0 * e.sigma(i) / (reps as f64).sqrt();
                assert!((mean - e.mean(i)).abs() <= tol, "{:?} i={i} mean={mean}", e.kind());
            }
        }
    }

    #[test]
    fn exponential_support_and_pvalue_range() {
        let e = StatisticEnsemble::shifted_exponential(vec![0.0, 2.5]).unwrap();
        let b = sample_batch_with(&e, &SelectionRule::Argmax, 20_000, 2, KEEP).unwrap();
        for r in 0..b.replications() {
            let row = b.phi_row(r).unwrap();
            assert!(row[0] >= -1.0 && row[1] >= 1.5);
        }
        let p = StatisticEnsemble::uniform_pvalues(4).unwrap();
        let b = sample_batch_with(&p, &SelectionRule::Argmin, 5_000, 2, KEEP).unwrap();
        for r in 0..b.replications() {
            assert!(b.phi_row(r).unwrap().iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn uniform_argmin_mean_is_one_over_m_plus_one() {
        let p = StatisticEnsemble::uniform_pvalues(5).unwrap();
        let b = sample_batch(&p, &SelectionRule::Argmin, 40_000, 8).unwrap();
        let s = empirical_bias(&b, &p).unwrap();
        assert!((s.mean_selected - 1.0 / 6.0).abs() <= 4.0 * s.std_error, "{s:?}");
    }

    #[test]
    fn threshold_batch_encodes_sentinel() {
        let e = StatisticEnsemble::null_gaussian(5, 1.0).unwrap();
        let rule = SelectionRule::Threshold { level: 1.5, fallback: 2 };
        let b = sample_batch_with(&e, &rule, 2_000, 4, KEEP).unwrap();
        assert!(b.selections().iter().any(|&s| s == 5));
        for (r, &s) in b.selections().iter().enumerate() {
            assert!(s <= 5);
            if s == 5 {
                assert_eq!(b.reported_index()[r], 2);
                assert_eq!(b.reported_value()[r], b.phi_row(r).unwrap()[2]);
            } else {
                assert_ne!(s, 2);
            }
        }
    }

    #[test]
    fn batch_mismatch_rejected() {
        let e = StatisticEnsemble::null_gaussian(3, 1.0).unwrap();
        let b = sample_batch(&e, &SelectionRule::Argmax, 10, 1).unwrap();
        let other = StatisticEnsemble::null_gaussian(4, 1.0).unwrap();
        assert!(empirical_bias(&b, &other).is_err());
    }

    #[test]
    fn keep_phi_false_drops_matrix() {
        let e = StatisticEnsemble::null_gaussian(3, 1.0).unwrap();
        let full = sample_batch_with(&e, &SelectionRule::Argmax, 50, 1, KEEP).unwrap();
        let lean = sample_batch_with(&e, &SelectionRule::Argmax, 50, 1, BatchOptions { keep_phi: false }).unwrap();
        assert!(!lean.has_phi());
        assert_eq!(full.reported_value(), lean.reported_value());
    }
}
