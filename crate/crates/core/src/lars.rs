//! Least Angle Regression as a sequence of maximum selections.
//!
//! Synthetic sparse regression: `X` is `n_rows x n_features` with iid
//! standard normal entries, each row rescaled to unit sample variance, the
//! first `n_signals` coefficients equal `s`, and `y = X beta + eps`. The
//! statistic attached to feature `j` is its univariate least-squares
//! coefficient. Each LARS entry `T_i` selects a (feature, sign) pair, and the
//! bias of that selection is `sign(b_hat) (b_hat - b_star)`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::bias_bound_hetero;
use crate::error::{input, Result};
use crate::infotheory::{plugin_entropy, Correction};
use crate::rng::{stream, StreamTag};
use crate::stats::{mean_se, ols_slope, MeanSe};

/// Smallest step length treated as a genuine move along the path.
const STEP_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LarsExperimentConfig {
    pub n_rows: usize,
    pub n_features: usize,
    pub n_signals: usize,
    pub signal_strength: f64,
    pub noise_variance: f64,
    pub n_steps: usize,
    pub replications: usize,
    pub seed: u64,
}

impl LarsExperimentConfig {
    /// The standard setting with signal strength `s`.
    pub fn with_strength(s: f64) -> Self {
        Self {
            n_rows: 100,
            n_features: 1000,
            n_signals: 20,
            signal_strength: s,
            noise_variance: 0.1,
            n_steps: 50,
            replications: 200,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rows < 2 || self.n_features == 0 {
            return input("LARS needs at least 2 rows and 1 feature");
        }
        if self.n_signals > self.n_features {
            return input(format!(
                "n_signals = {} exceeds n_features = {}",
                self.n_signals, self.n_features
            ));
        }
        if !(self.signal_strength > 0.0) {
            return input(format!("signal strength must be positive, got {}", self.signal_strength));
        }
        if !(self.noise_variance >= 0.0) {
            return input("noise variance must be non-negative");
        }
        if self.n_steps == 0 || self.n_steps > (self.n_rows - 1).min(self.n_features) {
            return input(format!(
                "n_steps = {} must lie in 1..={}",
                self.n_steps,
                (self.n_rows - 1).min(self.n_features)
            ));
        }
        if self.replications == 0 {
            return input("replications must be >= 1");
        }
        Ok(())
    }
}

/// Fixed design and noiseless response.
#[derive(Debug, Clone)]
pub struct LarsData {
    pub x: DMatrix<f64>,
    pub beta: Vec<f64>,
    pub y_star: Vec<f64>,
}

impl LarsData {
    /// `y = y* + eps` for bootstrap replication `r`.
    pub fn response(&self, config: &LarsExperimentConfig, r: u64) -> Vec<f64> {
        let mut rng = stream(config.seed, StreamTag::BOOTSTRAP, r);
        let sd = config.noise_variance.sqrt();
        self.y_star
            .iter()
            .map(|v| {
                let z: f64 = StandardNormal.sample(&mut rng);
                v + sd * z
            })
            .collect()
    }
}

/// Draws the design and the noiseless response for `config`.
pub fn generate_lars_data(config: &LarsExperimentConfig) -> Result<LarsData> {
    config.validate()?;
    let (n, p) = (config.n_rows, config.n_features);
    let mut rng = stream(config.seed, StreamTag::DESIGN, 0);
    let mut x = DMatrix::<f64>::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            x[(i, j)] = StandardNormal.sample(&mut rng);
        }
    }
    for i in 0..n {
        let row: Vec<f64> = x.row(i).iter().copied().collect();
        let sd = crate::stats::variance(&row).sqrt();
        for j in 0..p {
            x[(i, j)] /= sd;
        }
    }
    let beta: Vec<f64> = (0..p)
        .map(|j| if j < config.n_signals { config.signal_strength } else { 0.0 })
        .collect();
    let y_star = (&x * DVector::from_column_slice(&beta)).as_slice().to_vec();
    Ok(LarsData { x, beta, y_star })
}

/// `beta_j = <x_j, target> / <x_j, x_j>` for every column.
pub fn univariate_coefficients(x: &DMatrix<f64>, target: &[f64]) -> Result<Vec<f64>> {
    if target.len() != x.nrows() {
        return input(format!("target has {} entries for {} rows", target.len(), x.nrows()));
    }
    let t = DVector::from_column_slice(target);
    x.column_iter()
        .enumerate()
        .map(|(j, col)| {
            let nn = col.norm_squared();
            if nn == 0.0 {
                return input(format!("column {j} has zero norm"));
            }
            Ok(col.dot(&t) / nn)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LarsPath {
    pub entry_order: Vec<usize>,
    /// Set when the active set became rank deficient before `n_steps`.
    pub stopped_early: bool,
}

/// Centers every column and scales it to unit norm; constant columns are
/// flagged unusable and never enter the path.
fn standardize(x: &DMatrix<f64>) -> (DMatrix<f64>, Vec<bool>) {
    let mut z = x.clone();
    let mut usable = vec![true; x.ncols()];
    for (j, mut col) in z.column_iter_mut().enumerate() {
        let m = col.mean();
        col.add_scalar_mut(-m);
        let norm = col.norm();
        if norm <= 1e-12 * (x.nrows() as f64).sqrt() {
            usable[j] = false;
            col.fill(0.0);
        } else {
            col /= norm;
        }
    }
    (z, usable)
}

/// Order in which features enter the LARS path (equiangular direction,
/// shortest step to the next equal-correlation event), for up to `n_steps`
/// entries.
pub fn lars_path(x: &DMatrix<f64>, y: &[f64], n_steps: usize) -> Result<LarsPath> {
    let (n, p) = x.shape();
    if y.len() != n {
        return input(format!("response has {} entries for {n} rows", y.len()));
    }
    if n < 2 || n_steps > (n - 1).min(p) {
        return input(format!("n_steps = {n_steps} exceeds min(rows - 1, cols) = {}", (n.max(1) - 1).min(p)));
    }
    let (z, usable) = standardize(x);
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let mut residual = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    let mut active: Vec<usize> = Vec::with_capacity(n_steps);
    let mut is_active = vec![false; p];
    let mut corr = z.tr_mul(&residual);
    let mut stopped_early = false;

    // first entry: largest absolute correlation
    let mut first: Option<(usize, f64)> = None;
    for j in (0..p).filter(|&j| usable[j]) {
        let c = corr[j].abs();
        if first.is_none_or(|(_, b)| c > b) {
            first = Some((j, c));
        }
    }
    match first {
        Some((j, c)) if c > 0.0 && n_steps > 0 => {
            active.push(j);
            is_active[j] = true;
        }
        _ => {
            return Ok(LarsPath {
                entry_order: active,
                stopped_early: n_steps > 0,
            })
        }
    }

    while active.len() < n_steps {
        let big_c = active.iter().map(|&j| corr[j].abs()).fold(0.0, f64::max);
        let k = active.len();
        let signs: Vec<f64> = active.iter().map(|&j| corr[j].signum()).collect();
        let xa = DMatrix::from_fn(n, k, |i, a| z[(i, active[a])] * signs[a]);
        let gram = xa.tr_mul(&xa);
        let Some(chol) = gram.cholesky() else {
            stopped_early = true;
            break;
        };
        let ginv_one = chol.solve(&DVector::from_element(k, 1.0));
        let denom = ginv_one.sum();
        if !(denom > 0.0) || !denom.is_finite() {
            stopped_early = true;
            break;
        }
        let aa = denom.powf(-0.5);
        let w = ginv_one * aa;
        let u = &xa * w;
        let a = z.tr_mul(&u);

        let mut next: Option<(usize, f64)> = None;
        for j in (0..p).filter(|&j| usable[j] && !is_active[j]) {
            for g in [(big_c - corr[j]) / (aa - a[j]), (big_c + corr[j]) / (aa + a[j])] {
                if g > STEP_EPS && g.is_finite() && next.is_none_or(|(_, b)| g < b) {
                    next = Some((j, g));
                }
            }
        }
        let Some((j, gamma)) = next else {
            stopped_early = true;
            break;
        };
        residual -= &u * gamma;
        corr = z.tr_mul(&residual);
        active.push(j);
        is_active[j] = true;
    }
    Ok(LarsPath {
        entry_order: active,
        stopped_early,
    })
}

/// One step of the information curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LarsStep {
    pub step: usize,
    /// Plug-in `H(T_i)` of the (feature, sign) entering at this step; the
    /// path is deterministic given the data, so this is `I(T_i; phi)`.
    pub info_step: f64,
    /// `sigma_coef sqrt(2 H(T_i))`.
    pub bound_step: f64,
    pub bias_step: MeanSe,
    /// Information of a feature drawn uniformly from the first `i` entries.
    pub info_running: f64,
    pub bound_running: f64,
    /// Average over the first `i` entries of the sign-aligned bias.
    pub bias_running: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LarsCurve {
    pub config: LarsExperimentConfig,
    pub steps: Vec<LarsStep>,
    /// Root-mean-square resampling spread of the univariate coefficients.
    pub sigma_coef: f64,
    /// Replications whose path stopped before `n_steps`.
    pub early_stops: usize,
}

impl LarsCurve {
    /// OLS slope of the running bias against step.
    pub fn bias_trend(&self) -> f64 {
        let steps: Vec<f64> = self.steps.iter().map(|s| s.step as f64).collect();
        let bias: Vec<f64> = self.steps.iter().map(|s| s.bias_running.mean).collect();
        ols_slope(&steps, &bias)
    }

    /// OLS slope of the running bound against step.
    pub fn bound_trend(&self) -> f64 {
        let steps: Vec<f64> = self.steps.iter().map(|s| s.step as f64).collect();
        let bound: Vec<f64> = self.steps.iter().map(|s| s.bound_running).collect();
        ols_slope(&steps, &bound)
    }
}

fn label(feature: usize, positive: bool) -> usize {
    2 * feature + usize::from(positive)
}

fn entropy_of(counts: &HashMap<usize, u64>) -> f64 {
    let mut c: Vec<u64> = counts.values().copied().collect();
    c.sort_unstable();
    plugin_entropy(&c, Correction::None).unwrap_or(0.0)
}

fn spread_bound(counts: &HashMap<usize, u64>, sd: &[f64], info: f64) -> Result<f64> {
    let total: u64 = counts.values().sum();
    let mut keys: Vec<usize> = counts.keys().copied().collect();
    keys.sort_unstable();
    let sigmas: Vec<f64> = keys.iter().map(|k| sd[k / 2].max(f64::MIN_POSITIVE)).collect();
    let pmf: Vec<f64> = keys.iter().map(|k| counts[k] as f64 / total as f64).collect();
    bias_bound_hetero(&sigmas, &pmf, info.max(0.0))
}

/// Parametric bootstrap of the LARS entry sequence with `X` held fixed.
pub fn lars_information_curve(config: &LarsExperimentConfig) -> Result<LarsCurve> {
    config.validate()?;
    let data = generate_lars_data(config)?;
    let b_star = univariate_coefficients(&data.x, &data.y_star)?;
    let steps = config.n_steps;

    struct Rep {
        coef: Vec<f64>,
        labels: Vec<usize>,
        bias: Vec<f64>,
        early: bool,
    }
    let reps: Vec<Result<Rep>> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let y = data.response(config, r as u64);
            let coef = univariate_coefficients(&data.x, &y)?;
            let path = lars_path(&data.x, &y, steps)?;
            let mut labels = Vec::with_capacity(steps);
            let mut bias = Vec::with_capacity(steps);
            for &j in &path.entry_order {
                let sign = if coef[j] >= 0.0 { 1.0 } else { -1.0 };
                labels.push(label(j, sign > 0.0));
                bias.push(sign * (coef[j] - b_star[j]));
            }
            Ok(Rep {
                coef,
                labels,
                bias,
                early: path.stopped_early,
            })
        })
        .collect();
    let reps: Vec<Rep> = reps.into_iter().collect::<Result<_>>()?;

    // resampling spread of each univariate coefficient
    let p = config.n_features;
    let sd: Vec<f64> = (0..p)
        .map(|j| {
            let v: Vec<f64> = reps.iter().map(|r| r.coef[j]).collect();
            crate::stats::variance(&v).sqrt()
        })
        .collect();
    let sigma_coef = (sd.iter().map(|s| s * s).sum::<f64>() / p as f64).sqrt();

    let depth = reps.iter().map(|r| r.labels.len()).min().unwrap_or(0);
    let mut out = Vec::with_capacity(depth);
    let mut pooled: HashMap<usize, u64> = HashMap::new();
    let mut running_sum = vec![0.0; reps.len()];
    for i in 0..depth {
        let mut here: HashMap<usize, u64> = HashMap::new();
        for r in &reps {
            *here.entry(r.labels[i]).or_insert(0) += 1;
            *pooled.entry(r.labels[i]).or_insert(0) += 1;
        }
        let info_step = entropy_of(&here);
        let info_running = (entropy_of(&pooled) - ((i + 1) as f64).ln()).max(0.0);
        let step_bias: Vec<f64> = reps.iter().map(|r| r.bias[i]).collect();
        for (acc, r) in running_sum.iter_mut().zip(&reps) {
            *acc += r.bias[i];
        }
        let running: Vec<f64> = running_sum.iter().map(|s| s / (i + 1) as f64).collect();
        out.push(LarsStep {
            step: i + 1,
            info_step,
            bound_step: spread_bound(&here, &sd, info_step)?,
            bias_step: mean_se(&step_bias),
            info_running,
            bound_running: spread_bound(&pooled, &sd, info_running)?,
            bias_running: mean_se(&running),
        });
    }
    Ok(LarsCurve {
        config: config.clone(),
        steps: out,
        sigma_coef,
        early_stops: reps.iter().filter(|r| r.early).count(),
    })
}

/// Reference LARS: direction from an explicit least-squares solve of
/// the residual on the active columns, entry time by bisection on each
/// inactive correlation. Slow; for validating [`lars_path`] on small
/// instances.
pub fn reference_entry_order(x: &DMatrix<f64>, y: &[f64], steps: usize) -> Vec<usize> {
    let (n, p) = x.shape();
    let mut z = x.clone();
    for mut col in z.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
        let nn = col.norm();
        col /= nn;
    }
    let ym = y.iter().sum::<f64>() / n as f64;
    let mut r = DVector::from_iterator(n, y.iter().map(|v| v - ym));
    let c0 = z.tr_mul(&r);
    let first = (0..p).max_by(|&a, &b| c0[a].abs().total_cmp(&c0[b].abs()).then(b.cmp(&a))).unwrap();
    let mut active = vec![first];
    while active.len() < steps {
        let xa = DMatrix::from_fn(n, active.len(), |i, a| z[(i, active[a])]);
        let coef = xa.clone().svd(true, true).solve(&r, 1e-14).unwrap();
        let d = &xa * coef;
        let c = z.tr_mul(&r);
        let cd = z.tr_mul(&d);
        let big_c = c[active[0]].abs();
        let mut best = (usize::MAX, f64::INFINITY);
        for j in (0..p).filter(|j| !active.contains(j)) {
            let f = |t: f64| (c[j] - t * cd[j]).abs() - big_c * (1.0 - t);
            let (mut lo, mut hi) = (0.0, 1.0);
            if f(hi) < 0.0 {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            if hi < best.1 {
                best = (j, hi);
            }
        }
        r -= &d * best.1;
        active.push(best.0);
    }
    active
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_instance(seed: u64, rows: usize, cols: usize) -> (DMatrix<f64>, Vec<f64>) {
        let mut rng = stream(seed, StreamTag::DESIGN, 99);
        let x = DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng));
        let y: Vec<f64> = (0..rows).map(|_| rng.random_range(-2.0..2.0)).collect();
        (x, y)
    }

    #[test]
    fn orthogonal_design_orders() {
        let x = DMatrix::from_row_slice(4, 4, &[
            1.0, 1.0, 1.0, 0.0, //
            1.0, -1.0, -1.0, 0.0, //
            -1.0, 1.0, -1.0, 0.0, //
            -1.0, -1.0, 1.0, 0.0,
        ]);
        let y: Vec<f64> = (0..4).map(|i| x[(i, 2)]).collect();
        assert_eq!(lars_path(&x, &y, 1).unwrap().entry_order, vec![2]);
        let y: Vec<f64> = (0..4).map(|i| 2.0 * x[(i, 0)] + x[(i, 1)]).collect();
        let path = lars_path(&x, &y, 2).unwrap();
        assert_eq!(path.entry_order, vec![0, 1]);
    }

    #[test]
    fn small_instance_matches_reference() {
        let (x, y) = random_instance(5, 5, 3);
        assert_eq!(lars_path(&x, &y, 3).unwrap().entry_order, reference_entry_order(&x, &y, 3));
    }

    #[test]
    fn fifty_instances_match_reference() {
        let mut rng = stream(11, StreamTag::DESIGN, 0);
        for t in 0..50 {
            let rows = rng.random_range(4..=20);
            let cols = rng.random_range(2..=10);
            let (x, y) = random_instance(100 + t, rows, cols);
            let steps = (rows - 1).min(cols);
            let fast = lars_path(&x, &y, steps).unwrap();
            assert_eq!(fast.entry_order, reference_entry_order(&x, &y, steps), "instance {t}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let (x, y) = random_instance(1, 5, 3);
        assert!(lars_path(&x, &y, 5).is_err());
        assert!(lars_path(&x, &y[..4], 2).is_err());
        let zero = DMatrix::<f64>::zeros(3, 2);
        assert!(univariate_coefficients(&zero, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn univariate_examples() {
        let (x, _) = random_instance(3, 10, 4);
        let col: Vec<f64> = x.column(2).iter().copied().collect();
        let b = univariate_coefficients(&x, &col).unwrap();
        assert!((b[2] - 1.0).abs() < 1e-12);
        // matches the 1-column normal equations
        let t: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let b = univariate_coefficients(&x, &t).unwrap();
        for j in 0..4 {
            let xj = x.columns(j, 1).into_owned();
            let lhs = xj.tr_mul(&xj);
            let rhs = xj.tr_mul(&DVector::from_column_slice(&t));
            let solved = lhs.lu().solve(&rhs).unwrap()[0];
            assert!((b[j] - solved).abs() < 1e-12);
        }
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        assert_eq!(univariate_coefficients(&x, &[0.0, 5.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn generated_data_properties() {
        let mut cfg = LarsExperimentConfig::with_strength(0.06);
        cfg.noise_variance = 0.0;
        let d = generate_lars_data(&cfg).unwrap();
        for i in 0..cfg.n_rows {
            let row: Vec<f64> = d.x.row(i).iter().copied().collect();
            assert!((crate::stats::variance(&row) - 1.0).abs() < 1e-12);
        }
        assert_eq!(d.response(&cfg, 3), d.y_star);
        let partial: Vec<f64> = (0..cfg.n_rows)
            .map(|i| (0..20).map(|j| d.x[(i, j)] * 0.06).sum())
            .collect();
        for (a, b) in partial.iter().zip(&d.y_star) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_curve_is_degenerate() {
        let mut cfg = LarsExperimentConfig::with_strength(0.06);
        cfg.noise_variance = 0.0;
        cfg.n_steps = 10;
        let curve = lars_information_curve(&cfg).unwrap();
        for s in &curve.steps {
            assert_eq!(s.info_step, 0.0);
            assert!(s.info_running < 1e-12);
            assert!(s.bias_step.mean.abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn permutation_and_scale(seed in 0u64..1000, rows in 6usize..20, cols in 2usize..10, c in 0.01f64..100.0) {
            let (x, y) = random_instance(seed, rows, cols);
            let steps = (rows - 1).min(cols);
            let base = lars_path(&x, &y, steps).unwrap().entry_order;
            let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
            prop_assert_eq!(&lars_path(&x, &scaled, steps).unwrap().entry_order, &base);
            // reverse the columns
            let perm: Vec<usize> = (0..cols).rev().collect();
            let xp = DMatrix::from_fn(rows, cols, |i, j| x[(i, perm[j])]);
            let permuted = lars_path(&xp, &y, steps).unwrap().entry_order;
            let mapped: Vec<usize> = permuted.iter().map(|&j| perm[j]).collect();
            prop_assert_eq!(mapped, base);
        }
    }
}
