//! Closed-form bias and error bounds driven by information usage.
//!
//! Every function is a pure map from scalars to scalars. Logs are natural,
//! information is in nats, and results carry the units of `sigma` (or
//! `sigma^2` for squared-error bounds).

use serde::Serialize;

use crate::error::{input, Result};

/// Constant multiplying the information term of the absolute-error bound.
pub const ABS_ERROR_CONSTANT: f64 = 36.0;
/// Constant multiplying the information term of the squared-error bound.
pub const SQ_ERROR_CONSTANT: f64 = 10.0;

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return input(format!("sigma must be positive, got {sigma}"));
    }
    Ok(())
}

fn check_info(info: f64) -> Result<()> {
    if !(info >= 0.0) {
        return input(format!("information must be non-negative, got {info}"));
    }
    Ok(())
}

/// `sigma * sqrt(2 I)` for sigma-sub-Gaussian statistics.
pub fn bias_bound(sigma: f64, info: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_info(info)?;
    Ok(sigma * (2.0 * info).sqrt())
}

/// Unequal-variance form `sqrt(sum_i p_i sigma_i^2) * sqrt(2 I)`.
pub fn bias_bound_hetero(sigmas: &[f64], selection_pmf: &[f64], info: f64) -> Result<f64> {
    if sigmas.len() != selection_pmf.len() {
        return input(format!("{} sigmas for a pmf of length {}", sigmas.len(), selection_pmf.len()));
    }
    if sigmas.iter().any(|s| !(*s > 0.0)) {
        return input("every sigma_i must be positive");
    }
    if selection_pmf.iter().any(|p| !(*p >= 0.0)) {
        return input("pmf entries must be non-negative");
    }
    let total: f64 = selection_pmf.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return input(format!("pmf sums to {total}"));
    }
    check_info(info)?;
    let second_moment: f64 = sigmas.iter().zip(selection_pmf).map(|(s, p)| p * s * s).sum();
    Ok(second_moment.sqrt() * (2.0 * info).sqrt())
}

/// Bias bound for `(sigma, b)`-sub-exponential statistics: `b I + sigma^2/(2b)`,
/// tightened by `sqrt(b) I + sigma^2 / (2 sqrt(b))` when `b < 1`.
pub fn bias_bound_subexp(sigma: f64, b: f64, info: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(b > 0.0) {
        return input(format!("sub-exponential b must be positive, got {b}"));
    }
    check_info(info)?;
    let base = b * info + sigma * sigma / (2.0 * b);
    if b < 1.0 {
        let rb = b.sqrt();
        Ok(base.min(rb * info + sigma * sigma / (2.0 * rb)))
    } else {
        Ok(base)
    }
}

/// `E|phi_T - mu_T| <= sigma + 36 sigma sqrt(2 I)`.
pub fn abs_error_bound(sigma: f64, info: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_info(info)?;
    Ok(sigma + ABS_ERROR_CONSTANT * sigma * (2.0 * info).sqrt())
}

/// `E(phi_T - mu_T)^2 <= 1.25 sigma^2 + 10 sigma^2 I`.
pub fn sq_error_bound(sigma: f64, info: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_info(info)?;
    Ok(1.25 * sigma * sigma + SQ_ERROR_CONSTANT * sigma * sigma * info)
}

/// Value of a lower bound together with whether it says anything.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBound {
    pub value: f64,
    /// True when `value <= 0`, i.e. the bound is trivially satisfied.
    pub vacuous: bool,
}

/// `H/8 - 2.5`, a lower bound on the squared error of argmax over
/// unit-variance independent Gaussians. Returned unclamped.
pub fn sq_error_lower_bound(entropy: f64) -> Result<LowerBound> {
    check_info(entropy)?;
    let value = entropy / 8.0 - 2.5;
    Ok(LowerBound {
        value,
        vacuous: value <= 0.0,
    })
}

/// `10 H + 1.5`, the matching upper bound.
pub fn sq_error_upper_bound_prop3(entropy: f64) -> Result<f64> {
    check_info(entropy)?;
    Ok(10.0 * entropy + 1.5)
}

/// `sigma * sqrt(2 ln(m / m0))` for uniform choice among the top `m0` of `m`.
pub fn topk_bound(sigma: f64, m: usize, m0: usize) -> Result<f64> {
    check_sigma(sigma)?;
    if m0 == 0 || m0 > m {
        return input(format!("top-k bound needs 1 <= m0 <= m (m={m}, m0={m0})"));
    }
    if m0 == m {
        return Ok(0.0);
    }
    Ok(sigma * (2.0 * (m as f64 / m0 as f64).ln()).sqrt())
}

/// `P(p_T < eps) <= eps + sqrt(I(T; Z_eps) / ln(1 / (2 eps)))`, capped at 1.
pub fn pvalue_bound(epsilon: f64, i_tz: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return input(format!("epsilon must lie in (0, 1/2), got {epsilon}"));
    }
    check_info(i_tz)?;
    Ok((epsilon + (i_tz / (1.0 / (2.0 * epsilon)).ln()).sqrt()).min(1.0))
}

/// Bayesian regret bound `sigma * sqrt(2 H(X*))`.
pub fn regret_bound(sigma: f64, optimum_entropy: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_info(optimum_entropy)?;
    Ok(sigma * (2.0 * optimum_entropy).sqrt())
}

/// Cap on the information ERM can extract through a class of VC dimension
/// `d` on `n` points: `d * max(1, ln(n e / d))`.
pub fn vc_info_bound(d: usize, n: usize) -> Result<f64> {
    if d == 0 || n == 0 {
        return input(format!("vc bound needs d >= 1 and n >= 1 (d={d}, n={n})"));
    }
    let d_f = d as f64;
    Ok(d_f * (n as f64 * std::f64::consts::E / d_f).ln().max(1.0))
}

/// Expected train/test gap bound `sqrt(I / (2n))`.
pub fn overfit_bound(info: f64, n: usize) -> Result<f64> {
    check_info(info)?;
    if n == 0 {
        return input("n must be >= 1");
    }
    Ok((info / (2.0 * n as f64)).sqrt())
}

/// Exact Gaussian channel information `0.5 ln(1 + snr)`.
pub fn gaussian_channel_information(snr: f64) -> Result<f64> {
    check_info(snr)?;
    Ok(0.5 * snr.ln_1p())
}

/// Linear cap `snr / 2` on the Gaussian channel information.
pub fn gaussian_channel_cap(snr: f64) -> Result<f64> {
    check_info(snr)?;
    Ok(0.5 * snr)
}

/// `I(X; X + W) <= Var(X) / Var(W)` for any `X` and independent Gaussian `W`.
pub fn additive_gaussian_information_bound(var_x: f64, var_w: f64) -> Result<f64> {
    if !(var_x >= 0.0) || !(var_w > 0.0) {
        return input(format!("need var_x >= 0 and var_w > 0 (got {var_x}, {var_w})"));
    }
    Ok(var_x / var_w)
}

/// Noise schedule used by the multi-step error bound.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    /// Explicit `omega_1, omega_2, ...`.
    Generic(Vec<f64>),
    /// `omega_j = sigma * j^(1/4)`.
    FourthRoot,
}

/// Accumulated information budget `(sigma^2 / 2) sum_{j <= k} omega_j^-2`.
pub fn schedule_budget(sigma: f64, k: usize, schedule: &Schedule) -> Result<f64> {
    check_sigma(sigma)?;
    let omegas = schedule_omegas(sigma, k, schedule)?;
    Ok(0.5 * sigma * sigma * omegas[..k].iter().map(|w| w.powi(-2)).sum::<f64>())
}

fn schedule_omegas(sigma: f64, k: usize, schedule: &Schedule) -> Result<Vec<f64>> {
    match schedule {
        Schedule::FourthRoot => Ok((1..=k + 1).map(|j| sigma * (j as f64).powf(0.25)).collect()),
        Schedule::Generic(w) => {
            if w.len() < k + 1 {
                return input(format!(
                    "schedule has {} noise levels, {} needed for k = {k}",
                    w.len(),
                    k + 1
                ));
            }
            if w.iter().any(|x| !(*x > 0.0)) {
                return input("noise levels must be positive");
            }
            Ok(w[..=k].to_vec())
        }
    }
}

/// Error bound for the `(k+1)`-th answer of a noisy adaptive session:
/// `sigma/sqrt(n) + omega_{k+1} sqrt(2/(pi n)) + 36 sigma sqrt(2 I/n)` with
/// `I = (sigma^2/2) sum_{j<=k} omega_j^-2`.
pub fn multistep_error_bound(sigma: f64, n: usize, k: usize, schedule: &Schedule) -> Result<f64> {
    check_sigma(sigma)?;
    if n == 0 {
        return input("n must be >= 1");
    }
    let omegas = schedule_omegas(sigma, k, schedule)?;
    let nf = n as f64;
    let budget = schedule_budget(sigma, k, schedule)?;
    let fresh_noise = omegas[k] * (2.0 / (std::f64::consts::PI * nf)).sqrt();
    Ok(sigma / nf.sqrt() + fresh_noise + ABS_ERROR_CONSTANT * sigma * (2.0 * budget / nf).sqrt())
}

/// A bound paired with the empirical quantity it should dominate (or, for
/// lower bounds, be dominated by).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub empirical: f64,
    pub tolerance: f64,
    pub lower: bool,
    pub satisfied: bool,
    /// `value - empirical`.
    pub slack: f64,
}

impl BoundReport {
    /// Upper bound: satisfied when `empirical <= value + tolerance`.
    pub fn upper(name: impl Into<String>, value: f64, empirical: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            empirical,
            tolerance,
            lower: false,
            satisfied: empirical <= value + tolerance,
            slack: value - empirical,
        }
    }

    /// Lower bound: satisfied when `empirical >= value - tolerance`.
    pub fn lower(name: impl Into<String>, value: f64, empirical: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            empirical,
            tolerance,
            lower: true,
            satisfied: empirical >= value - tolerance,
            slack: value - empirical,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bias_bound_examples() {
        assert_eq!(bias_bound(1.0, 0.0).unwrap(), 0.0);
        assert!(close(bias_bound(1.0, 1000f64.ln()).unwrap(), 3.7169, 1e-4));
        assert!(close(bias_bound(2.0, 0.5).unwrap(), 2.0, 1e-15));
        assert!(bias_bound(1.0, -0.1).is_err());
        assert!(bias_bound(0.0, 1.0).is_err());
    }

    #[test]
    fn hetero_examples() {
        let h = bias_bound_hetero(&[1.0, 3.0], &[0.5, 0.5], 2f64.ln()).unwrap();
        assert!(close(h, 5f64.sqrt() * (2.0 * 2f64.ln()).sqrt(), 1e-12));
        assert!(close(h, 2.633, 1e-3));
        assert_eq!(bias_bound_hetero(&[1.0, 3.0], &[0.5, 0.5], 0.0).unwrap(), 0.0);
        assert!(bias_bound_hetero(&[1.0], &[0.5, 0.5], 1.0).is_err());
    }

    #[test]
    fn subexp_examples() {
        assert!(close(bias_bound_subexp(2.0, 4.0, 1.0).unwrap(), 4.5, 1e-12));
        assert!(close(bias_bound_subexp(1.0, 0.25, 2.0).unwrap(), 2.0, 1e-12));
        assert!(close(bias_bound_subexp(2.0, 4.0, 0.0).unwrap(), 0.5, 1e-12));
        // b < 1, zero information: the sqrt(b) branch gives sigma^2/(2 sqrt b)
        assert!(close(bias_bound_subexp(1.0, 0.25, 0.0).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn error_bound_examples() {
        assert_eq!(abs_error_bound(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(sq_error_bound(1.0, 0.0).unwrap(), 1.25);
        assert!(close(sq_error_bound(0.5, 2.0).unwrap(), 5.3125, 1e-12));
    }

    #[test]
    fn prop3_examples() {
        let lb = sq_error_lower_bound(2f64.ln()).unwrap();
        assert!(close(lb.value, -2.413, 1e-3));
        assert!(lb.vacuous);
        let lb = sq_error_lower_bound(40.0).unwrap();
        assert!(close(lb.value, 2.5, 1e-12) && !lb.vacuous);
        assert!(close(sq_error_upper_bound_prop3(40.0).unwrap(), 401.5, 1e-12));
        assert_eq!(sq_error_lower_bound(0.0).unwrap().value, -2.5);
        assert_eq!(sq_error_upper_bound_prop3(0.0).unwrap(), 1.5);
    }

    #[test]
    fn topk_examples() {
        assert!(close(topk_bound(1.0, 1000, 1).unwrap(), 3.7169, 1e-4));
        assert_eq!(topk_bound(1.0, 17, 17).unwrap(), 0.0);
        assert!(close(topk_bound(1.0, 4096, 16).unwrap(), 3.330, 1e-3));
        assert!(topk_bound(1.0, 4, 5).is_err());
    }

    #[test]
    fn pvalue_examples() {
        assert_eq!(pvalue_bound(0.05, 0.0).unwrap(), 0.05);
        assert!(close(pvalue_bound(0.05, 5f64.ln()).unwrap(), 0.886, 1e-3));
        assert_eq!(pvalue_bound(0.05, 100.0).unwrap(), 1.0);
        assert!(pvalue_bound(0.5, 1.0).is_err());
    }

    #[test]
    fn regret_and_vc_examples() {
        assert_eq!(regret_bound(1.0, 0.0).unwrap(), 0.0);
        assert!(close(regret_bound(1.0, 10f64.ln()).unwrap(), 2.146, 1e-3));
        assert!(close(regret_bound(3.0, 2.0).unwrap(), 6.0, 1e-12));
        assert!(close(vc_info_bound(1, 100).unwrap(), 5.605, 1e-3));
        assert!(close(vc_info_bound(37, 37).unwrap(), 37.0, 1e-12));
        assert!(close(vc_info_bound(1, 16).unwrap(), 3.773, 1e-3));
        assert_eq!(overfit_bound(0.0, 10).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_channel() {
        assert!(close(gaussian_channel_information(1.0).unwrap(), 0.5 * 2f64.ln(), 1e-15));
        assert!(gaussian_channel_information(4.0).unwrap() <= gaussian_channel_cap(4.0).unwrap());
        assert_eq!(additive_gaussian_information_bound(2.0, 4.0).unwrap(), 0.5);
    }

    #[test]
    fn multistep_examples() {
        // no history: only the noise floor and the fresh-noise term remain
        let b = multistep_error_bound(1.0, 100, 0, &Schedule::FourthRoot).unwrap();
        assert!(close(b, 0.1 + (2.0 / (std::f64::consts::PI * 100.0)).sqrt(), 1e-12));
        let budget = schedule_budget(1.0, 4, &Schedule::FourthRoot).unwrap();
        let expected = 0.5 * (1.0 + 1.0 / 2f64.sqrt() + 1.0 / 3f64.sqrt() + 0.5);
        assert!(close(budget, expected, 1e-12));
        assert!(close(budget, 1.392, 1e-3));
        assert!(multistep_error_bound(1.0, 100, 2, &Schedule::Generic(vec![1.0, 1.0])).is_err());
        assert!(multistep_error_bound(1.0, 100, 1, &Schedule::Generic(vec![1.0, 0.0])).is_err());
    }

    #[test]
    fn multistep_fourth_root_scaling() {
        let n = 10_000;
        let ratio = |k: usize| {
            multistep_error_bound(1.0, n, 16 * k, &Schedule::FourthRoot).unwrap()
                / multistep_error_bound(1.0, n, k, &Schedule::FourthRoot).unwrap()
        };
        assert!(close(ratio(1 << 16), 2.0, 0.01));
        assert!((ratio(1 << 16) - 2.0).abs() < (ratio(16) - 2.0).abs());
    }

    #[test]
    fn reports() {
        let r = BoundReport::upper("x", 1.0, 1.05, 0.1);
        assert!(r.satisfied);
        assert!(close(r.slack, -0.05, 1e-12));
        let r = BoundReport::lower("y", 1.0, 0.5, 0.1);
        assert!(!r.satisfied);
    }

    proptest! {
        #[test]
        fn upper_bounds_monotone(s1 in 0.01f64..10.0, ds in 0.0f64..5.0, i1 in 0.0f64..20.0, di in 0.0f64..5.0) {
            let (s2, i2) = (s1 + ds, i1 + di);
            prop_assert!(bias_bound(s1, i1).unwrap() <= bias_bound(s2, i2).unwrap() + 1e-12);
            prop_assert!(abs_error_bound(s1, i1).unwrap() <= abs_error_bound(s2, i2).unwrap() + 1e-12);
            prop_assert!(sq_error_bound(s1, i1).unwrap() <= sq_error_bound(s2, i2).unwrap() + 1e-12);
            prop_assert!(regret_bound(s1, i1).unwrap() <= regret_bound(s2, i2).unwrap() + 1e-12);
            prop_assert!(bias_bound_subexp(s1, 0.5, i1).unwrap() <= bias_bound_subexp(s2, 0.5, i2).unwrap() + 1e-12);
            prop_assert!(sq_error_upper_bound_prop3(i1).unwrap() <= sq_error_upper_bound_prop3(i2).unwrap());
            prop_assert!(overfit_bound(i1, 10).unwrap() <= overfit_bound(i2, 10).unwrap() + 1e-12);
        }

        #[test]
        fn hetero_reduces_to_common(sigma in 0.01f64..10.0, info in 0.0f64..20.0, m in 1usize..20) {
            let pmf = vec![1.0 / m as f64; m];
            let a = bias_bound_hetero(&vec![sigma; m], &pmf, info).unwrap();
            let b = bias_bound(sigma, info).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }

        #[test]
        fn topk_non_increasing(m in 2usize..5000, a in 1usize..5000, b in 1usize..5000) {
            let (lo, hi) = (a.min(b).min(m), a.max(b).min(m));
            prop_assert!(topk_bound(1.0, m, lo).unwrap() >= topk_bound(1.0, m, hi).unwrap());
        }
    }
}
