use rand::Rng;
use rayon::prelude::*;

use super::{Check, ExperimentOutput, ParamSpec, Params, PlotSpec, Table};
use crate::bounds::{pvalue_bound, sq_error_lower_bound, sq_error_upper_bound_prop3};
use crate::classify::{overfitting_audit, ClassificationSetup, FunctionClass};
use crate::ensemble::{empirical_bias, sample_batch, sample_batch_with, BatchOptions, StatisticEnsemble};
use crate::error::{input, Result};
use crate::infotheory::{
    approx_max_information_lower_bound, estimate_information_usage, max_information_rank, pvalue_information,
    selection_pmf, Correction,
};
use crate::multistep::{
    composition_audit, linear_reconstruction_demo, scaling_exponent, simulate_sessions, AnalystScript, AuditSize,
    NoiseSchedule,
};
use crate::rng::{stream, StreamTag};
use crate::selection::SelectionRule;

pub(super) const MULTISTEP_PARAMS: &[ParamSpec] = &[
    ParamSpec { key: "m", default: 1024.0, help: "statistics available to the analyst" },
    ParamSpec { key: "n", default: 1e6, help: "samples behind each statistic" },
    ParamSpec { key: "sigma", default: 1.0, help: "per-sample noise scale" },
    ParamSpec { key: "k_min", default: 16.0, help: "shortest history" },
    ParamSpec { key: "k_max", default: 1024.0, help: "longest history (k grows by factors of 4)" },
    ParamSpec { key: "linear_k", default: 100.0, help: "dimension of the linear-model demo" },
    ParamSpec { key: "linear_n", default: 1e4, help: "sample size of the linear-model demo" },
    ParamSpec { key: "audit_m", default: 10.0, help: "statistics in the composition audit" },
    ParamSpec { key: "audit_k", default: 5.0, help: "queries in the composition audit" },
];

/// Greedy analyst with and without the fourth-root noise schedule, the
/// adaptive linear-model demonstration, and the composition audit.
pub(super) fn multistep(params: &Params, reps: usize) -> Result<ExperimentOutput> {
    let p = MULTISTEP_PARAMS;
    let (m, n, sigma) = (params.count(p, "m")?, params.count(p, "n")?, params.get(p, "sigma"));
    let (k_min, k_max) = (params.count(p, "k_min")?, params.count(p, "k_max")?);
    if k_min == 0 || k_max < k_min {
        return input("multistep needs 1 <= k_min <= k_max");
    }
    let mut ks = vec![k_min];
    while ks.last().unwrap() * 4 <= k_max {
        ks.push(ks.last().unwrap() * 4);
    }
    let ensemble = StatisticEnsemble::null_gaussian(m, sigma)?.with_sample_size(n)?;
    let script = AnalystScript::GreedyMaxResponse;

    let mut table = Table::new("multistep", &["noise", "k", "abs_error", "abs_error_se", "bias", "budget", "bound"]);
    let mut checks = Vec::new();
    let mut noisy_errors = Vec::new();
    for (label, schedule) in [("fourth_root", NoiseSchedule::FourthRoot), ("none", NoiseSchedule::Noiseless)] {
        for &k in &ks {
            let s = simulate_sessions(&ensemble, &schedule, &script, k, reps, params.seed)?;
            table.push(vec![
                label.into(),
                k.into(),
                s.abs_error.mean.into(),
                s.abs_error.se.into(),
                s.error.mean.into(),
                s.budget.into(),
                s.bound.unwrap_or(f64::NAN).into(),
            ]);
            if let Some(b) = s.bound {
                checks.push(Check::new(
                    format!("k={k}: error within bound"),
                    s.abs_error.mean <= b,
                    format!("{:.3e} <= {:.3e}", s.abs_error.mean, b),
                ));
                noisy_errors.push(s.abs_error.mean);
            }
        }
    }
    if ks.len() >= 2 {
        let a = scaling_exponent(&ks, &noisy_errors)?;
        checks.push(Check::new(
            "fourth-root error exponent in [0.15, 0.35]",
            (0.15..=0.35).contains(&a),
            format!("fitted exponent {a:.3}"),
        ));
    }
    let budget4 = NoiseSchedule::FourthRoot.budget(sigma, 4).unwrap_or(f64::NAN) / (sigma * sigma);
    checks.push(Check::new(
        "budget after four fourth-root queries",
        (budget4 - 1.392).abs() < 5e-4,
        format!("{budget4:.6} nats per sigma^2"),
    ));

    let (lk, ln) = (params.count(p, "linear_k")?, params.count(p, "linear_n")?);
    let plain = linear_reconstruction_demo(lk, ln, sigma, false, reps, params.seed)?;
    let noisy = linear_reconstruction_demo(lk, ln, sigma, true, reps, params.seed)?;
    let mut linear = Table::new(
        "linear",
        &["noise", "k_dims", "n", "inner_product", "inner_product_se", "abs_error", "chi_oracle", "bound"],
    );
    for (label, d) in [("none", &plain), ("fourth_root", &noisy)] {
        linear.push(vec![
            label.into(),
            d.k_dims.into(),
            d.n.into(),
            d.inner_product.mean.into(),
            d.inner_product.se.into(),
            d.abs_error.mean.into(),
            d.chi_oracle.into(),
            d.bound.unwrap_or(f64::NAN).into(),
        ]);
    }
    let rel = plain.inner_product.mean / plain.chi_oracle - 1.0;
    checks.push(Check::new(
        "noiseless reconstruction matches chi mean",
        rel.abs() <= 0.05,
        format!("{:.5} vs {:.5}", plain.inner_product.mean, plain.chi_oracle),
    ));
    checks.push(Check::new(
        "noise reduces reconstruction",
        noisy.inner_product.mean < plain.inner_product.mean
            && noisy.abs_error.mean <= noisy.bound.unwrap_or(f64::INFINITY),
        format!("{:.5} < {:.5}", noisy.inner_product.mean, plain.inner_product.mean),
    ));

    let audit_ensemble =
        StatisticEnsemble::null_gaussian(params.count(p, "audit_m")?, sigma)?.with_sample_size(n)?;
    let audit = composition_audit(
        &audit_ensemble,
        &NoiseSchedule::Constant { omega: sigma },
        &script,
        params.count(p, "audit_k")?,
        AuditSize::default(),
        params.seed,
    )?;
    let mut audit_table = Table::new(
        "audit",
        &["step", "budget", "H_T", "H_T_given_phi", "information", "information_se"],
    );
    for s in &audit.steps {
        audit_table.push(vec![
            s.step.into(),
            s.budget.into(),
            s.h_t.into(),
            s.h_t_given_phi.into(),
            s.information.into(),
            s.information_se.into(),
        ]);
    }
    let bad = audit.steps.iter().find(|s| !s.within_budget);
    checks.push(Check::new(
        "composition: information within budget",
        bad.is_none(),
        bad.map_or("every step".into(), |s| format!("step {}: {:.3} > {:.3}", s.step, s.information, s.budget)),
    ));

    Ok(ExperimentOutput {
        experiment: "multistep".into(),
        tables: vec![table, linear, audit_table],
        checks,
        plot: Some(PlotSpec {
            title: "Final-answer error of a greedy analyst".into(),
            x: "k".into(),
            y: vec!["abs_error".into()],
            group: Some("noise".into()),
            x_label: "queries k".into(),
            y_label: "E|Y - mu|".into(),
        }),
    })
}

pub(super) const PVALUE_PARAMS: &[ParamSpec] = &[
    ParamSpec { key: "m", default: 5.0, help: "number of p-values" },
    ParamSpec { key: "epsilon", default: 0.05, help: "significance threshold" },
];

/// Reports the smallest of `m` independent uniform p-values.
pub(super) fn pvalue(params: &Params, reps: usize) -> Result<ExperimentOutput> {
    let m = params.count(PVALUE_PARAMS, "m")?;
    let eps = params.get(PVALUE_PARAMS, "epsilon");
    let ensemble = StatisticEnsemble::uniform_pvalues(m)?;
    let mut table = Table::new(
        "pvalue",
        &["rule", "m", "epsilon", "p_small", "p_small_se", "exact", "mean_phi_t", "mean_phi_t_se", "i_tz", "bound"],
    );
    let mut checks = Vec::new();
    for (label, rule, exact) in [
        ("argmin", SelectionRule::Argmin, 1.0 - (1.0 - eps).powi(m as i32)),
        ("fixed", SelectionRule::Fixed { index: 0 }, eps),
    ] {
        let batch = sample_batch_with(&ensemble, &rule, reps, params.seed, BatchOptions { keep_phi: true })?;
        let info = pvalue_information(&batch, &ensemble, eps)?;
        let b = empirical_bias(&batch, &ensemble)?;
        let bound = pvalue_bound(eps, info.i_tz)?;
        table.push(vec![
            label.into(),
            m.into(),
            eps.into(),
            info.p_small.into(),
            info.p_small_se.into(),
            exact.into(),
            b.mean_selected.into(),
            b.std_error.into(),
            info.i_tz.into(),
            bound.into(),
        ]);
        checks.push(Check::new(
            format!("{label}: bound dominates P(p_T < eps)"),
            info.p_small <= bound + 3.0 * info.p_small_se,
            format!("{:.4} <= {:.4}", info.p_small, bound),
        ));
        checks.push(Check::new(
            format!("{label}: P(p_T < eps) matches its exact value"),
            (info.p_small - exact).abs() <= 0.01,
            format!("{:.4} vs {exact:.4}", info.p_small),
        ));
        if label == "argmin" {
            let expected = 1.0 / (m as f64 + 1.0);
            checks.push(Check::new(
                "argmin: E[phi_T] = 1/(m+1)",
                (b.mean_selected - expected).abs() <= 0.005,
                format!("{:.5} vs {expected:.5}", b.mean_selected),
            ));
        }
    }
    Ok(ExperimentOutput {
        experiment: "pvalue".into(),
        tables: vec![table],
        checks,
        plot: None,
    })
}

pub(super) const CLASSIFY_PARAMS: &[ParamSpec] = &[
    ParamSpec { key: "n", default: 16.0, help: "training inputs" },
];

/// Threshold classifiers on `n` evenly spaced inputs under three label
/// models: pure noise, a noisy threshold, and noiseless labels.
pub(super) fn classify(params: &Params, reps: usize) -> Result<ExperimentOutput> {
    let n = params.count(CLASSIFY_PARAMS, "n")?;
    if n == 0 {
        return input("classify needs n >= 1");
    }
    let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let half = n / 2;
    let models: [(&str, Vec<f64>); 3] = [
        ("uniform", vec![0.5; n]),
        ("noisy_threshold", (0..n).map(|i| if i < half { 0.2 } else { 0.8 }).collect()),
        ("deterministic", (0..n).map(|i| if i < half { 0.0 } else { 1.0 }).collect()),
    ];
    let mut table = Table::new(
        "classify",
        &["labels", "n", "gap", "gap_se", "information", "bound", "vc_cap", "vc_bound", "joint_counted"],
    );
    let mut checks = Vec::new();
    for (label, probs) in models {
        let setup = ClassificationSetup::new(xs.clone(), probs, FunctionClass::Threshold1d)?;
        let a = overfitting_audit(&setup, reps, params.seed)?;
        table.push(vec![
            label.into(),
            n.into(),
            a.gap.mean.into(),
            a.gap.se.into(),
            a.information.into(),
            a.bound.into(),
            a.vc_cap.into(),
            a.vc_bound.into(),
            a.joint_counted.into(),
        ]);
        checks.push(Check::new(
            format!("{label}: gap <= sqrt(I/2n) <= sqrt(cap/2n)"),
            a.satisfied && a.bound <= a.vc_bound + 1e-12,
            format!("{:.4} <= {:.4} <= {:.4}", a.gap.mean, a.bound, a.vc_bound),
        ));
        checks.push(Check::new(
            format!("{label}: gap non-negative"),
            a.gap.mean >= -3.0 * a.gap.se,
            format!("{:.4} (se {:.4})", a.gap.mean, a.gap.se),
        ));
    }
    Ok(ExperimentOutput {
        experiment: "classify".into(),
        tables: vec![table],
        checks,
        plot: None,
    })
}

pub(super) const MAXINFO_PARAMS: &[ParamSpec] = &[
    ParamSpec { key: "m", default: 100.0, help: "number of statistics" },
    ParamSpec { key: "mu_max", default: 3.0, help: "largest signal mean (grid step 1)" },
    ParamSpec { key: "level", default: 0.001, help: "approximation level for approximate max-information" },
];

/// Argmax with one signal: as the signal grows the selection uses less
/// information but its max-information grows.
pub(super) fn maxinfo(params: &Params, reps: usize) -> Result<ExperimentOutput> {
    let m = params.count(MAXINFO_PARAMS, "m")?;
    let mu_max = params.get(MAXINFO_PARAMS, "mu_max");
    let level = params.get(MAXINFO_PARAMS, "level");
    if m < 2 || !(mu_max >= 1.0) {
        return input("maxinfo needs m >= 2 and mu_max >= 1");
    }
    let mus: Vec<f64> = (0..=mu_max.floor() as usize).map(|k| k as f64).collect();
    let mut table = Table::new(
        "maxinfo",
        &["mu", "p_signal", "mutual_information", "max_information", "max_information_rank", "approx_max_information"],
    );
    let (mut mi, mut inf) = (vec![], vec![]);
    for &mu in &mus {
        let mut means = vec![0.0; m];
        means[0] = mu;
        let ensemble = StatisticEnsemble::gaussian(means, 1.0)?;
        let batch = sample_batch(&ensemble, &SelectionRule::Argmax, reps, params.seed)?;
        let info = estimate_information_usage(&batch, Correction::MillerMadow);
        let pmf = &selection_pmf(&batch)[..m];
        let mx = max_information_rank(pmf, Some(0))?;
        let single = mx.single_signal.unwrap_or(f64::INFINITY);
        let approx = approx_max_information_lower_bound(pmf, level)?;
        table.push(vec![
            mu.into(),
            pmf[0].into(),
            info.mutual_information.into(),
            single.into(),
            mx.max_information.into(),
            approx.unwrap_or(f64::NAN).into(),
        ]);
        mi.push(info.mutual_information);
        inf.push(single);
    }
    let checks = vec![
        Check::new(
            "mutual information strictly decreasing",
            mi.windows(2).all(|w| w[1] < w[0]),
            format!("{mi:.3?}"),
        ),
        Check::new(
            "max-information strictly increasing",
            inf.windows(2).all(|w| w[1] > w[0]),
            format!("{inf:.3?}"),
        ),
    ];
    Ok(ExperimentOutput {
        experiment: "maxinfo".into(),
        tables: vec![table],
        checks,
        plot: Some(PlotSpec {
            title: "Mutual information versus max-information".into(),
            x: "mu".into(),
            y: vec!["mutual_information".into(), "max_information".into()],
            group: None,
            x_label: "signal mean mu".into(),
            y_label: "nats".into(),
        }),
    })
}

pub(super) const PROP3_PARAMS: &[ParamSpec] = &[
    ParamSpec { key: "trials", default: 100.0, help: "random mean vectors" },
    ParamSpec { key: "m_max", default: 64.0, help: "largest number of statistics" },
    ParamSpec { key: "mu_range", default: 3.0, help: "means are uniform on [-mu_range, mu_range]" },
];

/// Random mean vectors, unit-variance independent Gaussians, argmax: the
/// squared error sits between `H/8 - 2.5` and `10 H + 1.5`.
pub(super) fn prop3_sandwich(params: &Params, reps: usize) -> Result<ExperimentOutput> {
    let trials = params.count(PROP3_PARAMS, "trials")?;
    let m_max = params.count(PROP3_PARAMS, "m_max")?;
    let range = params.get(PROP3_PARAMS, "mu_range");
    if trials == 0 || m_max < 2 || !(range >= 0.0) {
        return input("prop3-sandwich needs trials >= 1, m_max >= 2, mu_range >= 0");
    }
    let rows: Vec<Result<(usize, f64, f64, f64, f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(params.seed, StreamTag::DESIGN, t as u64);
            let m = rng.random_range(2..=m_max);
            let means: Vec<f64> = (0..m).map(|_| rng.random_range(-range..=range)).collect();
            let ensemble = StatisticEnsemble::gaussian(means, 1.0)?;
            let seed = params.seed ^ (t as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            let batch = sample_batch(&ensemble, &SelectionRule::Argmax, reps, seed)?;
            let b = empirical_bias(&batch, &ensemble)?;
            let h = estimate_information_usage(&batch, Correction::None).h_t;
            Ok((m, h, b.sq_error, b.sq_error_se, sq_error_lower_bound(h)?.value, sq_error_upper_bound_prop3(h)?))
        })
        .collect();
    let rows: Vec<_> = rows.into_iter().collect::<Result<_>>()?;
    let mut table = Table::new("prop3_sandwich", &["trial", "m", "H_T", "mse", "mse_se", "lower", "upper", "satisfied"]);
    let mut violations = 0;
    for (t, &(m, h, mse, se, lo, hi)) in rows.iter().enumerate() {
        let ok = mse >= lo - 3.0 * se && mse <= hi + 3.0 * se;
        violations += usize::from(!ok);
        table.push(vec![t.into(), m.into(), h.into(), mse.into(), se.into(), lo.into(), hi.into(), ok.into()]);
    }
    Ok(ExperimentOutput {
        experiment: "prop3-sandwich".into(),
        tables: vec![table],
        checks: vec![Check::new(
            "entropy sandwich holds",
            violations == 0,
            format!("{violations} of {trials} trials outside the sandwich"),
        )],
        plot: Some(PlotSpec {
            title: "Squared error of argmax against selection entropy".into(),
            x: "H_T".into(),
            y: vec!["mse".into(), "upper".into(), "lower".into()],
            group: None,
            x_label: "H(T)".into(),
            y_label: "E(phi_T - mu_T)^2".into(),
        }),
    })
}
