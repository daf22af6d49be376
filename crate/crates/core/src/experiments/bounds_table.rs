use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use super::{Check, ExperimentOutput, ParamSpec, Params, Table};
use crate::bounds::{
    abs_error_bound, additive_gaussian_information_bound, bias_bound, bias_bound_hetero, bias_bound_subexp,
    gaussian_channel_information, overfit_bound, pvalue_bound, regret_bound, sq_error_bound, sq_error_lower_bound,
    sq_error_upper_bound_prop3, topk_bound, BoundReport,
};
use crate::classify::{overfitting_audit, ClassificationSetup, FunctionClass};
use crate::ensemble::{empirical_bias, sample_batch, sample_batch_with, BatchOptions, ReplicationBatch, StatisticEnsemble};
use crate::error::Result;
use crate::infotheory::{
    binned_mutual_information, estimate_information_usage, kl_selection_decomposition, pvalue_information,
    selection_pmf, Correction,
};
use crate::multistep::{simulate_sessions, AnalystScript, NoiseSchedule};
use crate::rng::{stream, StreamTag};
use crate::selection::SelectionRule;

pub(super) const PARAMS: &[ParamSpec] = &[
    ParamSpec { key: "m", default: 1000.0, help: "statistics in the null argmax scenario" },
    ParamSpec { key: "topk_m", default: 4096.0, help: "statistics in the top-k scenarios" },
    ParamSpec { key: "topk_m0", default: 16.0, help: "size of the top group" },
    ParamSpec { key: "rho", default: 0.5, help: "equicorrelation of the correlated scenario" },
    ParamSpec { key: "snr", default: 1.0, help: "signal-to-noise ratio of the Gaussian channel" },
    ParamSpec { key: "bins", default: 32.0, help: "bins per axis for the channel's binned information" },
];

/// Rows of the table whose information term comes from the plug-in
/// (Miller–Madow) selection entropy.
fn info(batch: &ReplicationBatch) -> f64 {
    estimate_information_usage(batch, Correction::MillerMadow).mutual_information
}

fn se_tol(se: f64) -> f64 {
    3.0 * se
}

/// Every bound of the framework next to the simulated quantity it controls.
pub(super) fn run(params: &Params, reps: usize) -> Result<ExperimentOutput> {
    let seed = params.seed;
    let m = params.count(PARAMS, "m")?;
    let (tm, tm0) = (params.count(PARAMS, "topk_m")?, params.count(PARAMS, "topk_m0")?);
    let mut reports: Vec<(String, BoundReport)> = Vec::new();
    let mut push = |scenario: &str, r: BoundReport| reports.push((scenario.to_string(), r));

    // Null argmax.
    let null = StatisticEnsemble::null_gaussian(m, 1.0)?;
    let batch = sample_batch(&null, &SelectionRule::Argmax, reps, seed)?;
    let b = empirical_bias(&batch, &null)?;
    let i = info(&batch);
    let h = estimate_information_usage(&batch, Correction::None).h_t;
    let sc = format!("null argmax m={m}");
    push(&sc, BoundReport::upper("bias", bias_bound(1.0, i)?, b.bias, se_tol(b.std_error)));
    push(&sc, BoundReport::upper("abs_error", abs_error_bound(1.0, i)?, b.abs_error, se_tol(b.abs_error_se)));
    push(&sc, BoundReport::upper("sq_error", sq_error_bound(1.0, i)?, b.sq_error, se_tol(b.sq_error_se)));
    push(&sc, BoundReport::lower("sq_error_entropy_lower", sq_error_lower_bound(h)?.value, b.sq_error, se_tol(b.sq_error_se)));
    push(&sc, BoundReport::upper("sq_error_entropy_upper", sq_error_upper_bound_prop3(h)?, b.sq_error, se_tol(b.sq_error_se)));

    // Uniform choice within the top group, and the grouped maximum.
    let wide = StatisticEnsemble::null_gaussian(tm, 1.0)?;
    let cap = topk_bound(1.0, tm, tm0)?;
    for (label, rule) in [
        ("top-k uniform", SelectionRule::TopKUniform { m0: tm0 }),
        ("grouped max", SelectionRule::GroupedMax { m0: tm0 }),
    ] {
        let batch = sample_batch(&wide, &rule, reps, seed)?;
        let b = empirical_bias(&batch, &wide)?;
        let sc = format!("{label} m={tm} m0={tm0}");
        push(&sc, BoundReport::upper("bias_topk", cap, b.bias, se_tol(b.std_error)));
        push(&sc, BoundReport::upper("bias", bias_bound(1.0, info(&batch))?, b.bias, se_tol(b.std_error)));
        if label == "grouped max" {
            push(&sc, BoundReport::lower("bias_topk_80pct", 0.8 * cap, b.bias, se_tol(b.std_error)));
        }
    }

    // Unequal variances.
    let sigmas: Vec<f64> = (0..100).map(|k| 0.5 + 1.5 * k as f64 / 99.0).collect();
    let hetero = StatisticEnsemble::gaussian_hetero(vec![0.0; 100], sigmas.clone())?;
    let batch = sample_batch(&hetero, &SelectionRule::Argmax, reps, seed)?;
    let b = empirical_bias(&batch, &hetero)?;
    let pmf = &selection_pmf(&batch)[..100];
    push(
        "heteroscedastic argmax m=100",
        BoundReport::upper("bias", bias_bound_hetero(&sigmas, pmf, info(&batch))?, b.bias, se_tol(b.std_error)),
    );

    // Sub-exponential statistics.
    let expo = StatisticEnsemble::shifted_exponential(vec![0.0; 100])?;
    let batch = sample_batch(&expo, &SelectionRule::Argmax, reps, seed)?;
    let b = empirical_bias(&batch, &expo)?;
    push(
        "shifted exponential argmax m=100",
        BoundReport::upper("bias", bias_bound_subexp(2.0, 2.0, info(&batch))?, b.bias, se_tol(b.std_error)),
    );

    // Correlated statistics.
    let rho = params.get(PARAMS, "rho");
    let cov = DMatrix::from_fn(100, 100, |r, c| if r == c { 1.0 } else { rho });
    let corr = StatisticEnsemble::gaussian_correlated(vec![0.0; 100], cov)?;
    let batch = sample_batch(&corr, &SelectionRule::Argmax, reps, seed)?;
    let b = empirical_bias(&batch, &corr)?;
    push(
        &format!("equicorrelated argmax m=100 rho={rho}"),
        BoundReport::upper("bias", bias_bound(1.0, info(&batch))?, b.bias, se_tol(b.std_error)),
    );

    // Threshold rules that are forced to use information.
    let keep = BatchOptions { keep_phi: true };
    let rule = SelectionRule::Threshold { level: 3.5, fallback: 0 };
    let gauss = StatisticEnsemble::null_gaussian(50, 1.0)?;
    let batch = sample_batch_with(&gauss, &rule, reps, seed, keep)?;
    let b = empirical_bias(&batch, &gauss)?;
    let h = estimate_information_usage(&batch, Correction::MillerMadow).h_t;
    let n_hat = mean_exceedances(&batch, 3.5, 0);
    let gap = 3.5;
    let applies = gap >= (2.0 * (2.0 * std::f64::consts::PI * (1.0 + n_hat) * gap).ln() + 3.0).sqrt();
    let sc = format!("gaussian threshold m=50 M=3.5 (condition {})", if applies { "met" } else { "unmet" });
    push(&sc, BoundReport::lower("sq_error_ge_entropy", if applies { h } else { 0.0 }, b.sq_error, se_tol(b.sq_error_se)));

    let rule = SelectionRule::Threshold { level: 6.0, fallback: 0 };
    let batch = sample_batch_with(&expo, &rule, reps, seed, keep)?;
    let b = empirical_bias(&batch, &expo)?;
    let h = estimate_information_usage(&batch, Correction::MillerMadow).h_t;
    let n_hat = mean_exceedances(&batch, 6.0, 0);
    let applies = 6.0 >= 4.0 + 2.0 * (1.0 + n_hat).ln();
    let sc = format!("exponential threshold m=100 M=6 (condition {})", if applies { "met" } else { "unmet" });
    push(&sc, BoundReport::lower("bias_ge_half_entropy", if applies { h / 2.0 } else { 0.0 }, b.bias, se_tol(b.std_error)));

    // Per-index divergence decomposition.
    let two = StatisticEnsemble::null_gaussian(2, 1.0)?;
    let batch = sample_batch_with(&two, &SelectionRule::Argmax, reps, seed, keep)?;
    let kl = kl_selection_decomposition(&batch, &two, 20)?;
    push("kl decomposition argmax m=2", BoundReport::upper("weighted_kl", 2f64.ln(), kl.weighted_divergence, 0.05));
    let kl_reps = reps.min(10_000);
    let batch = sample_batch_with(&null, &SelectionRule::Argmax, kl_reps, seed, keep)?;
    let kl = kl_selection_decomposition(&batch, &null, 5)?;
    push(
        &format!("kl decomposition argmax m={m}"),
        BoundReport::upper("weighted_delta_sq", 2.0 * info(&batch), kl.weighted_delta_sq, 0.0),
    );

    // P-values.
    let pv = StatisticEnsemble::uniform_pvalues(5)?;
    let batch = sample_batch_with(&pv, &SelectionRule::Argmin, reps, seed, keep)?;
    let p = pvalue_information(&batch, &pv, 0.05)?;
    push("smallest of 5 p-values eps=0.05", BoundReport::upper("p_small", pvalue_bound(0.05, p.i_tz)?, p.p_small, se_tol(p.p_small_se)));

    // Regret of picking the best-looking arm.
    let means: Vec<f64> = (0..20).map(|k| k as f64 / 10.0).collect();
    let arms = StatisticEnsemble::gaussian(means, 1.0)?;
    let batch = sample_batch(&arms, &SelectionRule::Argmax, reps, seed)?;
    let b = empirical_bias(&batch, &arms)?;
    let h = estimate_information_usage(&batch, Correction::MillerMadow).h_t;
    push(
        "regret argmax mu_i=i/10 m=20",
        BoundReport::upper("regret", regret_bound(1.0, h)?, b.mean_selected - 1.9, se_tol(b.std_error)),
    );

    // Adaptive multistep analysis.
    let ms = StatisticEnsemble::null_gaussian(64, 1.0)?.with_sample_size(10_000)?;
    let s = simulate_sessions(&ms, &NoiseSchedule::FourthRoot, &AnalystScript::GreedyMaxResponse, 16, reps.min(2000), seed)?;
    push(
        "greedy analyst m=64 n=1e4 k=16",
        BoundReport::upper("abs_error", s.bound.unwrap_or(f64::INFINITY), s.abs_error.mean, se_tol(s.abs_error.se)),
    );

    // Overfitting of empirical risk minimisation.
    let xs: Vec<f64> = (0..16).map(|k| k as f64).collect();
    let setup = ClassificationSetup::new(xs, vec![0.5; 16], FunctionClass::Threshold1d)?;
    let a = overfitting_audit(&setup, reps, seed)?;
    push("threshold ERM n=16 random labels", BoundReport::upper("gap", overfit_bound(a.information, 16)?, a.gap.mean, se_tol(a.gap.se)));

    // Additive Gaussian channel.
    let snr = params.get(PARAMS, "snr");
    let bins = params.count(PARAMS, "bins")?;
    // The binned estimator needs far more pairs than the other scenarios.
    let pairs = reps.max(10_000);
    let mut rng = stream(seed, StreamTag::PHI, 0);
    let (mut xs, mut ys) = (Vec::with_capacity(pairs), Vec::with_capacity(pairs));
    for _ in 0..pairs {
        let x: f64 = StandardNormal.sample(&mut rng);
        let w: f64 = StandardNormal.sample(&mut rng);
        xs.push(x);
        ys.push(x + w / snr.sqrt());
    }
    let mi = binned_mutual_information(&xs, &ys, bins)?;
    let exact = gaussian_channel_information(snr)?;
    push(
        &format!("gaussian channel snr={snr}"),
        BoundReport::upper("binned_information", additive_gaussian_information_bound(1.0, 1.0 / snr)?, mi, 0.1 * exact),
    );

    let mut table = Table::new(
        "bounds_table",
        &["scenario", "bound", "value", "empirical", "tolerance", "lower", "satisfied", "slack"],
    );
    let mut checks = Vec::new();
    for (scenario, r) in &reports {
        table.push(vec![
            scenario.as_str().into(),
            r.name.as_str().into(),
            r.value.into(),
            r.empirical.into(),
            r.tolerance.into(),
            r.lower.into(),
            r.satisfied.into(),
            r.slack.into(),
        ]);
        let rel = if r.lower { ">=" } else { "<=" };
        checks.push(Check::new(
            format!("{scenario}: {}", r.name),
            r.satisfied,
            format!("{:.4} {rel} {:.4} (tol {:.4})", r.empirical, r.value, r.tolerance),
        ));
    }
    Ok(ExperimentOutput {
        experiment: "bounds-table".into(),
        tables: vec![table],
        checks,
        plot: None,
    })
}

/// Mean number of non-fallback statistics at or above `level`.
fn mean_exceedances(batch: &ReplicationBatch, level: f64, fallback: usize) -> f64 {
    let total: usize = (0..batch.replications())
        .filter_map(|r| batch.phi_row(r))
        .map(|row| row.iter().enumerate().filter(|&(i, &v)| i != fallback && v >= level).count())
        .sum();
    total as f64 / batch.replications() as f64
}
