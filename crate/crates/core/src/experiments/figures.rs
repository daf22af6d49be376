use rayon::prelude::*;

use super::{grid, non_increasing, Check, ExperimentOutput, ParamSpec, Params, PlotSpec, Table};
use crate::bounds::bias_bound;
use crate::ensemble::{empirical_bias, sample_batch, StatisticEnsemble};
use crate::error::{input, Result};
use crate::infotheory::{estimate_information_usage, Correction};
use crate::lars::{lars_information_curve, LarsCurve, LarsExperimentConfig};
use crate::rng::{stream, StreamTag};
use crate::selection::{gibbs_select, top_k_indices, SelectionRule};
use crate::stats::mean_se;

pub(super) const FIGURE1_PARAMS: &[ParamSpec] = &[
    ParamSpec { key: "m", default: 1000.0, help: "number of statistics (one carries the signal)" },
    ParamSpec { key: "mu_min", default: 1.0, help: "smallest signal mean" },
    ParamSpec { key: "mu_max", default: 4.0, help: "largest signal mean" },
    ParamSpec { key: "points", default: 9.0, help: "grid points between mu_min and mu_max" },
];

/// One signal at index 0 among `m - 1` nulls, all unit variance, argmax.
/// Every grid point reuses the same noise draws, so the curves differ only
/// through the signal.
pub(super) fn figure1(params: &Params, reps: usize) -> Result<ExperimentOutput> {
    let m = params.count(FIGURE1_PARAMS, "m")?;
    let mus = grid(
        params.get(FIGURE1_PARAMS, "mu_min"),
        params.get(FIGURE1_PARAMS, "mu_max"),
        params.count(FIGURE1_PARAMS, "points")?,
    )?;
    if m < 2 {
        return input("figure1 needs m >= 2");
    }
    let mut table = Table::new("figure1", &["mu", "bias", "bias_se", "H_T", "bound"]);
    let (mut bias, mut se, mut h, mut bound) = (vec![], vec![], vec![], vec![]);
    for &mu in &mus {
        let mut means = vec![0.0; m];
        means[0] = mu;
        let ensemble = StatisticEnsemble::gaussian(means, 1.0)?;
        let batch = sample_batch(&ensemble, &SelectionRule::Argmax, reps, params.seed)?;
        let b = empirical_bias(&batch, &ensemble)?;
        let info = estimate_information_usage(&batch, Correction::MillerMadow);
        let bd = bias_bound(1.0, info.mutual_information)?;
        table.push(vec![mu.into(), b.bias.into(), b.std_error.into(), info.h_t.into(), bd.into()]);
        bias.push(b.bias);
        se.push(b.std_error);
        h.push(info.h_t);
        bound.push(bd);
    }
    let mut checks = Vec::new();
    let at = |k: Option<usize>| k.map_or("every step".to_string(), |k| format!("fails at mu={}", mus[k + 1]));
    let h_step = non_increasing(&h, |_| 0.05);
    checks.push(Check::new("entropy non-increasing in mu", h_step.is_none(), at(h_step)));
    let b_step = non_increasing(&bound, |k| (2.0 * (h[k] + 0.05)).sqrt() - bound[k]);
    checks.push(Check::new("bound non-increasing in mu", b_step.is_none(), at(b_step)));
    let bias_step = non_increasing(&bias, |k| 2.0 * (se[k] * se[k] + se[k + 1] * se[k + 1]).sqrt());
    checks.push(Check::new("bias non-increasing in mu", bias_step.is_none(), at(bias_step)));
    let violation = (0..mus.len()).find(|&k| bias[k] > bound[k] + 3.0 * se[k]);
    checks.push(Check::new(
        "bias below information bound",
        violation.is_none(),
        violation.map_or("every grid point".into(), |k| {
            format!("mu={}: bias {:.4} > bound {:.4} + 3 se", mus[k], bias[k], bound[k])
        }),
    ));
    Ok(ExperimentOutput {
        experiment: "figure1".into(),
        tables: vec![table],
        checks,
        plot: Some(PlotSpec {
            title: "Rank selection with one signal".into(),
            x: "mu".into(),
            y: vec!["bias".into(), "bound".into(), "H_T".into()],
            group: None,
            x_label: "signal mean mu".into(),
            y_label: "nats / bias".into(),
        }),
    })
}

pub(super) const FIGURE2_PARAMS: &[ParamSpec] = &[
    ParamSpec { key: "n_rows", default: 100.0, help: "rows of the design" },
    ParamSpec { key: "n_features", default: 1000.0, help: "columns of the design" },
    ParamSpec { key: "n_signals", default: 20.0, help: "nonzero coefficients" },
    ParamSpec { key: "noise_variance", default: 0.1, help: "variance of each noise coordinate" },
    ParamSpec { key: "steps", default: 50.0, help: "LARS entries recorded" },
];

pub const FIGURE2_STRENGTHS: [f64; 3] = [0.04, 0.06, 0.08];

/// Checks the LARS curves for one experiment run: ordering across signal
/// strengths, downward trends, and bias below the bound.
pub fn lars_checks(curves: &[LarsCurve]) -> Vec<Check> {
    let mut checks = Vec::new();
    for pair in curves.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        let bad = lo.steps.iter().zip(&hi.steps).find(|(a, b)| {
            let slack = 3.0 * (a.bias_running.se.powi(2) + b.bias_running.se.powi(2)).sqrt();
            b.bias_running.mean > a.bias_running.mean + slack
        });
        checks.push(Check::new(
            format!(
                "bias at s={} not above s={}",
                hi.config.signal_strength, lo.config.signal_strength
            ),
            bad.is_none(),
            bad.map_or("every step".into(), |(a, _)| format!("step {}", a.step)),
        ));
    }
    for c in curves {
        let s = c.config.signal_strength;
        let (bt, dt) = (c.bias_trend(), c.bound_trend());
        checks.push(Check::new(format!("s={s}: running bias decreasing"), bt < 0.0, format!("slope {bt:.3e}")));
        checks.push(Check::new(format!("s={s}: running bound decreasing"), dt < 0.0, format!("slope {dt:.3e}")));
        let bad = c
            .steps
            .iter()
            .find(|st| st.bias_running.mean > st.bound_running + 3.0 * st.bias_running.se);
        checks.push(Check::new(
            format!("s={s}: bias below bound"),
            bad.is_none(),
            bad.map_or("every step".into(), |st| {
                format!("step {}: {:.4} > {:.4}", st.step, st.bias_running.mean, st.bound_running)
            }),
        ));
        if c.early_stops > 0 {
            checks.push(Check::new(format!("s={s}: full paths"), false, format!("{} early stops", c.early_stops)));
        }
    }
    checks
}

pub(super) fn figure2(params: &Params, reps: usize) -> Result<ExperimentOutput> {
    let mut curves = Vec::new();
    for &s in &FIGURE2_STRENGTHS {
        let cfg = LarsExperimentConfig {
            n_rows: params.count(FIGURE2_PARAMS, "n_rows")?,
            n_features: params.count(FIGURE2_PARAMS, "n_features")?,
            n_signals: params.count(FIGURE2_PARAMS, "n_signals")?,
            signal_strength: s,
            noise_variance: params.get(FIGURE2_PARAMS, "noise_variance"),
            n_steps: params.count(FIGURE2_PARAMS, "steps")?,
            replications: reps,
            seed: params.seed,
        };
        curves.push(lars_information_curve(&cfg)?);
    }
    let mut table = Table::new(
        "figure2",
        &[
            "s",
            "step",
            "info_step",
            "bound_step",
            "bias_step",
            "bias_step_se",
            "info_running",
            "bound_running",
            "bias_running",
            "bias_running_se",
        ],
    );
    for c in &curves {
        for st in &c.steps {
            table.push(vec![
                c.config.signal_strength.into(),
                st.step.into(),
                st.info_step.into(),
                st.bound_step.into(),
                st.bias_step.mean.into(),
                st.bias_step.se.into(),
                st.info_running.into(),
                st.bound_running.into(),
                st.bias_running.mean.into(),
                st.bias_running.se.into(),
            ]);
        }
    }
    Ok(ExperimentOutput {
        experiment: "figure2".into(),
        tables: vec![table],
        checks: lars_checks(&curves),
        plot: Some(PlotSpec {
            title: "LARS: average bias and information bound".into(),
            x: "step".into(),
            y: vec!["bias_running".into(), "bound_running".into()],
            group: Some("s".into()),
            x_label: "step".into(),
            y_label: "average over entered features".into(),
        }),
    })
}

pub(super) const FIGURE3_PARAMS: &[ParamSpec] = &[
    ParamSpec { key: "n_signal", default: 1000.0, help: "statistics carrying the signal" },
    ParamSpec { key: "n_null", default: 100000.0, help: "null statistics" },
    ParamSpec { key: "beta", default: 2.0, help: "Gibbs inverse temperature" },
    ParamSpec { key: "k", default: 100.0, help: "indices reported" },
    ParamSpec { key: "mu_min", default: 1.0, help: "smallest signal mean" },
    ParamSpec { key: "mu_max", default: 5.0, help: "largest signal mean" },
    ParamSpec { key: "points", default: 5.0, help: "grid points" },
];

/// Two groups of unit-variance Gaussians: `n_signal` with mean `mu`, the rest
/// null. Reports `k` indices by top-k and by Gibbs sampling without
/// replacement; bias is the mean of `phi - mu` over the reported indices and
/// accuracy the fraction of reported indices with signal.
pub(super) fn figure3(params: &Params, reps: usize) -> Result<ExperimentOutput> {
    let n1 = params.count(FIGURE3_PARAMS, "n_signal")?;
    let n0 = params.count(FIGURE3_PARAMS, "n_null")?;
    let beta = params.get(FIGURE3_PARAMS, "beta");
    let k = params.count(FIGURE3_PARAMS, "k")?;
    let mus = grid(
        params.get(FIGURE3_PARAMS, "mu_min"),
        params.get(FIGURE3_PARAMS, "mu_max"),
        params.count(FIGURE3_PARAMS, "points")?,
    )?;
    let m = n1 + n0;
    if k == 0 || k > m {
        return input(format!("k = {k} must lie in 1..={m}"));
    }
    let mut table = Table::new(
        "figure3",
        &[
            "mu",
            "argmax_bias",
            "argmax_bias_se",
            "gibbs_bias",
            "gibbs_bias_se",
            "argmax_acc",
            "gibbs_acc",
        ],
    );
    let mut checks = Vec::new();
    for &mu in &mus {
        let mut means = vec![0.0; m];
        means[..n1].iter_mut().for_each(|v| *v = mu);
        let ensemble = StatisticEnsemble::gaussian(means, 1.0)?;
        let rows: Vec<Result<[f64; 4]>> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let phi = ensemble.sample_phi(&mut stream(params.seed, StreamTag::PHI, r as u64));
                let summarize = |idx: &[usize]| {
                    let bias = idx.iter().map(|&i| phi[i] - ensemble.mean(i)).sum::<f64>() / k as f64;
                    let acc = idx.iter().filter(|&&i| i < n1).count() as f64 / k as f64;
                    (bias, acc)
                };
                let (ab, aa) = summarize(&top_k_indices(&phi, k));
                let mut rule_rng = stream(params.seed, StreamTag::RULE, r as u64);
                let (gb, ga) = summarize(&gibbs_select(&phi, beta, k, &mut rule_rng)?);
                Ok([ab, aa, gb, ga])
            })
            .collect();
        let rows: Vec<[f64; 4]> = rows.into_iter().collect::<Result<_>>()?;
        let col = |j: usize| mean_se(&rows.iter().map(|r| r[j]).collect::<Vec<_>>());
        let (ab, aa, gb, ga) = (col(0), col(1), col(2), col(3));
        table.push(vec![
            mu.into(),
            ab.mean.into(),
            ab.se.into(),
            gb.mean.into(),
            gb.se.into(),
            aa.mean.into(),
            ga.mean.into(),
        ]);
        let slack = 3.0 * (ab.se * ab.se + gb.se * gb.se).sqrt();
        checks.push(Check::new(
            format!("mu={mu}: Gibbs bias below top-k bias"),
            gb.mean.abs() < ab.mean + slack,
            format!("gibbs {:.4} vs top-k {:.4}", gb.mean, ab.mean),
        ));
        if mu >= 5.0 {
            checks.push(Check::new(
                format!("mu={mu}: both accuracies >= 0.95"),
                aa.mean >= 0.95 && ga.mean >= 0.95,
                format!("top-k {:.3}, gibbs {:.3}", aa.mean, ga.mean),
            ));
        }
    }
    Ok(ExperimentOutput {
        experiment: "figure3".into(),
        tables: vec![table],
        checks,
        plot: Some(PlotSpec {
            title: "Gibbs versus top-k selection".into(),
            x: "mu".into(),
            y: vec![
                "argmax_bias".into(),
                "gibbs_bias".into(),
                "argmax_acc".into(),
                "gibbs_acc".into(),
            ],
            group: None,
            x_label: "signal mean mu".into(),
            y_label: "bias / accuracy".into(),
        }),
    })
}
