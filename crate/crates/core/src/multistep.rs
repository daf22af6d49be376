//! Multi-step adaptive analysis through a noisy query interface.
//!
//! An analyst repeatedly asks for one of `m` statistics, each an average of
//! `n` samples (`phi_i ~ N(mu_i, sigma^2 / n)`), and receives
//! `Y = phi_i + W_j` with fresh `W_j ~ N(0, omega_j^2 / n)`. Each answer
//! charges the information budget `sigma^2 / (2 omega_j^2)` nats, the linear
//! cap on `0.5 ln(1 + sigma^2 / omega_j^2)`. Analysts only ever see the
//! transcript, never `phi`.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{multistep_error_bound, Schedule};
use crate::ensemble::{NoiseKind, StatisticEnsemble};
use crate::error::{input, Error, Result};
use crate::infotheory::{entropy_standard_error, plugin_entropy, Correction};
use crate::rng::{stream, StreamTag};
use crate::stats::{mean_se, ols_slope, MeanSe};

/// Noise standard deviations `omega_1, omega_2, ...` (before the `1/sqrt(n)`).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSchedule {
    /// Raw answers. Charges an infinite budget per query.
    Noiseless,
    /// The same `omega` for every query.
    Constant { omega: f64 },
    /// `omega_j = sigma * j^(1/4)`.
    FourthRoot,
    /// Explicit per-query levels; queries beyond the list are refused.
    Explicit { omegas: Vec<f64> },
}

impl NoiseSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSchedule::Constant { omega } if !(*omega > 0.0 && omega.is_finite()) => {
                input(format!("noise level must be positive and finite, got {omega}"))
            }
            NoiseSchedule::Explicit { omegas } if omegas.iter().any(|w| !(*w > 0.0 && w.is_finite())) => {
                input("noise levels must be positive and finite")
            }
            _ => Ok(()),
        }
    }

    /// `omega_j` for the 1-based query step `j`; `None` past the schedule.
    pub fn omega(&self, sigma: f64, j: usize) -> Option<f64> {
        match self {
            NoiseSchedule::Noiseless => Some(0.0),
            NoiseSchedule::Constant { omega } => Some(*omega),
            NoiseSchedule::FourthRoot => Some(sigma * (j as f64).powf(0.25)),
            NoiseSchedule::Explicit { omegas } => omegas.get(j.checked_sub(1)?).copied(),
        }
    }

    /// Budget charged by the `j`-th answer.
    pub fn increment(&self, sigma: f64, j: usize) -> Option<f64> {
        let omega = self.omega(sigma, j)?;
        Some(if omega == 0.0 {
            f64::INFINITY
        } else {
            sigma * sigma / (2.0 * omega * omega)
        })
    }

    /// Accumulated budget after `k` answers.
    pub fn budget(&self, sigma: f64, k: usize) -> Option<f64> {
        (1..=k).map(|j| self.increment(sigma, j)).sum()
    }

    /// The matching schedule for the closed-form error bound, if any.
    pub fn bound_schedule(&self, k: usize) -> Option<Schedule> {
        match self {
            NoiseSchedule::Noiseless => None,
            NoiseSchedule::FourthRoot => Some(Schedule::FourthRoot),
            NoiseSchedule::Constant { omega } => Some(Schedule::Generic(vec![*omega; k + 1])),
            NoiseSchedule::Explicit { omegas } => Some(Schedule::Generic(omegas.clone())),
        }
    }
}

/// One answered query. `index` is `None` for a linear-combination query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryRecord {
    pub step: usize,
    pub index: Option<usize>,
    pub response: f64,
    pub budget_after: f64,
}

/// Mutable state of one analyst interaction.
#[derive(Debug, Clone)]
pub struct QuerySession {
    phi: Vec<f64>,
    means: Vec<f64>,
    sigma: f64,
    n: usize,
    schedule: NoiseSchedule,
    history: Vec<QueryRecord>,
    budget_spent: f64,
    budget_limit: Option<f64>,
    noise: ChaCha8Rng,
}

fn session_parameters(ensemble: &StatisticEnsemble) -> Result<(f64, usize)> {
    if ensemble.kind() != NoiseKind::GaussianIid {
        return input(format!(
            "query sessions need an independent Gaussian ensemble, not {}",
            ensemble.kind().name()
        ));
    }
    let sigma = ensemble.unit_sigma(0);
    if (0..ensemble.m()).any(|i| ensemble.unit_sigma(i) != sigma) {
        return input("query sessions need a common noise scale sigma");
    }
    Ok((sigma, ensemble.sample_size().unwrap_or(1)))
}

impl QuerySession {
    /// Opens replication `replication` of a session: `phi` comes from the
    /// PHI stream and response noise from the RESPONSE stream.
    pub fn new(
        ensemble: &StatisticEnsemble,
        schedule: NoiseSchedule,
        seed: u64,
        replication: u64,
    ) -> Result<Self> {
        let mut phi_rng = stream(seed, StreamTag::PHI, replication);
        let phi = ensemble.sample_phi(&mut phi_rng);
        Self::with_phi(ensemble, phi, schedule, stream(seed, StreamTag::RESPONSE, replication))
    }

    fn with_phi(
        ensemble: &StatisticEnsemble,
        phi: Vec<f64>,
        schedule: NoiseSchedule,
        noise: ChaCha8Rng,
    ) -> Result<Self> {
        schedule.validate()?;
        let (sigma, n) = session_parameters(ensemble)?;
        Ok(Self {
            phi,
            means: ensemble.means().to_vec(),
            sigma,
            n,
            schedule,
            history: Vec::new(),
            budget_spent: 0.0,
            budget_limit: None,
            noise,
        })
    }

    pub fn with_budget_limit(mut self, limit: f64) -> Self {
        self.budget_limit = Some(limit);
        self
    }

    pub fn m(&self) -> usize {
        self.phi.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    pub fn history(&self) -> &[QueryRecord] {
        &self.history
    }

    pub fn budget_spent(&self) -> f64 {
        self.budget_spent
    }

    pub fn budget_limit(&self) -> Option<f64> {
        self.budget_limit
    }

    fn charge(&mut self) -> Result<(usize, f64)> {
        let step = self.history.len() + 1;
        let omega = self
            .schedule
            .omega(self.sigma, step)
            .ok_or_else(|| Error::Protocol(format!("noise schedule does not cover query {step}")))?;
        let increment = self.schedule.increment(self.sigma, step).unwrap_or(f64::INFINITY);
        if let Some(limit) = self.budget_limit {
            if self.budget_spent + increment > limit {
                return Err(Error::BudgetExhausted {
                    spent: self.budget_spent,
                    limit,
                });
            }
        }
        self.budget_spent += increment;
        Ok((step, omega))
    }

    fn noise(&mut self, omega: f64) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.noise);
        omega / (self.n as f64).sqrt() * z
    }

    /// Answers "what is `phi_i`?" with fresh noise.
    pub fn answer_query(&mut self, i: usize) -> Result<f64> {
        if i >= self.m() {
            return Err(Error::Protocol(format!("query index {i} out of range for m = {}", self.m())));
        }
        let (step, omega) = self.charge()?;
        let response = self.phi[i] + self.noise(omega);
        self.history.push(QueryRecord {
            step,
            index: Some(i),
            response,
            budget_after: self.budget_spent,
        });
        Ok(response)
    }

    /// Answers "what is `sum_i w_i phi_i`?" for a unit-norm `w`, which has
    /// the same `sigma^2 / n` variance as a single statistic.
    pub fn answer_linear(&mut self, weights: &[f64]) -> Result<f64> {
        if weights.len() != self.m() {
            return Err(Error::Protocol(format!(
                "{} weights for m = {} statistics",
                weights.len(),
                self.m()
            )));
        }
        let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Protocol(format!("linear query needs unit-norm weights, got norm {norm}")));
        }
        let (step, omega) = self.charge()?;
        let response = dot(weights, &self.phi) + self.noise(omega);
        self.history.push(QueryRecord {
            step,
            index: None,
            response,
            budget_after: self.budget_spent,
        });
        Ok(response)
    }

    /// The noise-free value of a linear statistic; for evaluation only.
    fn linear_value(&self, weights: &[f64]) -> f64 {
        dot(weights, &self.phi)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scripted analysts. Each decision is a function of the transcript only.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalystScript {
    /// Non-adaptive: query `sequence[0..k]`, then report `sequence[k]`.
    FixedSequence { sequence: Vec<usize> },
    /// Query every index once in order, then keep re-querying the index with
    /// the best mean response; report the best mean response's index.
    GreedyMaxResponse,
    /// Query coordinates `j mod k_dims`, then report the linear statistic
    /// along the normalized vector of mean responses.
    LinearReconstructor { k_dims: usize },
}

/// What the analyst does next.
#[derive(Debug, Clone, PartialEq)]
pub enum FinalQuery {
    Index(usize),
    Linear(Vec<f64>),
}

fn mean_responses(history: &[QueryRecord], m: usize) -> Vec<Option<f64>> {
    let mut sums = vec![0.0; m];
    let mut counts = vec![0usize; m];
    for rec in history {
        if let Some(i) = rec.index {
            if i < m {
                sums[i] += rec.response;
                counts[i] += 1;
            }
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &c)| (c > 0).then(|| s / c as f64))
        .collect()
}

fn best_seen(history: &[QueryRecord], m: usize) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in mean_responses(history, m).into_iter().enumerate() {
        if let Some(v) = v {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    best.map_or(0, |(i, _)| i)
}

impl AnalystScript {
    pub fn name(&self) -> &'static str {
        match self {
            AnalystScript::FixedSequence { .. } => "fixed_sequence",
            AnalystScript::GreedyMaxResponse => "greedy_max_response",
            AnalystScript::LinearReconstructor { .. } => "linear_reconstructor",
        }
    }

    pub fn is_adaptive(&self) -> bool {
        !matches!(self, AnalystScript::FixedSequence { .. })
    }

    /// Index to query at 1-based step `history.len() + 1`.
    pub fn next_query(&self, history: &[QueryRecord], m: usize) -> Result<usize> {
        let step = history.len();
        match self {
            AnalystScript::FixedSequence { sequence } => sequence
                .get(step)
                .copied()
                .ok_or_else(|| Error::Protocol(format!("fixed sequence has no entry for query {}", step + 1))),
            AnalystScript::GreedyMaxResponse => Ok(if step < m { step } else { best_seen(history, m) }),
            AnalystScript::LinearReconstructor { k_dims } => {
                if *k_dims == 0 || *k_dims > m {
                    return Err(Error::Protocol(format!("k_dims = {k_dims} must lie in 1..={m}")));
                }
                Ok(step % k_dims)
            }
        }
    }

    /// The analyst's last move after the scripted queries.
    pub fn final_query(&self, history: &[QueryRecord], m: usize) -> Result<FinalQuery> {
        match self {
            AnalystScript::FixedSequence { .. } | AnalystScript::GreedyMaxResponse => {
                let i = match self {
                    AnalystScript::GreedyMaxResponse => best_seen(history, m),
                    _ => self.next_query(history, m)?,
                };
                Ok(FinalQuery::Index(i))
            }
            AnalystScript::LinearReconstructor { .. } => {
                let means = mean_responses(history, m);
                let mut x: Vec<f64> = means.iter().map(|v| v.unwrap_or(0.0)).collect();
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    x = vec![0.0; m];
                    x[0] = 1.0;
                } else {
                    x.iter_mut().for_each(|v| *v /= norm);
                }
                Ok(FinalQuery::Linear(x))
            }
        }
    }
}

/// Result of one scripted interaction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalystOutcome {
    /// Reported index, or `None` for a linear final statistic.
    pub final_index: Option<usize>,
    /// The noisy answer to the final query.
    pub reported: f64,
    /// The noise-free value of the final statistic.
    pub statistic: f64,
    /// Mean of the final statistic.
    pub target: f64,
    /// `reported - target`.
    pub error: f64,
    pub budget_before_final: f64,
}

/// Runs `k` scripted queries and answers the final selection.
pub fn run_analyst(script: &AnalystScript, session: &mut QuerySession, k: usize) -> Result<AnalystOutcome> {
    let m = session.m();
    for _ in 0..k {
        let i = script.next_query(session.history(), m)?;
        session.answer_query(i)?;
    }
    let budget_before_final = session.budget_spent();
    match script.final_query(session.history(), m)? {
        FinalQuery::Index(i) => {
            let reported = session.answer_query(i)?;
            let target = session.means[i];
            Ok(AnalystOutcome {
                final_index: Some(i),
                reported,
                statistic: session.phi[i],
                target,
                error: reported - target,
                budget_before_final,
            })
        }
        FinalQuery::Linear(w) => {
            let reported = session.answer_linear(&w)?;
            let target = dot(&w, &session.means);
            Ok(AnalystOutcome {
                final_index: None,
                reported,
                statistic: session.linear_value(&w),
                target,
                error: reported - target,
                budget_before_final,
            })
        }
    }
}

/// Replicated final-answer error for one script and history length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionSummary {
    pub k: usize,
    pub replications: usize,
    pub error: MeanSe,
    pub abs_error: MeanSe,
    /// Budget accumulated by the `k` scripted queries.
    pub budget: f64,
    /// Closed-form bound on `E|error|`, absent for noiseless sessions.
    pub bound: Option<f64>,
}

/// Runs `replications` independent sessions (parallel, order-independent).
pub fn simulate_sessions(
    ensemble: &StatisticEnsemble,
    schedule: &NoiseSchedule,
    script: &AnalystScript,
    k: usize,
    replications: usize,
    seed: u64,
) -> Result<SessionSummary> {
    if replications == 0 {
        return input("replication count must be >= 1");
    }
    let (sigma, n) = session_parameters(ensemble)?;
    schedule.validate()?;
    let outcomes: Vec<Result<AnalystOutcome>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut session = QuerySession::new(ensemble, schedule.clone(), seed, r as u64)?;
            run_analyst(script, &mut session, k)
        })
        .collect();
    let mut errors = Vec::with_capacity(replications);
    for o in outcomes {
        errors.push(o?.error);
    }
    let abs: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
    let bound = match schedule.bound_schedule(k) {
        Some(s) => Some(multistep_error_bound(sigma, n, k, &s)?),
        None => None,
    };
    Ok(SessionSummary {
        k,
        replications,
        error: mean_se(&errors),
        abs_error: mean_se(&abs),
        budget: schedule.budget(sigma, k).unwrap_or(f64::INFINITY),
        bound,
    })
}

/// Least-squares exponent `a` in `error ~ C k^a`.
pub fn scaling_exponent(ks: &[usize], errors: &[f64]) -> Result<f64> {
    if ks.len() != errors.len() || ks.len() < 2 {
        return input("need at least two (k, error) pairs of equal length");
    }
    if ks.iter().any(|&k| k == 0) || errors.iter().any(|e| !(*e > 0.0)) {
        return input("k and errors must be positive");
    }
    let lk: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
    let le: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    Ok(ols_slope(&lk, &le))
}

/// `E||Z||` for `Z ~ N(0, I_k)`: `sqrt(2) Gamma((k+1)/2) / Gamma(k/2)`.
pub fn chi_mean(k: usize) -> f64 {
    assert!(k >= 1);
    // ratio r(k) = Gamma((k+1)/2) / Gamma(k/2), r(k+2) = r(k) (k+1)/k
    let mut r = if k % 2 == 1 {
        1.0 / std::f64::consts::PI.sqrt()
    } else {
        std::f64::consts::PI.sqrt() / 2.0
    };
    let mut j = if k % 2 == 1 { 1 } else { 2 };
    while j < k {
        r *= (j as f64 + 1.0) / j as f64;
        j += 2;
    }
    std::f64::consts::SQRT_2 * r
}

/// Outcome of the adaptive linear-model demonstration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearDemo {
    pub k_dims: usize,
    pub n: usize,
    pub sigma: f64,
    pub with_noise: bool,
    /// `E[x^T theta_hat]` for the analyst's unit vector `x`.
    pub inner_product: MeanSe,
    /// `E|Y_{k+1} - x^T theta|` for the reported noisy value.
    pub abs_error: MeanSe,
    /// `sigma sqrt(1/n) E||Z_k||`, the noiseless expectation.
    pub chi_oracle: f64,
    pub bound: Option<f64>,
}

/// Null linear model `theta = 0`, `theta_hat ~ N(0, sigma^2/n I_k)`: the
/// analyst learns each coordinate and then reports the statistic along the
/// direction it found. Without noise this reports `||theta_hat||`.
pub fn linear_reconstruction_demo(
    k_dims: usize,
    n: usize,
    sigma: f64,
    with_noise: bool,
    replications: usize,
    seed: u64,
) -> Result<LinearDemo> {
    if k_dims == 0 || n == 0 || replications == 0 {
        return input("linear demo needs k_dims, n and replications >= 1");
    }
    let ensemble = StatisticEnsemble::null_gaussian(k_dims, sigma)?.with_sample_size(n)?;
    let schedule = if with_noise {
        NoiseSchedule::FourthRoot
    } else {
        NoiseSchedule::Noiseless
    };
    let script = AnalystScript::LinearReconstructor { k_dims };
    let rows: Vec<Result<(f64, f64)>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut session = QuerySession::new(&ensemble, schedule.clone(), seed, r as u64)?;
            let out = run_analyst(&script, &mut session, k_dims)?;
            Ok((out.statistic, out.error.abs()))
        })
        .collect();
    let mut inner = Vec::with_capacity(replications);
    let mut abs = Vec::with_capacity(replications);
    for row in rows {
        let (a, b) = row?;
        inner.push(a);
        abs.push(b);
    }
    let bound = match schedule.bound_schedule(k_dims) {
        Some(s) => Some(multistep_error_bound(sigma, n, k_dims, &s)?),
        None => None,
    };
    Ok(LinearDemo {
        k_dims,
        n,
        sigma,
        with_noise,
        inner_product: mean_se(&inner),
        abs_error: mean_se(&abs),
        chi_oracle: sigma / (n as f64).sqrt() * chi_mean(k_dims),
        bound,
    })
}

/// Accumulated budget against the estimated information of the analyst's
/// current pick after each step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditStep {
    pub step: usize,
    pub budget: f64,
    pub h_t: f64,
    pub h_t_given_phi: f64,
    pub information: f64,
    pub information_se: f64,
    pub within_budget: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionAudit {
    pub replications: usize,
    pub inner_outer: usize,
    pub inner_draws: usize,
    pub steps: Vec<AuditStep>,
    /// Set when the inner loop is too small for a tight plug-in estimate.
    pub undersampled: bool,
}

/// Sizes of the composition audit's Monte Carlo loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditSize {
    /// Sessions used for the marginal selection entropy.
    pub replications: usize,
    /// Distinct `phi` draws for the conditional entropy.
    pub inner_outer: usize,
    /// Noise redraws per fixed `phi`.
    pub inner_draws: usize,
}

impl Default for AuditSize {
    fn default() -> Self {
        Self {
            replications: 10_000,
            inner_outer: 200,
            inner_draws: 2_000,
        }
    }
}

fn picks_per_step(
    script: &AnalystScript,
    session: &mut QuerySession,
    k: usize,
) -> Result<Vec<usize>> {
    let m = session.m();
    let mut picks = Vec::with_capacity(k);
    for _ in 0..k {
        let i = script.next_query(session.history(), m)?;
        session.answer_query(i)?;
        match script.final_query(session.history(), m)? {
            FinalQuery::Index(t) => picks.push(t),
            FinalQuery::Linear(_) => {
                return Err(Error::Protocol("composition audit needs an index-valued final pick".into()))
            }
        }
    }
    Ok(picks)
}

fn entropy_of_picks(picks: impl Iterator<Item = usize>, m: usize) -> (f64, f64) {
    let mut counts = vec![0u64; m];
    for p in picks {
        counts[p] += 1;
    }
    let h = plugin_entropy(&counts, Correction::MillerMadow).unwrap_or(0.0);
    (h, entropy_standard_error(&counts))
}

/// Estimates `I(T_{j+1}; phi)` for the pick after each step `j <= k` and
/// compares it with the accumulated budget. `H(T | phi)` comes from
/// redrawing only the response noise with `phi` held fixed.
pub fn composition_audit(
    ensemble: &StatisticEnsemble,
    schedule: &NoiseSchedule,
    script: &AnalystScript,
    k: usize,
    size: AuditSize,
    seed: u64,
) -> Result<CompositionAudit> {
    if *schedule == NoiseSchedule::Noiseless {
        return input("composition audit needs a noisy schedule (omega > 0)");
    }
    if k == 0 || size.replications == 0 || size.inner_outer == 0 || size.inner_draws < 2 {
        return input("composition audit needs k >= 1 and non-trivial loop sizes");
    }
    let (sigma, _) = session_parameters(ensemble)?;
    schedule.validate()?;
    let m = ensemble.m();

    let outer: Vec<Result<Vec<usize>>> = (0..size.replications)
        .into_par_iter()
        .map(|r| {
            let mut s = QuerySession::new(ensemble, schedule.clone(), seed, r as u64)?;
            picks_per_step(script, &mut s, k)
        })
        .collect();
    let outer: Vec<Vec<usize>> = outer.into_iter().collect::<Result<_>>()?;

    // per outer phi draw: conditional entropies of the pick at each step
    let inner: Vec<Result<Vec<f64>>> = (0..size.inner_outer)
        .into_par_iter()
        .map(|o| {
            let mut phi_rng = stream(seed, StreamTag::INNER, o as u64);
            let phi = ensemble.sample_phi(&mut phi_rng);
            let tag = StreamTag::INNER.child(o as u64);
            let mut by_step: Vec<Vec<usize>> = vec![Vec::with_capacity(size.inner_draws); k];
            for d in 0..size.inner_draws {
                let mut s = QuerySession::with_phi(ensemble, phi.clone(), schedule.clone(), stream(seed, tag, d as u64))?;
                for (j, t) in picks_per_step(script, &mut s, k)?.into_iter().enumerate() {
                    by_step[j].push(t);
                }
            }
            Ok(by_step
                .into_iter()
                .map(|picks| entropy_of_picks(picks.into_iter(), m).0)
                .collect())
        })
        .collect();
    let inner: Vec<Vec<f64>> = inner.into_iter().collect::<Result<_>>()?;

    let mut steps = Vec::with_capacity(k);
    for j in 0..k {
        let (h_t, h_se) = entropy_of_picks(outer.iter().map(|p| p[j]), m);
        let cond: Vec<f64> = inner.iter().map(|h| h[j]).collect();
        let cond = mean_se(&cond);
        let information = (h_t - cond.mean).max(0.0);
        let information_se = (h_se * h_se + cond.se * cond.se).sqrt();
        let budget = schedule.budget(sigma, j + 1).unwrap_or(f64::INFINITY);
        steps.push(AuditStep {
            step: j + 1,
            budget,
            h_t,
            h_t_given_phi: cond.mean,
            information,
            information_se,
            within_budget: information <= budget + 3.0 * information_se,
        });
    }
    Ok(CompositionAudit {
        replications: size.replications,
        inner_outer: size.inner_outer,
        inner_draws: size.inner_draws,
        steps,
        undersampled: size.inner_draws < 20 * m,
    })
}
