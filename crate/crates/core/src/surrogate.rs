//! Reduced top-level chains and the drift-theorem bound evaluators.
//!
//! The plain chain is `X_{t+1} ~ min{μ, Bin(λ, (X_t + Δ_t)/(eμ))}` with
//! `Δ_t = 0`; with an influx `Δ_t ≥ Δ_min > 0` it models a level fed from
//! below. The conditioned chain replaces the probability with `p_n`, the
//! chance that a phase copies a top-level parent given no improving or
//! neutral non-copy mutation happened.

use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::ea::{Engine, Population};
use crate::error::{Error, Result};
use crate::potential::{h_potential, n1_holds_pool};
use crate::report::{BoundReport, DriftReport};
use crate::rng::RngStream;
use crate::stats::{compensated_sum, proportion_se, Welford};
use crate::transition::{binom_pmf_vec, EMPIRICAL_S_MIN};

const E: f64 = std::f64::consts::E;

/// `24e/(e−2)`, the drift constant of the `h` potential.
pub fn beta() -> f64 {
    24.0 * E / (E - 2.0)
}

/// `max(S_min + 1, ⌈36e/(e−2)⌉ + 1)` with the empirical `S_min`.
pub fn s_constant() -> u32 {
    let from_drift = (36.0 * E / (E - 2.0)).ceil() as u32 + 1;
    from_drift.max(EMPIRICAL_S_MIN + 1)
}

/// Additive influx `Δ_t` into the chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Influx {
    None,
    Constant(f64),
    /// `Δ_t` for `t = 0, 1, …`; the last value repeats.
    Sequence(Vec<f64>),
}

impl Influx {
    pub fn at(&self, t: usize) -> f64 {
        match self {
            Influx::None => 0.0,
            Influx::Constant(d) => *d,
            Influx::Sequence(v) => v[t.min(v.len() - 1)],
        }
    }

    /// `Δ_min`, or `None` without influx.
    pub fn min(&self) -> Option<f64> {
        match self {
            Influx::None => None,
            Influx::Constant(d) => Some(*d),
            Influx::Sequence(v) => v.iter().copied().reduce(f64::min),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurrogateConfig {
    pub mu: u64,
    pub lambda: u64,
    pub influx: Influx,
}

impl SurrogateConfig {
    pub fn new(mu: u64, lambda: u64, influx: Influx) -> Result<Self> {
        if mu == 0 || lambda == 0 {
            return Err(Error::InvalidParameter("mu and lambda must be positive".into()));
        }
        match &influx {
            Influx::Sequence(v) if v.is_empty() => {
                return Err(Error::InvalidParameter("influx sequence must not be empty".into()))
            }
            _ => {}
        }
        if let Some(m) = influx.min() {
            if !(m > 0.0 && m < lambda as f64) {
                return Err(Error::InvalidParameter(format!(
                    "minimum influx must lie in (0, lambda), got {m}"
                )));
            }
        }
        Ok(Self { mu, lambda, influx })
    }

    pub fn plain(mu: u64, lambda: u64) -> Result<Self> {
        Self::new(mu, lambda, Influx::None)
    }

    pub fn cap(&self) -> u64 {
        self.mu
    }

    /// Whether `λ ≥ eμ`.
    pub fn efficient(&self) -> bool {
        self.lambda as f64 >= E * self.mu as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SurrogateStep {
    pub next: u64,
    /// The success probability exceeded 1 and was clamped.
    pub clamped: bool,
}

fn sample_binomial(trials: u64, p: f64, rng: &mut RngStream) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return trials;
    }
    Binomial::new(trials, p)
        .expect("probability lies in (0, 1)")
        .sample(rng)
}

/// One step from `state` at time `t`.
pub fn surrogate_step(
    state: u64,
    cfg: &SurrogateConfig,
    t: usize,
    rng: &mut RngStream,
) -> Result<SurrogateStep> {
    if state > cfg.mu {
        return Err(Error::InvalidParameter(format!(
            "state {state} exceeds the cap mu = {}",
            cfg.mu
        )));
    }
    let p = (state as f64 + cfg.influx.at(t)) / (E * cfg.mu as f64);
    let clamped = p > 1.0;
    let next = sample_binomial(cfg.lambda, p.min(1.0), rng).min(cfg.mu);
    Ok(SurrogateStep { next, clamped })
}

/// Monte Carlo `Pr[∃τ ≤ t: X_τ < X_0 − Δ]` for the plain chain against
/// `tX_0/Δ²`.
pub fn check_variation_bound(
    cfg: &SurrogateConfig,
    x0: u64,
    delta: f64,
    t: usize,
    trials: u64,
    sigma: f64,
    rng: &mut RngStream,
) -> Result<BoundReport> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if x0 > cfg.mu {
        return Err(Error::InvalidParameter(format!("x0 = {x0} exceeds mu = {}", cfg.mu)));
    }
    let plain = SurrogateConfig::plain(cfg.mu, cfg.lambda)?;
    let floor = x0 as f64 - delta;
    let mut hits = 0u64;
    for _ in 0..trials {
        let mut x = x0;
        for tau in 0..t {
            x = surrogate_step(x, &plain, tau, rng)?.next;
            if (x as f64) < floor {
                hits += 1;
                break;
            }
        }
    }
    let p = hits as f64 / trials as f64;
    let se = proportion_se(hits, trials);
    let bound = t as f64 * x0 as f64 / (delta * delta);
    Ok(BoundReport {
        lemma: "lemma7".into(),
        hypothesis_ok: cfg.efficient(),
        parameters: serde_json::json!({
            "mu": cfg.mu, "lambda": cfg.lambda, "x0": x0, "delta": delta, "t": t,
        }),
        empirical: p,
        standard_error: se,
        bound,
        pass: p <= bound + sigma * se,
        samples: trials,
        rejection_rate: None,
    })
}

/// `max{18 ln(2λ/Δ_min), 48}`, the smallest admissible target.
pub fn hitting_target_floor(lambda: u64, delta_min: f64) -> f64 {
    (18.0 * (2.0 * lambda as f64 / delta_min).ln()).max(48.0)
}

/// Checks the hitting-time hypotheses; `Ok(Δ_min)` when they hold.
pub fn hitting_time_hypothesis(cfg: &SurrogateConfig, xprime: u64) -> Result<f64> {
    let delta_min = cfg.influx.min().ok_or_else(|| {
        Error::OutsideHypothesis("hitting-time bound needs a positive influx".into())
    })?;
    let floor = hitting_target_floor(cfg.lambda, delta_min);
    if (xprime as f64) < floor {
        return Err(Error::OutsideHypothesis(format!(
            "target X' = {xprime} is below max(18 ln(2 lambda / delta_min), 48) = {floor:.3}"
        )));
    }
    if 2 * xprime > cfg.mu {
        return Err(Error::OutsideHypothesis(format!(
            "target X' = {xprime} exceeds mu/2 = {}",
            cfg.mu as f64 / 2.0
        )));
    }
    if !cfg.efficient() {
        return Err(Error::OutsideHypothesis(format!(
            "lambda = {} is below e*mu = {:.3}",
            cfg.lambda,
            E * cfg.mu as f64
        )));
    }
    Ok(delta_min)
}

/// Empirical `E[T(X')]` for the influx chain against
/// `max{24, (4X' − 2X_0)/Δ_min}`. Trajectories still below `X'` after
/// `max_steps` are counted at `max_steps` and reported via `rejection_rate`.
#[allow(clippy::too_many_arguments)]
pub fn check_hitting_time(
    cfg: &SurrogateConfig,
    x0: u64,
    xprime: u64,
    trials: u64,
    max_steps: usize,
    sigma: f64,
    rng: &mut RngStream,
) -> Result<BoundReport> {
    let delta_min = hitting_time_hypothesis(cfg, xprime)?;
    if x0 > cfg.mu {
        return Err(Error::InvalidParameter(format!("x0 = {x0} exceeds mu = {}", cfg.mu)));
    }
    let mut w = Welford::new();
    let mut censored = 0u64;
    for _ in 0..trials {
        let mut x = x0;
        let mut t = 0usize;
        while x < xprime && t < max_steps {
            x = surrogate_step(x, cfg, t, rng)?.next;
            t += 1;
        }
        if x < xprime {
            censored += 1;
        }
        w.push(t as f64);
    }
    let bound = 24f64.max((4.0 * xprime as f64 - 2.0 * x0 as f64) / delta_min);
    Ok(BoundReport {
        lemma: "lemma8".into(),
        hypothesis_ok: true,
        parameters: serde_json::json!({
            "mu": cfg.mu, "lambda": cfg.lambda, "delta_min": delta_min,
            "x0": x0, "x_prime": xprime, "max_steps": max_steps,
        }),
        empirical: w.mean(),
        standard_error: w.std_err(),
        bound,
        pass: censored == 0 && w.mean() <= bound + sigma * w.std_err(),
        samples: trials,
        rejection_rate: (censored > 0).then(|| censored as f64 / trials as f64),
    })
}

/// Where `Pr(A | N_1)` in `p_n` comes from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PnMode {
    /// The lower bound `(s/μ)(1 − e/√n)`.
    Analytic,
    /// A fixed estimate, e.g. from [`estimate_pr_a_given_n1`].
    Empirical(f64),
}

/// `p_n = (1−1/n)^n Pr(A | N_1)`.
pub fn p_n(s: u64, n: u64, mu: u64, mode: PnMode) -> f64 {
    let keep = (n as f64 * (-1.0 / n as f64).ln_1p()).exp();
    let pr_a = match mode {
        PnMode::Analytic => s as f64 / mu as f64 * (1.0 - E / (n as f64).sqrt()),
        PnMode::Empirical(p) => p,
    };
    keep * pr_a.clamp(0.0, 1.0)
}

/// Whether `λ ≤ eμ` and `μ ≤ n^{1/2−c}`.
pub fn conditioned_regime(n: u64, mu: u64, lambda: u64, c: f64) -> bool {
    lambda as f64 <= E * mu as f64 && (mu as f64) <= (n as f64).powf(0.5 - c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionedStep {
    pub next: u64,
    pub lambda_pn: f64,
    pub regime_ok: bool,
}

/// One step of `min{Bin(λ, p_n), μ}` from `s`, enforcing `λ p_n ≤ s`.
pub fn conditioned_chain_step(
    s: u64,
    n: u64,
    mu: u64,
    lambda: u64,
    c: f64,
    mode: PnMode,
    rng: &mut RngStream,
) -> Result<ConditionedStep> {
    if s > mu {
        return Err(Error::InvalidParameter(format!("state {s} exceeds mu = {mu}")));
    }
    let regime_ok = conditioned_regime(n, mu, lambda, c);
    if s == 0 {
        return Ok(ConditionedStep {
            next: 0,
            lambda_pn: 0.0,
            regime_ok,
        });
    }
    let p = p_n(s, n, mu, mode);
    let lambda_pn = lambda as f64 * p;
    if lambda_pn > s as f64 * (1.0 + 1e-12) {
        return Err(Error::Guard(format!(
            "lambda * p_n = {lambda_pn} exceeds s = {s}"
        )));
    }
    Ok(ConditionedStep {
        next: sample_binomial(lambda, p, rng).min(mu),
        lambda_pn,
        regime_ok,
    })
}

/// Rejection-sampling estimate of `Pr(A | N_1)`: generations of the real EA
/// from `s` members at `f_top` and `μ − s` one level below, keeping those in
/// which `N_1` holds and recording the fraction of top-level parents picked.
/// Returns `(estimate, rejection_rate)`.
pub fn estimate_pr_a_given_n1(
    n: usize,
    mu: usize,
    lambda: usize,
    s: usize,
    f_top: usize,
    generations: u64,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    if s == 0 || s > mu || f_top == 0 || f_top > n {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= s <= mu and 1 <= f_top <= n, got s = {s}, f_top = {f_top}"
        )));
    }
    let pop = Population::with_levels(n, &[(f_top, s), (f_top - 1, mu - s)], rng)?;
    let mut accepted = 0u64;
    let mut top_picks = 0u64;
    for _ in 0..generations {
        let mut e = Engine::with_population(pop.clone(), lambda)?;
        e.step_fast(rng);
        let off = e.offspring();
        if n1_holds_pool(off, f_top) {
            accepted += 1;
            top_picks += off
                .parent_fitness()
                .iter()
                .filter(|&&f| f as usize == f_top)
                .count() as u64;
        }
    }
    if accepted == 0 {
        return Err(Error::Guard("no generation satisfied N_1".into()));
    }
    let estimate = top_picks as f64 / (accepted * lambda as u64) as f64;
    Ok((estimate, 1.0 - accepted as f64 / generations as f64))
}

/// Per-state `h` drift of the conditioned chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HDriftRow {
    pub s: u64,
    pub drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HDriftReport {
    pub report: DriftReport,
    pub s_min: u64,
    pub rows: Vec<HDriftRow>,
    pub hypothesis_ok: bool,
}

/// Exact `h(s) − E[h(next)]` for the analytic conditioned chain.
pub fn h_drift_at(s: u64, n: u64, mu: u64, lambda: u64) -> f64 {
    let p = p_n(s, n, mu, PnMode::Analytic);
    let pmf = binom_pmf_vec(lambda as usize, p);
    let expected = compensated_sum(pmf.iter().enumerate().map(|(k, &q)| {
        let k = (k as u64).min(mu);
        q * h_potential(k as usize, mu as usize).expect("k <= mu")
    }));
    h_potential(s as usize, mu as usize).expect("s <= mu") - expected
}

/// Minimum of the exact `h` drift over `s ∈ [S, μ]` against `1/β`.
pub fn check_h_drift(n: u64, mu: u64, lambda: u64, c: f64, s_min: u64) -> Result<HDriftReport> {
    if s_min > mu {
        return Err(Error::OutsideHypothesis(format!(
            "S = {s_min} exceeds mu = {mu}; no state satisfies X_t >= S"
        )));
    }
    let rows: Vec<HDriftRow> = (s_min.max(1)..=mu)
        .map(|s| HDriftRow {
            s,
            drift: h_drift_at(s, n, mu, lambda),
        })
        .collect();
    let min = rows.iter().map(|r| r.drift).fold(f64::INFINITY, f64::min);
    let bound = 1.0 / beta();
    Ok(HDriftReport {
        report: DriftReport {
            quantity: "h_drift_min".into(),
            estimate: min,
            ci_low: min,
            ci_high: min,
            bound,
            pass: min >= bound,
        },
        s_min,
        rows,
        hypothesis_ok: conditioned_regime(n, mu, lambda, c),
    })
}

/// Parameters of the phase process `Z_t = Y_{φ(t)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseProcessConfig {
    pub n: u64,
    pub c: f64,
    /// Phase length `⌈4βμ + 1⌉`.
    pub l: u64,
    pub s: u32,
    pub beta: f64,
    /// `Λ = c ln n − S − ln(40β) − 1`.
    pub big_lambda: f64,
    pub a: f64,
    /// `n^c`.
    pub b: f64,
}

/// `c ln n − S − ln(40β) − 1`.
pub fn lambda_param(c: f64, n: f64, s: f64, beta: f64) -> f64 {
    c * n.ln() - s - (40.0 * beta).ln() - 1.0
}

impl PhaseProcessConfig {
    pub fn new(n: u64, mu: u64, c: f64, s: u32, beta: f64) -> Result<Self> {
        if !(c > 0.0 && c < 0.5) {
            return Err(Error::InvalidParameter(format!("c must lie in (0, 1/2), got {c}")));
        }
        Ok(Self {
            n,
            c,
            l: (4.0 * beta * mu as f64 + 1.0).ceil() as u64,
            s,
            beta,
            big_lambda: lambda_param(c, n as f64, s as f64, beta),
            a: 0.0,
            b: (n as f64).powf(c),
        })
    }

    /// The default constants `S` and `β`.
    pub fn standard(n: u64, mu: u64, c: f64) -> Result<Self> {
        Self::new(n, mu, c, s_constant(), beta())
    }

    /// `Y = min{n − f_top, n^c}`.
    pub fn y(&self, f_top: usize) -> f64 {
        ((self.n as f64) - f_top as f64).min(self.b)
    }
}

/// One phase: starts at generation `start` with `Z = z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Phase {
    pub start: u64,
    pub z: f64,
    pub length: u64,
    /// Whether the phase ended early because `Y` dropped below `z`.
    pub improved: bool,
    /// Generations in the phase after which the top level moved from at
    /// most its start value to above it.
    pub crossings: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseProcessOutput {
    /// Completed phases in order.
    pub phases: Vec<Phase>,
    /// `(φ(t), Z_t)` for every phase start, including the start of the
    /// trailing incomplete phase.
    pub sequence: Vec<(u64, f64)>,
    /// Generations covered by completed phases.
    pub consumed: u64,
    /// Every completed phase starting below `b` has at most one crossing.
    pub structural_ok: bool,
}

/// Splits a trace of `f_top` values into phases: a phase lasts `L`
/// generations unless `Y` drops below its start value earlier, in which case
/// it ends at the first such generation.
pub fn phase_process_run(f_tops: &[usize], cfg: &PhaseProcessConfig) -> PhaseProcessOutput {
    let y: Vec<f64> = f_tops.iter().map(|&f| cfg.y(f)).collect();
    let last = f_tops.len().saturating_sub(1);
    let l = cfg.l as usize;
    let mut phases = Vec::new();
    let mut sequence = Vec::new();
    let mut phi = 0usize;
    if f_tops.is_empty() {
        return PhaseProcessOutput {
            phases,
            sequence,
            consumed: 0,
            structural_ok: true,
        };
    }
    loop {
        sequence.push((phi as u64, y[phi]));
        let horizon = (phi + l).min(last);
        let end = (phi + 1..=horizon).find(|&t| y[t] < y[phi]);
        let (next, improved) = match end {
            Some(t) => (t, true),
            None if phi + l <= last => (phi + l, false),
            None => break,
        };
        let top = f_tops[phi];
        let crossings = (phi + 1..=next)
            .filter(|&t| f_tops[t - 1] <= top && f_tops[t] > top)
            .count() as u32;
        phases.push(Phase {
            start: phi as u64,
            z: y[phi],
            length: (next - phi) as u64,
            improved,
            crossings,
        });
        phi = next;
    }
    let structural_ok = phases
        .iter()
        .filter(|p| p.z < cfg.b)
        .all(|p| p.crossings <= 1);
    PhaseProcessOutput {
        consumed: phases.iter().map(|p| p.length).sum(),
        phases,
        sequence,
        structural_ok,
    }
}

/// Empirical jump law of `Z` against `Lλ n^{−k(1−c)}/k!`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpRow {
    pub k: u32,
    pub count: u64,
    pub empirical: f64,
    pub standard_error: f64,
    pub bound: f64,
}

/// `Pr(Z_t − Z_{t+1} = k | Z_t < b)` for `k = 1..=k_max` over consecutive
/// phases of `outputs`.
pub fn jump_profile(
    outputs: &[PhaseProcessOutput],
    cfg: &PhaseProcessConfig,
    lambda: u64,
    k_max: u32,
) -> Vec<JumpRow> {
    let mut total = 0u64;
    let mut counts = vec![0u64; k_max as usize + 1];
    for out in outputs {
        for w in out.sequence.windows(2) {
            let (z0, z1) = (w[0].1, w[1].1);
            if !(z0 > cfg.a && z0 < cfg.b) {
                continue;
            }
            total += 1;
            let jump = z0 - z1;
            if jump >= 1.0 && jump.fract() == 0.0 && jump <= k_max as f64 {
                counts[jump as usize] += 1;
            }
        }
    }
    let nf = cfg.n as f64;
    let mut factorial = 1.0;
    (1..=k_max)
        .map(|k| {
            factorial *= k as f64;
            let count = counts[k as usize];
            JumpRow {
                k,
                count,
                empirical: if total == 0 { 0.0 } else { count as f64 / total as f64 },
                standard_error: proportion_se(count, total),
                bound: cfg.l as f64 * lambda as f64 * nf.powf(-(k as f64) * (1.0 - cfg.c))
                    / factorial,
            }
        })
        .collect()
}

/// `L · D · p · e^{−Λ(b − a)}`, clamped to `[0, 1]`.
pub fn negative_drift_bound(
    big_lambda: f64,
    p: f64,
    d: f64,
    l_window: f64,
    a: f64,
    b: f64,
) -> Result<f64> {
    if !(big_lambda > 0.0) {
        return Err(Error::OutsideHypothesis(format!(
            "Lambda must be positive, got {big_lambda}"
        )));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be at least 1, got {p}")));
    }
    if b < a {
        return Err(Error::InvalidParameter(format!("need b >= a, got a = {a}, b = {b}")));
    }
    if !(d >= 0.0 && l_window >= 0.0) {
        return Err(Error::InvalidParameter("D and L must be non-negative".into()));
    }
    Ok((l_window * d * p * (-big_lambda * (b - a)).exp()).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftDirection {
    /// Drift at least δ: `E[T] ≤ E[X_0]/δ`.
    Upper,
    /// Drift at most δ: `E[T] ≥ E[X_0]/δ`.
    Lower,
}

/// `E[X_0]/δ`, an upper or lower bound on the expected hitting time of 0.
pub fn additive_drift_bound(x0: f64, delta: f64, _direction: DriftDirection) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if x0 < 0.0 {
        return Err(Error::InvalidParameter(format!("x0 must be non-negative, got {x0}")));
    }
    Ok(x0 / delta)
}

/// Steps for the deterministic process `X_{t+1} = max(0, X_t − δ)` to hit 0.
pub fn deterministic_hitting_time(x0: f64, delta: f64) -> u64 {
    let mut x = x0;
    let mut t = 0;
    while x > 1e-9 * x0.max(1.0) {
        x = (x - delta).max(0.0);
        t += 1;
    }
    t
}

/// Exponential-moment estimate with its sign decomposition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentialMomentReport {
    pub report: BoundReport,
    pub big_lambda: f64,
    /// Contributions of steps with `Z_t − Z_{t+1}` negative, zero, positive.
    pub sigma_minus: f64,
    pub sigma_zero: f64,
    pub sigma_plus: f64,
    pub decomposition_error: f64,
}

/// Live EA runs of `generations` each, started with the whole population at
/// `⌈n − n^c⌉ + 1` (strictly inside `(a, b)`); returns their phase
/// decompositions.
pub fn harvest_phases(
    n: usize,
    mu: usize,
    lambda: usize,
    cfg: &PhaseProcessConfig,
    runs: u64,
    generations: u64,
    rng: &mut RngStream,
) -> Result<Vec<PhaseProcessOutput>> {
    let start = top_region_start(n, cfg)?;
    (0..runs)
        .map(|_| {
            let pop = Population::with_levels(n, &[(start, mu)], rng)?;
            let mut e = Engine::with_population(pop, lambda)?;
            let mut f_tops = Vec::with_capacity(generations as usize + 1);
            f_tops.push(e.population().f_top());
            for _ in 0..generations {
                e.step_fast(rng);
                f_tops.push(e.population().f_top());
            }
            Ok(phase_process_run(&f_tops, cfg))
        })
        .collect()
}

fn top_region_start(n: usize, cfg: &PhaseProcessConfig) -> Result<usize> {
    let start = (n as f64 - cfg.b).ceil() as usize + 1;
    if start >= n {
        return Err(Error::InvalidParameter(format!(
            "top region [n - n^c + 1, n) is empty for n = {n}"
        )));
    }
    Ok(start)
}

/// Monte Carlo `E[e^{Λ(Z_t − Z_{t+1})} | a < Z_t < b]` against
/// `1 − e^{−S}/12`. Out of hypothesis unless `Λ > 0`.
pub fn check_exponential_moment(
    n: usize,
    mu: usize,
    lambda: usize,
    cfg: &PhaseProcessConfig,
    outputs: &[PhaseProcessOutput],
    sigma: f64,
) -> Result<ExponentialMomentReport> {
    let bl = cfg.big_lambda;
    let mut values = Vec::new();
    let (mut minus, mut zero, mut plus) = (Vec::new(), 0u64, Vec::new());
    for out in outputs {
        for w in out.sequence.windows(2) {
            let (z0, z1) = (w[0].1, w[1].1);
            if !(z0 > cfg.a && z0 < cfg.b) {
                continue;
            }
            let diff = z0 - z1;
            let v = (bl * diff).exp();
            values.push(v);
            if diff < 0.0 {
                minus.push(v);
            } else if diff == 0.0 {
                zero += 1;
            } else {
                plus.push(v);
            }
        }
    }
    let samples = values.len() as u64;
    if samples == 0 {
        return Err(Error::Guard("no phase step started inside (a, b)".into()));
    }
    let w: Welford = values.iter().copied().collect();
    let nf = samples as f64;
    let sigma_minus = compensated_sum(minus.iter().copied()) / nf;
    let sigma_zero = zero as f64 / nf;
    let sigma_plus = compensated_sum(plus.iter().copied()) / nf;
    let estimate = compensated_sum(values.iter().copied()) / nf;
    let bound = 1.0 - (-(cfg.s as f64)).exp() / 12.0;
    let hypothesis_ok = bl > 0.0 && conditioned_regime(n as u64, mu as u64, lambda as u64, cfg.c);
    Ok(ExponentialMomentReport {
        report: BoundReport {
            lemma: "lemma25".into(),
            hypothesis_ok,
            parameters: serde_json::json!({
                "n": n, "mu": mu, "lambda": lambda, "c": cfg.c, "S": cfg.s,
                "beta": cfg.beta, "L": cfg.l, "Lambda": bl,
            }),
            empirical: estimate,
            standard_error: w.std_err(),
            bound,
            pass: estimate <= bound + sigma * w.std_err(),
            samples,
            rejection_rate: None,
        },
        big_lambda: bl,
        sigma_minus,
        sigma_zero,
        sigma_plus,
        decomposition_error: (sigma_minus + sigma_zero + sigma_plus - estimate).abs(),
    })
}

/// Empirical probability that the top level is lower after `L` generations
/// than at the start, from the top region, against `e^{−S}/4`.
#[allow(clippy::too_many_arguments)]
pub fn check_top_level_loss(
    n: usize,
    mu: usize,
    lambda: usize,
    cfg: &PhaseProcessConfig,
    trials: u64,
    sigma: f64,
    rng: &mut RngStream,
) -> Result<BoundReport> {
    let start = top_region_start(n, cfg)?;
    let mut lost = 0u64;
    for _ in 0..trials {
        let pop = Population::with_levels(n, &[(start, mu)], rng)?;
        let mut e = Engine::with_population(pop, lambda)?;
        for _ in 0..cfg.l {
            e.step_fast(rng);
        }
        if e.population().f_top() < start {
            lost += 1;
        }
    }
    let p = lost as f64 / trials as f64;
    let se = proportion_se(lost, trials);
    let bound = (-(cfg.s as f64)).exp() / 4.0;
    Ok(BoundReport {
        lemma: "cor23".into(),
        hypothesis_ok: conditioned_regime(n as u64, mu as u64, lambda as u64, cfg.c),
        parameters: serde_json::json!({
            "n": n, "mu": mu, "lambda": lambda, "c": cfg.c, "S": cfg.s, "L": cfg.l,
            "start_fitness": start,
        }),
        empirical: p,
        standard_error: se,
        bound,
        pass: p >= bound - sigma * se,
        samples: trials,
        rejection_rate: None,
    })
}
