//! The current-level state machine and the large-μ experiments built on it.
//!
//! With `q = ⌈μ/4⌉` and `r = ⌈μ/2⌉`, the current level `f` is lost when fewer
//! than `q` members have fitness at least `f`, and gained when at least `r`
//! members have fitness above `f`. After either event the level re-anchors to
//! the highest `f'` with at least `r` members at or above `f'`. After a loss
//! this is what restarting from level 0 gives, since level 0 always qualifies
//! and gains cascade up to that `f'`.

use serde::Serialize;

use crate::batch::par_map;
use crate::config::Rounding;
use crate::ea::{Engine, Population};
use crate::error::{Error, Result};
use crate::report::{fmt_f64, BoundReport, SWEEP_HEADER};
use crate::rng::RngStream;
use crate::stats::{proportion_se, wilson_interval, Welford, Z95};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelStatus {
    Active,
    Gained,
    Lost,
}

/// State after the most recent update. `status` is the event of that update;
/// `f`, `x`, `y` are already re-anchored when it is not `Active`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CurrentLevelState {
    pub generation: u64,
    pub f: usize,
    /// Generation at which the current level was anchored.
    pub t0: u64,
    /// Members with fitness exactly `f`.
    pub x: usize,
    /// Members with fitness above `f`.
    pub y: usize,
    pub status: LevelStatus,
    pub mu: usize,
}

/// `⌈μ/4⌉`.
pub fn loss_threshold(mu: usize) -> usize {
    mu.div_ceil(4)
}

/// `⌈μ/2⌉`.
pub fn gain_threshold(mu: usize) -> usize {
    mu.div_ceil(2)
}

/// Members at or above each fitness, indexed `0..=n+1`.
fn at_or_above(hist: &[usize]) -> Vec<usize> {
    let mut s = vec![0; hist.len() + 1];
    for f in (0..hist.len()).rev() {
        s[f] = s[f + 1] + hist[f];
    }
    s
}

fn anchor(pop: &Population, status: LevelStatus) -> CurrentLevelState {
    let mu = pop.mu();
    let s = at_or_above(&pop.histogram());
    let r = gain_threshold(mu);
    let f = (0..s.len() - 1).rev().find(|&f| s[f] >= r).unwrap_or(0);
    CurrentLevelState {
        generation: pop.generation(),
        f,
        t0: pop.generation(),
        x: s[f] - s[f + 1],
        y: s[f + 1],
        status,
        mu,
    }
}

impl CurrentLevelState {
    /// Initial state: anchored from level 0, which every population satisfies.
    pub fn initial(pop: &Population) -> Self {
        anchor(pop, LevelStatus::Active)
    }

    /// A state at an explicit level, as if it had been anchored at `t0`.
    pub fn at_level(pop: &Population, f: usize) -> Self {
        let (x, y) = counts(pop, f);
        Self {
            generation: pop.generation(),
            f,
            t0: pop.generation(),
            x,
            y,
            status: LevelStatus::Active,
            mu: pop.mu(),
        }
    }
}

/// `(X(f), Y(f))` for `pop`.
pub fn counts(pop: &Population, f: usize) -> (usize, usize) {
    let f = f as u32;
    pop.fitness().iter().fold((0, 0), |(x, y), &v| {
        if v == f {
            (x + 1, y)
        } else if v > f {
            (x, y + 1)
        } else {
            (x, y)
        }
    })
}

/// Advances the level state to `pop`.
pub fn update_level(state: &CurrentLevelState, pop: &Population) -> CurrentLevelState {
    let mu = pop.mu();
    let (x, y) = counts(pop, state.f);
    if x + y < loss_threshold(mu) {
        anchor(pop, LevelStatus::Lost)
    } else if y >= gain_threshold(mu) {
        anchor(pop, LevelStatus::Gained)
    } else {
        CurrentLevelState {
            generation: pop.generation(),
            x,
            y,
            status: LevelStatus::Active,
            ..*state
        }
    }
}

/// Level state plus event counters.
#[derive(Clone, Debug)]
pub struct LevelTracker {
    state: CurrentLevelState,
    gains: u64,
    losses: u64,
    /// Generations spent in each attempt, split at losses.
    attempts: Vec<u64>,
}

impl LevelTracker {
    pub fn new(pop: &Population) -> Self {
        Self {
            state: CurrentLevelState::initial(pop),
            gains: 0,
            losses: 0,
            attempts: vec![0],
        }
    }

    pub fn state(&self) -> &CurrentLevelState {
        &self.state
    }

    pub fn gains(&self) -> u64 {
        self.gains
    }

    /// Number of losses, each counted as a restart.
    pub fn losses(&self) -> u64 {
        self.losses
    }

    pub fn attempts(&self) -> &[u64] {
        &self.attempts
    }

    pub fn update(&mut self, pop: &Population) -> CurrentLevelState {
        self.state = update_level(&self.state, pop);
        *self.attempts.last_mut().expect("at least one attempt") += 1;
        match self.state.status {
            LevelStatus::Gained => self.gains += 1,
            LevelStatus::Lost => {
                self.losses += 1;
                self.attempts.push(0);
            }
            LevelStatus::Active => {}
        }
        self.state
    }
}

/// Summary of a phase experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseReport {
    pub n: usize,
    pub mu: usize,
    pub lambda: usize,
    pub replicates: usize,
    /// Mean generations until the phase ended.
    pub mean_generations: f64,
    pub standard_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Replicates that hit the generation cap before the phase ended.
    pub censored: usize,
    pub gained: usize,
    pub lost: usize,
    /// Bound on the mean, when the phase has one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

impl PhaseReport {
    pub fn loss_rate(&self) -> f64 {
        self.lost as f64 / self.replicates as f64
    }
}

fn require_efficient(mu: usize, lambda: usize) -> Result<()> {
    if (lambda as f64) < std::f64::consts::E * mu as f64 {
        return Err(Error::OutsideHypothesis(format!(
            "lambda = {lambda} is below e*mu = {:.3}",
            std::f64::consts::E * mu as f64
        )));
    }
    Ok(())
}

fn summarise(
    n: usize,
    mu: usize,
    lambda: usize,
    outcomes: &[(u64, LevelStatus, bool)],
    bound: Option<f64>,
) -> PhaseReport {
    let w: Welford = outcomes.iter().map(|o| o.0 as f64).collect();
    let se = w.std_err();
    PhaseReport {
        n,
        mu,
        lambda,
        replicates: outcomes.len(),
        mean_generations: w.mean(),
        standard_error: se,
        ci_low: w.mean() - Z95 * se,
        ci_high: w.mean() + Z95 * se,
        censored: outcomes.iter().filter(|o| o.2).count(),
        gained: outcomes.iter().filter(|o| o.1 == LevelStatus::Gained).count(),
        lost: outcomes.iter().filter(|o| o.1 == LevelStatus::Lost).count(),
        bound,
    }
}

/// Generations until the current level first exceeds `n/3`, starting from
/// the all-zero population (a uniform start is already past `n/3`).
pub fn run_phase1_experiment(
    n: usize,
    mu: usize,
    lambda: usize,
    replicates: usize,
    max_generations: u64,
    seed: u64,
    jobs: Option<usize>,
) -> Result<PhaseReport> {
    require_efficient(mu, lambda)?;
    let target = n as f64 / 3.0;
    let outcomes = par_map(jobs, replicates, |i| -> Result<(u64, LevelStatus, bool)> {
        let mut rng = RngStream::new(seed, i as u64);
        let pop = Population::with_levels(n, &[(0, mu)], &mut rng)?;
        let mut engine = Engine::with_population(pop, lambda)?;
        let mut tracker = LevelTracker::new(engine.population());
        let mut t = 0;
        while (tracker.state().f as f64) <= target {
            if t == max_generations {
                return Ok((t, LevelStatus::Active, true));
            }
            engine.step_fast(&mut rng);
            tracker.update(engine.population());
            t += 1;
        }
        Ok((t, LevelStatus::Gained, false))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(summarise(n, mu, lambda, &outcomes, None))
}

/// The synthetic phase-2 start: `⌈μ/2⌉` members at `f_start`, the rest one
/// level below.
pub fn phase2_population(
    n: usize,
    mu: usize,
    f_start: usize,
    rng: &mut RngStream,
) -> Result<Population> {
    if f_start == 0 || f_start > n {
        return Err(Error::InvalidParameter(format!(
            "f_start must lie in [1, n], got {f_start}"
        )));
    }
    let top = gain_threshold(mu);
    Population::with_levels(n, &[(f_start, top), (f_start - 1, mu - top)], rng)
}

/// Runs from the synthetic start at `f_start` until the level is gained or
/// lost, comparing the mean time with `8n/(n − f_start)`.
#[allow(clippy::too_many_arguments)]
pub fn run_phase2_experiment(
    n: usize,
    mu: usize,
    lambda: usize,
    f_start: usize,
    replicates: usize,
    max_generations: u64,
    seed: u64,
    jobs: Option<usize>,
) -> Result<PhaseReport> {
    require_efficient(mu, lambda)?;
    if 3 * f_start <= n || f_start >= n {
        return Err(Error::InvalidParameter(format!(
            "f_start must lie in (n/3, n), got {f_start}"
        )));
    }
    let outcomes = par_map(jobs, replicates, |i| -> Result<(u64, LevelStatus, bool)> {
        let mut rng = RngStream::new(seed, i as u64);
        let pop = phase2_population(n, mu, f_start, &mut rng)?;
        let mut engine = Engine::with_population(pop, lambda)?;
        let mut state = CurrentLevelState::initial(engine.population());
        debug_assert_eq!(state.f, f_start);
        for t in 1..=max_generations {
            engine.step_fast(&mut rng);
            state = update_level(&state, engine.population());
            if state.status != LevelStatus::Active {
                return Ok((t, state.status, false));
            }
        }
        Ok((max_generations, LevelStatus::Active, true))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let bound = 8.0 * n as f64 / (n - f_start) as f64;
    Ok(summarise(n, mu, lambda, &outcomes, Some(bound)))
}

/// Whether `μ ≥ n^{2/3} ln⁴ n`.
pub fn large_mu_condition(n: usize, mu: usize) -> bool {
    let nf = n as f64;
    mu as f64 >= nf.powf(2.0 / 3.0) * nf.ln().powi(4)
}

/// Empirical probability that the level `f_start` keeps at least `⌈μ/4⌉`
/// members at or above it for `t` generations, against `(1 − 2/n³)^t`.
#[allow(clippy::too_many_arguments)]
pub fn check_stay_bound(
    n: usize,
    mu: usize,
    lambda: usize,
    f_start: usize,
    t: u64,
    replicates: usize,
    sigma: f64,
    seed: u64,
    jobs: Option<usize>,
) -> Result<BoundReport> {
    if 3 * f_start <= n || f_start >= n {
        return Err(Error::InvalidParameter(format!(
            "f_start must lie in (n/3, n), got {f_start}"
        )));
    }
    let q = loss_threshold(mu);
    let stayed = par_map(jobs, replicates, |i| -> Result<bool> {
        let mut rng = RngStream::new(seed, i as u64);
        let pop = phase2_population(n, mu, f_start, &mut rng)?;
        let mut engine = Engine::with_population(pop, lambda)?;
        for _ in 0..t {
            engine.step_fast(&mut rng);
            let (x, y) = counts(engine.population(), f_start);
            if x + y < q {
                return Ok(false);
            }
        }
        Ok(true)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let hits = stayed.iter().filter(|&&s| s).count() as u64;
    let trials = replicates as u64;
    let p = hits as f64 / trials as f64;
    let se = proportion_se(hits, trials);
    let bound = (1.0 - 2.0 / (n as f64).powi(3)).powf(t as f64);
    let hypothesis_ok =
        lambda as f64 >= std::f64::consts::E * mu as f64 && large_mu_condition(n, mu);
    Ok(BoundReport {
        lemma: "lemma28".into(),
        hypothesis_ok,
        parameters: serde_json::json!({
            "n": n, "mu": mu, "lambda": lambda, "f_start": f_start, "t": t,
            "h": mu as f64 / (n as f64).powf(2.0 / 3.0),
        }),
        empirical: p,
        standard_error: se,
        bound,
        pass: p >= bound - sigma * se,
        samples: trials,
        rejection_rate: None,
    })
}

/// One cell of a threshold sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub n: usize,
    pub mu: usize,
    pub lambda: usize,
    pub ratio: f64,
    pub replicates: usize,
    pub successes: usize,
    /// Mean generations to the first hit among successful replicates; NaN if
    /// none succeeded.
    pub mean_generations: f64,
    /// Wilson 95% interval of the success rate.
    pub ci_low: f64,
    pub ci_high: f64,
    pub in_hypothesis: bool,
}

impl SweepCell {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.replicates as f64
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepSurface {
    pub cells: Vec<SweepCell>,
}

impl SweepSurface {
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{SWEEP_HEADER}")?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                c.n,
                c.mu,
                c.lambda,
                fmt_f64(c.ratio),
                c.replicates,
                c.successes,
                fmt_f64(c.mean_generations),
                fmt_f64(c.ci_low),
                fmt_f64(c.ci_high),
                c.in_hypothesis
            )?;
        }
        Ok(())
    }
}

/// Whether a sweep cell lies inside a regime the runtime results cover:
/// below the threshold (super-polynomial lower bound), at least 10% above it
/// with `λ ≥ 3 ln n`, or at or above it with `μ ≥ n^{2/3} ln⁴ n`.
pub fn sweep_in_hypothesis(n: usize, mu: usize, lambda: usize) -> bool {
    let ratio = lambda as f64 / (std::f64::consts::E * mu as f64);
    ratio < 1.0
        || large_mu_condition(n, mu)
        || (ratio >= EFFICIENT_RATIO && lambda as f64 >= 3.0 * (n as f64).ln())
}

/// Smallest `λ/(eμ)` treated as a constant-factor margin above the threshold.
pub const EFFICIENT_RATIO: f64 = 1.1;

/// Sweep specification.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    pub n: usize,
    pub mu_grid: Vec<usize>,
    pub ratio_grid: Vec<f64>,
    pub rounding: Rounding,
    pub budget_generations: u64,
    pub replicates: usize,
    pub seed: u64,
}

impl SweepPlan {
    /// The random stream of replicate `rep` in cell `cell`.
    pub fn stream(&self, cell: usize, rep: usize) -> RngStream {
        RngStream::new(self.seed, ((cell as u64) << 32) | rep as u64)
    }
}

/// Success rate and time-to-hit for each (μ, ratio) cell.
pub fn run_threshold_sweep(plan: &SweepPlan, jobs: Option<usize>) -> Result<SweepSurface> {
    if plan.mu_grid.is_empty() || plan.ratio_grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grids must not be empty".into()));
    }
    if plan.replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be at least 1".into()));
    }
    let mut cells = Vec::new();
    for &mu in &plan.mu_grid {
        for &ratio in &plan.ratio_grid {
            let lambda = plan.rounding.apply(ratio * std::f64::consts::E * mu as f64) as usize;
            if lambda < mu {
                return Err(Error::LambdaBelowMu { mu, lambda });
            }
            cells.push((mu, ratio, lambda));
        }
    }
    let work = cells.len() * plan.replicates;
    let runs = par_map(jobs, work, |k| -> Result<(bool, u64)> {
        let (cell, rep) = (k / plan.replicates, k % plan.replicates);
        let (mu, _, lambda) = cells[cell];
        let mut rng = plan.stream(cell, rep);
        let mut engine = Engine::random(plan.n, mu, lambda, &mut rng)?;
        if engine.population().contains_optimum() {
            return Ok((true, 0));
        }
        while engine.generation() < plan.budget_generations {
            if engine.step_fast(&mut rng).optimum_created {
                return Ok((true, engine.generation()));
            }
        }
        Ok((false, engine.generation()))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let cells = cells
        .iter()
        .enumerate()
        .map(|(i, &(mu, ratio, lambda))| {
            let chunk = &runs[i * plan.replicates..(i + 1) * plan.replicates];
            let times: Welford = chunk.iter().filter(|r| r.0).map(|r| r.1 as f64).collect();
            let successes = times.count() as usize;
            let (ci_low, ci_high) =
                wilson_interval(successes as u64, plan.replicates as u64, Z95);
            SweepCell {
                n: plan.n,
                mu,
                lambda,
                ratio,
                replicates: plan.replicates,
                successes,
                mean_generations: if successes == 0 { f64::NAN } else { times.mean() },
                ci_low,
                ci_high,
                in_hypothesis: sweep_in_hypothesis(plan.n, mu, lambda),
            }
        })
        .collect();
    Ok(SweepSurface { cells })
}
