//! The exponential potential `g`, the process `Z_t`, the `h` potential of the
//! top level and the no-improvement event `N_L`.
//!
//! `g` reaches `τ^{n−f0}`, far beyond `f64` range for realistic `n`, so every
//! potential is handled as its natural logarithm; `f64::NEG_INFINITY` encodes
//! an exact zero.

use serde::Serialize;

use crate::ea::{Engine, Individual, OffspringPool, Population};
use crate::error::{Error, Result};
use crate::report::{BoundReport, DriftReport};
use crate::rng::RngStream;
use crate::stats::{log_sum_exp, proportion_se, Welford, Z95};

/// ln of zero.
pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

/// Parameters of the potential for a fixed gap `ε` and length `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PotentialParams {
    pub n: usize,
    pub epsilon: f64,
    /// `4e/ε`.
    pub tau: f64,
    /// `1 − ln(1 + 1/τ)/τ`.
    pub alpha: f64,
    /// `⌈αn⌉`.
    pub f0: usize,
}

impl PotentialParams {
    pub fn new(epsilon: f64, n: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        let tau = 4.0 * std::f64::consts::E / epsilon;
        let alpha = 1.0 - (1.0 / tau).ln_1p() / tau;
        let f0 = ((alpha * n as f64).ceil() as usize).min(n);
        Ok(Self {
            n,
            epsilon,
            tau,
            alpha,
            f0,
        })
    }

    pub fn ln_tau(&self) -> f64 {
        self.tau.ln()
    }

    /// ln of `τ^{n−f0}`, the value of `g` at which `Z` vanishes.
    pub fn log_ceiling(&self) -> f64 {
        (self.n - self.f0) as f64 * self.ln_tau()
    }

    /// ln g of an individual with fitness `f`.
    pub fn log_g_at(&self, f: usize) -> f64 {
        if f >= self.f0 {
            (f - self.f0) as f64 * self.ln_tau()
        } else {
            LOG_ZERO
        }
    }
}

/// ln g(x).
pub fn g_individual(x: &Individual, params: &PotentialParams) -> f64 {
    params.log_g_at(x.fitness())
}

/// ln g(P) from a fitness histogram.
pub fn log_g_from_histogram(hist: &[usize], params: &PotentialParams) -> f64 {
    let terms: Vec<f64> = hist
        .iter()
        .enumerate()
        .skip(params.f0)
        .filter(|&(_, &c)| c > 0)
        .map(|(f, &c)| (c as f64).ln() + params.log_g_at(f))
        .collect();
    log_sum_exp(&terms)
}

/// ln g(P) = ln Σ_x g(x).
pub fn g_population(pop: &Population, params: &PotentialParams) -> f64 {
    log_g_from_histogram(&pop.histogram(), params)
}

/// ln Z for `Z = max{0, τ^{n−f0} − g}` given ln g.
pub fn log_z_from_log_g(log_g: f64, params: &PotentialParams) -> f64 {
    let ceiling = params.log_ceiling();
    if log_g >= ceiling {
        LOG_ZERO
    } else if log_g == LOG_ZERO {
        ceiling
    } else {
        ceiling + (-(log_g - ceiling).exp_m1()).ln()
    }
}

/// ln Z_t.
pub fn z_process(pop: &Population, params: &PotentialParams) -> f64 {
    log_z_from_log_g(g_population(pop, params), params)
}

/// `x(ln μ − ln x + 2)`, with `h(0) = 0`.
pub fn h_potential(x_top: usize, mu: usize) -> Result<f64> {
    if x_top > mu {
        return Err(Error::InvalidParameter(format!(
            "top-level count {x_top} exceeds mu = {mu}"
        )));
    }
    if x_top == 0 {
        return Ok(0.0);
    }
    let x = x_top as f64;
    Ok(x * ((mu as f64).ln() - x.ln() + 2.0))
}

/// Analysis quantities of one population.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LevelSnapshot {
    pub generation: u64,
    pub f_top: usize,
    pub x_top: usize,
    /// ln g(P_t).
    pub g_value: f64,
    pub h_value: f64,
    /// ln Z_t.
    pub z_value: f64,
}

impl LevelSnapshot {
    pub fn of(pop: &Population, params: &PotentialParams) -> Self {
        let hist = pop.histogram();
        let f_top = hist.iter().rposition(|&c| c > 0).unwrap_or(0);
        let x_top = hist[f_top];
        let g_value = log_g_from_histogram(&hist, params);
        Self {
            generation: pop.generation(),
            f_top,
            x_top,
            g_value,
            h_value: h_potential(x_top, pop.mu()).expect("x_top <= mu"),
            z_value: log_z_from_log_g(g_value, params),
        }
    }
}

/// One offspring, as far as the `N_L` event is concerned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OffspringRecord {
    pub parent_fitness: u32,
    pub fitness: u32,
    pub is_copy: bool,
}

/// All offspring of one generation.
pub type GenerationTrace = Vec<OffspringRecord>;

/// Extracts the `N_L` view of an offspring pool.
pub fn trace_of(pool: &OffspringPool) -> GenerationTrace {
    (0..pool.len())
        .map(|i| OffspringRecord {
            parent_fitness: pool.parent_fitness()[i],
            fitness: pool.fitness()[i],
            is_copy: pool.is_copy(i),
        })
        .collect()
}

#[inline]
fn offspring_respects_top(parent_fitness: u32, fitness: u32, is_copy: bool, f_top: u32) -> bool {
    if parent_fitness < f_top {
        fitness < f_top
    } else if parent_fitness == f_top {
        fitness < f_top || (fitness == f_top && is_copy)
    } else {
        // Parents above the reference level cannot exist while N_L holds.
        false
    }
}

/// Whether one generation satisfies both conditions of `N_1` for `f_top`.
pub fn n1_holds(generation: &[OffspringRecord], f_top: usize) -> bool {
    let f_top = f_top as u32;
    generation
        .iter()
        .all(|o| offspring_respects_top(o.parent_fitness, o.fitness, o.is_copy, f_top))
}

/// [`n1_holds`] read directly from an offspring pool.
pub fn n1_holds_pool(pool: &OffspringPool, f_top: usize) -> bool {
    let f_top = f_top as u32;
    (0..pool.len()).all(|i| {
        offspring_respects_top(
            pool.parent_fitness()[i],
            pool.fitness()[i],
            pool.is_copy(i),
            f_top,
        )
    })
}

/// Whether the first `l` generations of `trace` all satisfy `N_1` for the
/// fixed reference level `f_top`.
pub fn detect_nl(trace: &[GenerationTrace], l: usize, f_top: usize) -> Result<bool> {
    if trace.len() < l {
        return Err(Error::TraceTooShort {
            needed: l,
            got: trace.len(),
        });
    }
    Ok(trace[..l].iter().all(|g| n1_holds(g, f_top)))
}

/// Monte Carlo mean of g(M x) for a parent at fitness `parent_fitness`,
/// compared with the per-parent bound: `(1+ε)/e · g(x)` at or above `f0`,
/// and `2` below it.
pub fn check_offspring_potential(
    params: &PotentialParams,
    parent_fitness: usize,
    samples: u64,
    sigma: f64,
    rng: &mut RngStream,
) -> Result<DriftReport> {
    let n = params.n;
    if parent_fitness > n {
        return Err(Error::InvalidParameter(format!(
            "parent fitness {parent_fitness} exceeds n = {n}"
        )));
    }
    let parent = Individual::with_fitness(n, parent_fitness, rng);
    let sampler = crate::ea::FlipCountSampler::new(n);
    let above = parent_fitness >= params.f0;
    // Above f0 the bound scales with g(x); work with g(Mx)/g(x) = τ^δ to stay
    // in range.
    let (quantity, bound) = if above {
        ("offspring_potential_ratio", (1.0 + params.epsilon) / std::f64::consts::E)
    } else {
        ("offspring_potential_below_f0", 2.0)
    };
    let mut w = Welford::new();
    for _ in 0..samples {
        let child = crate::ea::mutate_counted(&parent, &sampler, rng).child;
        let log_g = params.log_g_at(child.fitness());
        let v = if above {
            (log_g - params.log_g_at(parent_fitness)).exp()
        } else {
            log_g.exp()
        };
        w.push(v);
    }
    Ok(DriftReport::upper(quantity, w.mean(), w.std_err(), bound, sigma))
}

/// Parameters for the live-run g-drift estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GDriftPlan {
    /// Number of frozen snapshots taken along the run.
    pub snapshots: usize,
    /// Generations between consecutive snapshots.
    pub stride: usize,
    /// Offspring generations resampled from each snapshot.
    pub resamples: usize,
}

/// Estimates `E[g(P_{t+1}) − g(P_t) | P_t]` by restarting one generation
/// from frozen snapshots of a live run and compares it with `2λ` at 95%
/// confidence (pass iff the upper end of the interval is at most `2λ`).
pub fn check_g_drift(
    n: usize,
    mu: usize,
    lambda: usize,
    params: &PotentialParams,
    plan: GDriftPlan,
    rng: &mut RngStream,
) -> Result<DriftReport> {
    let mut live = Engine::random(n, mu, lambda, rng)?;
    let mut w = Welford::new();
    for _ in 0..plan.snapshots {
        for _ in 0..plan.stride {
            live.step_fast(rng);
        }
        let snapshot = live.population().clone();
        let g_now = g_population(&snapshot, params).exp();
        for _ in 0..plan.resamples {
            let mut e = Engine::with_population(snapshot.clone(), lambda)?;
            e.step_fast(rng);
            w.push(g_population(e.population(), params).exp() - g_now);
        }
    }
    let se = w.std_err();
    let estimate = w.mean();
    Ok(DriftReport {
        quantity: "g_drift".into(),
        estimate,
        ci_low: estimate - Z95 * se,
        ci_high: estimate + Z95 * se,
        bound: 2.0 * lambda as f64,
        pass: estimate + Z95 * se <= 2.0 * lambda as f64,
    })
}

/// Monte Carlo check that `E[Z_0] ≥ ½ τ^{n−f0}` for a uniform random initial
/// population. Works with `Z_0/τ^{n−f0} ∈ [0, 1]`.
pub fn check_initial_z(
    params: &PotentialParams,
    mu: usize,
    seeds: u64,
    sigma: f64,
    rng: &mut RngStream,
) -> Result<BoundReport> {
    let mut w = Welford::new();
    for i in 0..seeds {
        let mut r = rng.derive(i);
        let pop = Population::random(params.n, mu, &mut r)?;
        w.push((z_process(&pop, params) - params.log_ceiling()).exp());
    }
    let bound = 0.5;
    Ok(BoundReport {
        lemma: "lemma14".into(),
        hypothesis_ok: true,
        parameters: serde_json::json!({
            "n": params.n, "mu": mu, "epsilon": params.epsilon,
            "tau": params.tau, "f0": params.f0,
            "quantity": "E[Z_0] / tau^(n - f0)",
        }),
        empirical: w.mean(),
        standard_error: w.std_err(),
        bound,
        pass: w.mean() >= bound - sigma * w.std_err(),
        samples: seeds,
        rejection_rate: None,
    })
}

/// Empirical `Pr(N_1)` in the top region `f_top ≥ n − n^c + 1`, compared with
/// `1 − e/√n`. The population is held in the region by restarting at
/// `start_fitness` whenever the top level leaves it or reaches the optimum.
pub fn check_n1_probability(
    n: usize,
    mu: usize,
    lambda: usize,
    c: f64,
    start_fitness: usize,
    generations: u64,
    sigma: f64,
    rng: &mut RngStream,
) -> Result<BoundReport> {
    let region = (n as f64 - (n as f64).powf(c) + 1.0).ceil() as usize;
    if start_fitness < region || start_fitness >= n {
        return Err(Error::InvalidParameter(format!(
            "start fitness {start_fitness} must lie in [{region}, {n})"
        )));
    }
    let fresh = |rng: &mut RngStream| -> Result<Engine> {
        let pop = Population::with_levels(n, &[(start_fitness, mu)], rng)?;
        Engine::with_population(pop, lambda)
    };
    let mut engine = fresh(rng)?;
    let mut hits = 0u64;
    for _ in 0..generations {
        let f_top = engine.population().f_top();
        engine.step_fast(rng);
        if n1_holds_pool(engine.offspring(), f_top) {
            hits += 1;
        }
        let now = engine.population().f_top();
        if now < region || now >= n {
            engine = fresh(rng)?;
        }
    }
    let p = hits as f64 / generations as f64;
    let se = proportion_se(hits, generations);
    let bound = 1.0 - std::f64::consts::E / (n as f64).sqrt();
    let hypothesis_ok = lambda as f64 <= std::f64::consts::E * mu as f64
        && (mu as f64) <= (n as f64).powf(0.5 - c);
    Ok(BoundReport {
        lemma: "lemma19".into(),
        hypothesis_ok,
        parameters: serde_json::json!({
            "n": n, "mu": mu, "lambda": lambda, "c": c, "start_fitness": start_fitness,
        }),
        empirical: p,
        standard_error: se,
        bound,
        pass: p >= bound - sigma * se,
        samples: generations,
        rejection_rate: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_match_definition() {
        let p = PotentialParams::new(0.1, 100).unwrap();
        assert!((p.tau - 108.731_273_1).abs() < 1e-6);
        assert!(p.alpha > 0.75 && p.alpha < 1.0);
        assert_eq!(p.f0, (p.alpha * 100.0).ceil() as usize);
        assert!(PotentialParams::new(0.0, 10).is_err());
        assert!(PotentialParams::new(1.0, 10).is_err());
    }

    #[test]
    fn g_examples() {
        let p = PotentialParams::new(0.1, 1000).unwrap();
        assert_eq!(p.log_g_at(p.f0), 0.0);
        assert_eq!(p.log_g_at(p.f0 - 1), LOG_ZERO);
        let g2 = p.log_g_at(p.f0 + 2).exp();
        assert!((g2 - 11_822.49).abs() < 0.01, "{g2}");
    }

    #[test]
    fn g_population_examples() {
        let p = PotentialParams::new(0.9, 1000).unwrap();
        assert_eq!(p.f0, 994);
        let mut rng = RngStream::new(1, 0);
        let pop = Population::with_levels(1000, &[(p.f0, 3), (p.f0 + 1, 2)], &mut rng).unwrap();
        let g = g_population(&pop, &p).exp();
        assert!((g - (3.0 + 2.0 * p.tau)).abs() < 1e-9);
        let low = Population::with_levels(1000, &[(p.f0 - 1, 4)], &mut rng).unwrap();
        assert_eq!(g_population(&low, &p), LOG_ZERO);
        assert_eq!(z_process(&low, &p), p.log_ceiling());
        let at = Population::with_levels(1000, &[(p.f0, 7)], &mut rng).unwrap();
        assert!((g_population(&at, &p).exp() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn z_vanishes_with_optimum() {
        let p = PotentialParams::new(0.5, 20).unwrap();
        let mut rng = RngStream::new(2, 0);
        let pop = Population::with_levels(20, &[(20, 1), (3, 4)], &mut rng).unwrap();
        assert_eq!(z_process(&pop, &p), LOG_ZERO);
    }

    #[test]
    fn h_examples() {
        assert!((h_potential(7, 7).unwrap() - 14.0).abs() < 1e-12);
        assert!((h_potential(1, 30).unwrap() - (30f64.ln() + 2.0)).abs() < 1e-12);
        assert!((h_potential(50, 100).unwrap() - 134.657).abs() < 1e-3);
        assert_eq!(h_potential(0, 5).unwrap(), 0.0);
        assert!(h_potential(6, 5).is_err());
    }

    #[test]
    fn nl_examples() {
        let copies = vec![
            OffspringRecord { parent_fitness: 5, fitness: 5, is_copy: true };
            3
        ];
        assert!(detect_nl(std::slice::from_ref(&copies), 1, 5).unwrap());
        let mut better = copies.clone();
        better[1].fitness = 6;
        better[1].is_copy = false;
        assert!(!detect_nl(&[better], 1, 5).unwrap());
        let mut neutral = copies.clone();
        neutral[0].is_copy = false;
        assert!(!detect_nl(&[neutral], 1, 5).unwrap());
        assert!(matches!(
            detect_nl(&[copies], 2, 5),
            Err(Error::TraceTooShort { needed: 2, got: 1 })
        ));
    }
}
