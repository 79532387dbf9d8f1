//! Built-in throughput micro-benchmark of the engine.

use std::time::Instant;

use serde::Serialize;

use crate::ea::Engine;
use crate::error::Result;
use crate::rng::RngStream;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub n: usize,
    pub mu: usize,
    pub lambda: usize,
    pub generations: u64,
    pub evaluations: u64,
    pub seconds: f64,
    pub evals_per_second: f64,
}

/// Offspring evaluations per second of [`Engine::step_fast`] on one thread,
/// over at least `min_seconds` of wall time. The population is restarted when
/// it contains the optimum so the measurement never idles at the end.
pub fn measure_throughput(n: usize, mu: usize, lambda: usize, min_seconds: f64, seed: u64) -> Result<BenchReport> {
    let mut rng = RngStream::new(seed, 0);
    let mut engine = Engine::random(n, mu, lambda, &mut rng)?;
    for _ in 0..50 {
        engine.step_fast(&mut rng);
    }
    let mut evaluations = 0u64;
    let mut generations = 0u64;
    let start = Instant::now();
    loop {
        for _ in 0..100 {
            engine.step_fast(&mut rng);
        }
        generations += 100;
        evaluations += 100 * lambda as u64;
        if engine.population().contains_optimum() {
            engine = Engine::random(n, mu, lambda, &mut rng)?;
        }
        if start.elapsed().as_secs_f64() >= min_seconds {
            break;
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    Ok(BenchReport {
        n,
        mu,
        lambda,
        generations,
        evaluations,
        seconds,
        evals_per_second: evaluations as f64 / seconds,
    })
}
