//! Simulation and verification lab for the (μ,λ) EA on OneMax near the
//! efficiency threshold λ ≈ eμ.
//!
//! The crate is organised around the quantities the runtime analysis of the
//! algorithm uses:
//!
//! - [`ea`]: the exact (μ,λ) EA on OneMax, seeded and observable.
//! - [`transition`]: exact single-mutation fitness transitions and binomial
//!   facts.
//! - [`potential`]: the exponential potential `g`, the `h` potential of the
//!   top level, and the no-improvement event detector.
//! - [`surrogate`]: the reduced binomial chains and drift-theorem bound
//!   evaluators.
//! - [`number_theory`]: rational approximation of e and the gap `ε(μ,λ)`.
//! - [`level`]: the current-level state machine and large-μ experiments.
//! - [`config`], [`report`], [`checks`]: configuration, output formats and the
//!   checker suite behind the `comma-ea` binary.

pub mod batch;
pub mod bench;
pub mod bits;
pub mod checks;
pub mod config;
pub mod ea;
pub mod error;
pub mod level;
pub mod number_theory;
pub mod potential;
pub mod report;
pub mod rng;
pub mod stats;
pub mod surrogate;
pub mod telemetry;
pub mod transition;

pub use bits::{onemax, BitString};
pub use ea::{
    mutate, run_generation, run_until, select_next, Engine, FirstHit, Individual, Population,
    RunResult,
};
pub use error::{Error, Result};
pub use rng::RngStream;
