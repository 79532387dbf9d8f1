//! C ABI for the comma-ea engine.
//!
//! Every function returns a [`CeStatus`]; results are written through out
//! pointers. Handles are opaque and must be released with their `_free`
//! function. After a non-OK status, `ce_last_error_message` describes the
//! failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use comma_ea::ea::Engine;
use comma_ea::number_theory::epsilon_gap;
use comma_ea::potential::h_potential;
use comma_ea::surrogate::{surrogate_step, Influx, SurrogateConfig};
use comma_ea::transition::{binom_upper_tail, delta_pmf_exact, BinomialSpec, FitnessState};
use comma_ea::{Error, RngStream};

/// Status codes of every exported function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    LambdaBelowMu = 3,
    OutsideHypothesis = 4,
    Guard = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

/// A running (μ,λ) EA with its own random stream.
pub struct CeEngine {
    engine: Engine,
    rng: RngStream,
}

/// A top-level surrogate chain `min{μ, Bin(λ, (X + Δ)/(eμ))}`.
pub struct CeChain {
    cfg: SurrogateConfig,
    state: u64,
    t: usize,
    rng: RngStream,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CeStatus {
    match e {
        Error::LambdaBelowMu { .. } => CeStatus::LambdaBelowMu,
        Error::OutsideHypothesis(_) => CeStatus::OutsideHypothesis,
        Error::Guard(_) | Error::TraceTooShort { .. } => CeStatus::Guard,
        Error::InvalidParameter(_) | Error::Config { .. } | Error::UnknownChecker(_) => {
            CeStatus::InvalidParameter
        }
        _ => CeStatus::Internal,
    }
}

/// Runs `f`, mapping errors and panics to a status.
fn guard(f: impl FnOnce() -> Result<(), CeStatus>) -> CeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CeStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            CeStatus::Internal
        }
    }
}

fn lib<T>(r: comma_ea::Result<T>) -> Result<T, CeStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), CeStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        Err(CeStatus::NullPointer)
    } else {
        Ok(())
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ce_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread; valid until the next failing
/// call on the same thread.
#[no_mangle]
pub extern "C" fn ce_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates an engine with a uniform random population.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn ce_engine_new(
    n: usize,
    mu: usize,
    lambda: usize,
    seed: u64,
    stream: u64,
    out: *mut *mut CeEngine,
) -> CeStatus {
    guard(|| {
        non_null(out, "out")?;
        let mut rng = RngStream::new(seed, stream);
        let engine = lib(Engine::random(n, mu, lambda, &mut rng))?;
        *out = Box::into_raw(Box::new(CeEngine { engine, rng }));
        Ok(())
    })
}

/// Releases an engine. Null is ignored.
///
/// # Safety
/// `engine` must come from `ce_engine_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ce_engine_free(engine: *mut CeEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Advances `generations` generations; `optimum_created` (may be null) is set
/// if any of them created an optimal offspring.
///
/// # Safety
/// `engine` must be a live handle; `optimum_created` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ce_engine_step(
    engine: *mut CeEngine,
    generations: u64,
    optimum_created: *mut bool,
) -> CeStatus {
    guard(|| {
        non_null(engine, "engine")?;
        let e = &mut *engine;
        let mut hit = false;
        for _ in 0..generations {
            hit |= e.engine.step_fast(&mut e.rng).optimum_created;
        }
        if !optimum_created.is_null() {
            *optimum_created = hit;
        }
        Ok(())
    })
}

/// Steps until an optimal offspring is created or `max_generations` more
/// generations have run.
///
/// # Safety
/// `engine` must be a live handle; `success` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ce_engine_run(
    engine: *mut CeEngine,
    max_generations: u64,
    success: *mut bool,
) -> CeStatus {
    guard(|| {
        non_null(engine, "engine")?;
        non_null(success, "success")?;
        let e = &mut *engine;
        let mut hit = e.engine.population().contains_optimum();
        let mut g = 0;
        while !hit && g < max_generations {
            hit = e.engine.step_fast(&mut e.rng).optimum_created;
            g += 1;
        }
        *success = hit;
        Ok(())
    })
}

/// Generation count, fitness evaluations, top fitness and its multiplicity.
///
/// # Safety
/// `engine` must be a live handle; every out pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn ce_engine_stats(
    engine: *const CeEngine,
    generation: *mut u64,
    evaluations: *mut u64,
    f_top: *mut usize,
    x_top: *mut usize,
) -> CeStatus {
    guard(|| {
        non_null(engine, "engine")?;
        let e = &(*engine).engine;
        if !generation.is_null() {
            *generation = e.generation();
        }
        if !evaluations.is_null() {
            *evaluations = e.evaluations();
        }
        if !f_top.is_null() {
            *f_top = e.population().f_top();
        }
        if !x_top.is_null() {
            *x_top = e.population().x_top();
        }
        Ok(())
    })
}

/// Writes the population's fitness histogram (n + 1 entries) to `buf`.
///
/// # Safety
/// `engine` must be a live handle; `buf` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn ce_engine_histogram(
    engine: *const CeEngine,
    buf: *mut u64,
    len: usize,
) -> CeStatus {
    guard(|| {
        non_null(engine, "engine")?;
        non_null(buf, "buf")?;
        let hist = (*engine).engine.population().histogram();
        if len < hist.len() {
            set_error(format!("histogram needs {} entries, got {len}", hist.len()));
            return Err(CeStatus::BufferTooSmall);
        }
        let out = std::slice::from_raw_parts_mut(buf, hist.len());
        for (o, h) in out.iter_mut().zip(hist) {
            *o = h as u64;
        }
        Ok(())
    })
}

/// Creates a surrogate chain at `x0`. `influx <= 0` means no influx.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ce_chain_new(
    mu: u64,
    lambda: u64,
    influx: f64,
    x0: u64,
    seed: u64,
    out: *mut *mut CeChain,
) -> CeStatus {
    guard(|| {
        non_null(out, "out")?;
        let influx = if influx > 0.0 {
            Influx::Constant(influx)
        } else {
            Influx::None
        };
        let cfg = lib(SurrogateConfig::new(mu, lambda, influx))?;
        if x0 > mu {
            set_error(format!("x0 = {x0} exceeds mu = {mu}"));
            return Err(CeStatus::InvalidParameter);
        }
        *out = Box::into_raw(Box::new(CeChain {
            cfg,
            state: x0,
            t: 0,
            rng: RngStream::new(seed, 0),
        }));
        Ok(())
    })
}

/// Releases a chain. Null is ignored.
///
/// # Safety
/// `chain` must come from `ce_chain_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ce_chain_free(chain: *mut CeChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// One step; writes the new state and whether the probability was clamped.
///
/// # Safety
/// `chain` must be a live handle; `state` writable; `clamped` null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ce_chain_step(
    chain: *mut CeChain,
    state: *mut u64,
    clamped: *mut bool,
) -> CeStatus {
    guard(|| {
        non_null(chain, "chain")?;
        non_null(state, "state")?;
        let c = &mut *chain;
        let s = lib(surrogate_step(c.state, &c.cfg, c.t, &mut c.rng))?;
        c.state = s.next;
        c.t += 1;
        *state = s.next;
        if !clamped.is_null() {
            *clamped = s.clamped;
        }
        Ok(())
    })
}

/// Exact law of the fitness change δ of one mutation for a parent with `d`
/// zero-bits out of `n` (n ≤ 64). `buf[i]` receives Pr[δ = i − (n − d)]
/// for `i` in `0..=n`.
///
/// # Safety
/// `buf` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn ce_delta_pmf(n: usize, d: usize, buf: *mut f64, len: usize) -> CeStatus {
    guard(|| {
        non_null(buf, "buf")?;
        let state = lib(FitnessState::new(n, d))?;
        let pmf = lib(delta_pmf_exact(&state))?;
        if len < n + 1 {
            set_error(format!("pmf needs {} entries, got {len}", n + 1));
            return Err(CeStatus::BufferTooSmall);
        }
        let out = std::slice::from_raw_parts_mut(buf, n + 1);
        out.fill(0.0);
        let offset = (n - d) as i64;
        for (delta, p) in pmf {
            out[(delta + offset) as usize] = p;
        }
        Ok(())
    })
}

/// Pr[X ≥ k] for X ~ Bin(m, p).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ce_binom_upper_tail(m: u64, p: f64, k: i64, out: *mut f64) -> CeStatus {
    guard(|| {
        non_null(out, "out")?;
        let spec = lib(BinomialSpec::new(m, p))?;
        *out = binom_upper_tail(&spec, k);
        Ok(())
    })
}

/// The gap `(μe − λ)/(μe)`; fails with `OUTSIDE_HYPOTHESIS` when λ > μe.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ce_epsilon_gap(mu: u64, lambda: u64, out: *mut f64) -> CeStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = lib(epsilon_gap(mu, lambda))?;
        Ok(())
    })
}

/// `h = x(ln μ − ln x + 2)`, with h(0) = 0.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ce_h_potential(x_top: usize, mu: usize, out: *mut f64) -> CeStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = lib(h_potential(x_top, mu))?;
        Ok(())
    })
}
