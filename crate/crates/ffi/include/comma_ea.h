#ifndef COMMA_EA_H
#define COMMA_EA_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Status codes of every exported function.
typedef enum CeStatus {
  CE_STATUS_OK = 0,
  CE_STATUS_NULL_POINTER = 1,
  CE_STATUS_INVALID_PARAMETER = 2,
  CE_STATUS_LAMBDA_BELOW_MU = 3,
  CE_STATUS_OUTSIDE_HYPOTHESIS = 4,
  CE_STATUS_GUARD = 5,
  CE_STATUS_BUFFER_TOO_SMALL = 6,
  CE_STATUS_INTERNAL = 7,
} CeStatus;

// A top-level surrogate chain `min{μ, Bin(λ, (X + Δ)/(eμ))}`.
typedef struct CeChain CeChain;

// A running (μ,λ) EA with its own random stream.
typedef struct CeEngine CeEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ce_version(void);

// Message of the last failure on this thread; valid until the next failing
// call on the same thread.
const char *ce_last_error_message(void);

// Creates an engine with a uniform random population.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum CeStatus ce_engine_new(uintptr_t n,
                            uintptr_t mu,
                            uintptr_t lambda,
                            uint64_t seed,
                            uint64_t stream,
                            struct CeEngine **out);

// Releases an engine. Null is ignored.
//
// # Safety
// `engine` must come from `ce_engine_new` and not have been freed.
void ce_engine_free(struct CeEngine *engine);

// Advances `generations` generations; `optimum_created` (may be null) is set
// if any of them created an optimal offspring.
//
// # Safety
// `engine` must be a live handle; `optimum_created` null or writable.
enum CeStatus ce_engine_step(struct CeEngine *engine, uint64_t generations, bool *optimum_created);

// Steps until an optimal offspring is created or `max_generations` more
// generations have run.
//
// # Safety
// `engine` must be a live handle; `success` must be writable.
enum CeStatus ce_engine_run(struct CeEngine *engine, uint64_t max_generations, bool *success);

// Generation count, fitness evaluations, top fitness and its multiplicity.
//
// # Safety
// `engine` must be a live handle; every out pointer may be null.
enum CeStatus ce_engine_stats(const struct CeEngine *engine,
                              uint64_t *generation,
                              uint64_t *evaluations,
                              uintptr_t *f_top,
                              uintptr_t *x_top);

// Writes the population's fitness histogram (n + 1 entries) to `buf`.
//
// # Safety
// `engine` must be a live handle; `buf` must hold `len` elements.
enum CeStatus ce_engine_histogram(const struct CeEngine *engine, uint64_t *buf, uintptr_t len);

// Creates a surrogate chain at `x0`. `influx <= 0` means no influx.
//
// # Safety
// `out` must be writable.
enum CeStatus ce_chain_new(uint64_t mu,
                           uint64_t lambda,
                           double influx,
                           uint64_t x0,
                           uint64_t seed,
                           struct CeChain **out);

// Releases a chain. Null is ignored.
//
// # Safety
// `chain` must come from `ce_chain_new` and not have been freed.
void ce_chain_free(struct CeChain *chain);

// One step; writes the new state and whether the probability was clamped.
//
// # Safety
// `chain` must be a live handle; `state` writable; `clamped` null or
// writable.
enum CeStatus ce_chain_step(struct CeChain *chain, uint64_t *state, bool *clamped);

// Exact law of the fitness change δ of one mutation for a parent with `d`
// zero-bits out of `n` (n ≤ 64). `buf[i]` receives Pr[δ = i − (n − d)]
// for `i` in `0..=n`.
//
// # Safety
// `buf` must hold `len` elements.
enum CeStatus ce_delta_pmf(uintptr_t n, uintptr_t d, double *buf, uintptr_t len);

// Pr[X ≥ k] for X ~ Bin(m, p).
//
// # Safety
// `out` must be writable.
enum CeStatus ce_binom_upper_tail(uint64_t m, double p, int64_t k, double *out);

// The gap `(μe − λ)/(μe)`; fails with `OUTSIDE_HYPOTHESIS` when λ > μe.
//
// # Safety
// `out` must be writable.
enum CeStatus ce_epsilon_gap(uint64_t mu, uint64_t lambda, double *out);

// `h = x(ln μ − ln x + 2)`, with h(0) = 0.
//
// # Safety
// `out` must be writable.
enum CeStatus ce_h_potential(uintptr_t x_top, uintptr_t mu, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COMMA_EA_H */
