#ifndef UCAL_H
#define UCAL_H

/* Generated by cbindgen from the ucal-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes; zero is success.
typedef enum {
  UCAL_STATUS_OK = 0,
  UCAL_STATUS_NULL_POINTER = 1,
  UCAL_STATUS_INVALID_ARGUMENT = 2,
  UCAL_STATUS_SOLVER_FAILURE = 3,
  UCAL_STATUS_PARSE_ERROR = 4,
  UCAL_STATUS_IO_ERROR = 5,
} ucal_status;

// Opaque transcript handle.
typedef struct ucal_transcript ucal_transcript;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ucal_version(void);

// Message of the most recent failure on this thread, or null. The caller
// frees the returned string with `ucal_string_free`.
char *ucal_last_error_message(void);

// Releases a string allocated by this library. Null is a no-op.
//
// # Safety
// `s` must have been returned by this library and not freed before.
void ucal_string_free(char *s);

// Builds a binary transcript from `len` predicted probabilities of outcome 1
// and `len` outcomes in `{0, 1}`.
//
// # Safety
// `predictions` and `outcomes` must point to `len` readable elements;
// `out` must be a valid pointer.
ucal_status ucal_transcript_new_binary(const double *predictions,
                                       const uint8_t *outcomes,
                                       size_t len,
                                       ucal_transcript **out);

// Builds a multiclass transcript from `len * arity` row-major simplex
// predictions and `len` outcomes in `0..arity`.
//
// # Safety
// `predictions` must point to `len * arity` readable doubles, `outcomes`
// to `len` readable elements; `out` must be valid.
ucal_status ucal_transcript_new_multiclass(size_t arity,
                                           const double *predictions,
                                           const uint32_t *outcomes,
                                           size_t len,
                                           ucal_transcript **out);

// Reads a transcript CSV (`t,x,p` or `t,x,p_1..p_K`).
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be valid.
ucal_status ucal_transcript_read_csv(const char *path, ucal_transcript **out);

// Writes the transcript in the canonical CSV format.
//
// # Safety
// `t` must be a live handle; `path` a NUL-terminated string.
ucal_status ucal_transcript_write_csv(const ucal_transcript *t, const char *path);

// Releases a transcript handle. Null is a no-op.
//
// # Safety
// `t` must have come from this library and not be freed twice.
void ucal_transcript_free(ucal_transcript *t);

// Number of rounds, or 0 for a null handle.
//
// # Safety
// `t` must be a live handle or null.
size_t ucal_transcript_len(const ucal_transcript *t);

// Outcome arity, or 0 for a null handle.
//
// # Safety
// `t` must be a live handle or null.
size_t ucal_transcript_arity(const ucal_transcript *t);

// Base-rate regret under the quadratic (Brier) rule; the multiclass squared
// distance is used for arity above two.
//
// # Safety
// `t` must be a live handle; `out` a valid pointer.
ucal_status ucal_reg_brier(const ucal_transcript *t, double *out);

// L1 calibration error (binary transcripts).
//
// # Safety
// `t` must be a live handle; `out` a valid pointer.
ucal_status ucal_cal_l1(const ucal_transcript *t, double *out);

// L2 calibration error (binary transcripts).
//
// # Safety
// `t` must be a live handle; `out` a valid pointer.
ucal_status ucal_cal_l2(const ucal_transcript *t, double *out);

// Vector (per-outcome) L1 calibration error; defined at every arity.
//
// # Safety
// `t` must be a live handle; `out` a valid pointer.
ucal_status ucal_cal_l1_multiclass(const ucal_transcript *t, double *out);

// Regret of the V-shaped rule centered at `v` (binary transcripts).
//
// # Safety
// `t` must be a live handle; `out` a valid pointer.
ucal_status ucal_vreg(const ucal_transcript *t, double v, double *out);

// V-calibration error (binary transcripts); when `witness_v` is non-null it
// receives the center approaching the supremum.
//
// # Safety
// `t` must be a live handle; `value` valid; `witness_v` valid or null.
ucal_status ucal_vcal(const ucal_transcript *t, double *value, double *witness_v);

// Weak-calibration witness value for the spike test function
// `w(p) = max(0.1 - |0.75 - p|, 0)` (binary transcripts).
//
// # Safety
// `t` must be a live handle; `out` a valid pointer.
ucal_status ucal_weak_cal_spike(const ucal_transcript *t, double *out);

// U-calibration error: the exact maximum base-rate regret over all bounded
// proper scoring rules, by linear programming. `epsilon` is the optimality
// tolerance on reduced costs (pass 0 for the default 1e-9).
//
// # Safety
// `t` must be a live handle; `out` a valid pointer.
ucal_status ucal_max_agent_reg(const ucal_transcript *t, double epsilon, double *out);

// JSON description of the optimal witness scoring rule (anchor table).
// The caller frees the string with `ucal_string_free`.
//
// # Safety
// `t` must be a live handle; `out` a valid pointer.
ucal_status ucal_max_agent_reg_witness_json(const ucal_transcript *t, double epsilon, char **out);

// Standard metric report as a JSON string (same schema as the CLI
// `metrics` subcommand). The caller frees it with `ucal_string_free`.
//
// # Safety
// `t` must be a live handle; `out` a valid pointer.
ucal_status ucal_report_json(const ucal_transcript *t, char **out);

// Runs the randomized binary forecaster against a fixed outcome sequence
// with learning rate `1/sqrt(len)`.
//
// # Safety
// `outcomes` must point to `len` readable elements; `out` must be valid.
ucal_status ucal_run_hedge(const uint8_t *outcomes,
                           size_t len,
                           uint64_t seed,
                           ucal_transcript **out);

// Runs the perturbed-leader multiclass forecaster against a fixed outcome
// sequence.
//
// # Safety
// `outcomes` must point to `len` readable elements; `out` must be valid.
ucal_status ucal_run_ftpl(const uint32_t *outcomes,
                          size_t len,
                          size_t arity,
                          uint64_t seed,
                          ucal_transcript **out);

// Generates a named reference fixture's transcript (see the CLI `example
// --name list` for the catalogue).
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be valid.
ucal_status ucal_fixture_generate(const char *name, size_t t_len, ucal_transcript **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UCAL_H */
