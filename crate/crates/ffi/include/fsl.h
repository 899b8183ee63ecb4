#ifndef FSL_H
#define FSL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Gap mode selector for [`fsl_gw_estimate`].
 */
typedef enum FslGapMode {
  FSL_GAP_MODE_EXACT = 0,
  FSL_GAP_MODE_AT_LEAST = 1,
} FslGapMode;

/**
 * Result code of every fallible call.
 */
typedef enum FslStatus {
  FSL_STATUS_OK = 0,
  FSL_STATUS_NULL_POINTER = 1,
  FSL_STATUS_INVALID_ARGUMENT = 2,
  FSL_STATUS_CONFIG = 3,
  FSL_STATUS_MODEL = 4,
  FSL_STATUS_IO = 5,
  FSL_STATUS_PANIC = 6,
} FslStatus;

typedef struct FslCarpetCoding FslCarpetCoding;

typedef struct FslCarpetFamily FslCarpetFamily;

typedef struct FslCoding FslCoding;

typedef struct FslGwTree FslGwTree;

typedef struct FslIfsFamily FslIfsFamily;

typedef struct FslOffspring FslOffspring;

typedef struct FslPhi FslPhi;

typedef struct FslRv FslRv;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *fsl_last_error(void);

/**
 * Library version as a static string.
 */
const char *fsl_version(void);

/**
 * Per-trial seed derivation shared with the command-line sweeps.
 */
enum FslStatus fsl_derive_seed(uint64_t master, uint64_t index, const char *tag, uint64_t *out);

/**
 * Parse `zero`, `const:c`, `power:theta` or `loglog:C`.
 */
enum FslStatus fsl_phi_parse(const char *spec, struct FslPhi **out);

void fsl_phi_free(struct FslPhi *phi);

/**
 * `φ(e^{−u})`.
 */
enum FslStatus fsl_phi_eval_log(const struct FslPhi *phi, double u, double *out);

/**
 * Number of levels between `b^{−k}` and `(b^{−k})^{1+φ}`.
 */
enum FslStatus fsl_phi_gap_levels(const struct FslPhi *phi, uint64_t k, double base, uint64_t *out);

/**
 * Writes 1 if `Σ exp(−φ(e^{−k})k)` diverges, 0 if it converges.
 */
enum FslStatus fsl_phi_is_divergent(const struct FslPhi *phi, int32_t *out);

enum FslStatus fsl_offspring_new(const double *probs,
                                 size_t len,
                                 double metric_base,
                                 struct FslOffspring **out);

void fsl_offspring_free(struct FslOffspring *dist);

enum FslStatus fsl_offspring_mean(const struct FslOffspring *dist, double *out);

/**
 * Simulate a tree; with `survive` nonzero, retry seeds `seed + i` until it
 * survives to `depth`.
 */
enum FslStatus fsl_gw_simulate(const struct FslOffspring *dist,
                               size_t depth,
                               uint64_t seed,
                               int32_t survive,
                               struct FslGwTree **out);

void fsl_gw_free(struct FslGwTree *tree);

/**
 * `Z_k`.
 */
enum FslStatus fsl_gw_population(const struct FslGwTree *tree, size_t k, uint64_t *out);

/**
 * Number of level-`l` descendants of node `v` at level `k`.
 */
enum FslStatus fsl_gw_covering_count(const struct FslGwTree *tree,
                                     size_t k,
                                     size_t v,
                                     size_t l,
                                     uint64_t *out);

enum FslStatus fsl_gw_estimate(const struct FslGwTree *tree,
                               const struct FslPhi *phi,
                               size_t k_min,
                               size_t k_max,
                               enum FslGapMode mode,
                               double *out);

/**
 * Family from parallel arrays of branch counts, ratios and weights.
 */
enum FslStatus fsl_ifs_family_new(const uint32_t *branch_counts,
                                  const double *ratios,
                                  const double *weights,
                                  size_t len,
                                  struct FslIfsFamily **out);

void fsl_ifs_family_free(struct FslIfsFamily *family);

enum FslStatus fsl_ifs_dims(const struct FslIfsFamily *family,
                            double *box_dim,
                            double *assouad_dim);

enum FslStatus fsl_ifs_sample_coding(const struct FslIfsFamily *family,
                                     size_t length,
                                     uint64_t seed,
                                     struct FslCoding **out);

void fsl_coding_free(struct FslCoding *coding);

enum FslStatus fsl_coding_estimate(const struct FslCoding *coding,
                                   const struct FslPhi *phi,
                                   size_t k_min,
                                   size_t k_max,
                                   double *out);

enum FslStatus fsl_coding_count_runs(const struct FslCoding *coding,
                                     const struct FslPhi *phi,
                                     double eps,
                                     size_t *out);

/**
 * Family from JSON: `{"entries": [{"m": 2, "n": 4, "cells": [[0, 0]], "p": 1}]}`.
 */
enum FslStatus fsl_carpet_family_from_json(const char *json, struct FslCarpetFamily **out);

void fsl_carpet_family_free(struct FslCarpetFamily *family);

enum FslStatus fsl_carpet_dims(const struct FslCarpetFamily *family,
                               double *box_dim,
                               double *quasi_assouad,
                               double *assouad_dim);

enum FslStatus fsl_carpet_spectrum(const struct FslCarpetFamily *family, double theta, double *out);

enum FslStatus fsl_carpet_sample_coding(const struct FslCarpetFamily *family,
                                        size_t length,
                                        uint64_t seed,
                                        struct FslCarpetCoding **out);

void fsl_carpet_coding_free(struct FslCarpetCoding *coding);

/**
 * With `enforce_band` nonzero, scales where `φ` leaves the affinity band are rejected.
 */
enum FslStatus fsl_carpet_estimate(const struct FslCarpetCoding *coding,
                                   const struct FslPhi *phi,
                                   size_t k_min,
                                   size_t k_max,
                                   int32_t enforce_band,
                                   double *out);

enum FslStatus fsl_carpet_count_events(const struct FslCarpetCoding *coding,
                                       const struct FslPhi *phi,
                                       size_t *out);

enum FslStatus fsl_rv_new(const double *values,
                          const double *probs,
                          size_t len,
                          struct FslRv **out);

void fsl_rv_free(struct FslRv *rv);

enum FslStatus fsl_rv_mgf(const struct FslRv *rv, double theta, double *out);

/**
 * `I(a)`; may be `+inf`.
 */
enum FslStatus fsl_rv_rate(const struct FslRv *rv, double a, double *out);

/**
 * Fraction of `trials` samples with `S_n ≥ a·n`.
 */
enum FslStatus fsl_rv_empirical_tail(const struct FslRv *rv,
                                     double a,
                                     uint64_t n,
                                     uint64_t trials,
                                     uint64_t seed,
                                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FSL_H */
