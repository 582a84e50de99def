#ifndef CMC_H
#define CMC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CmcStatus {
  CMC_STATUS_OK = 0,
  CMC_STATUS_NULL_POINTER = 1,
  CMC_STATUS_INVALID_ARGUMENT = 2,
  CMC_STATUS_PARSE = 3,
  CMC_STATUS_IO = 4,
  CMC_STATUS_NUMERICAL = 5,
  CMC_STATUS_INTERNAL = 6,
} CmcStatus;

/**
 * Opaque calibration store.
 */
typedef struct CmcCalibrationStore CmcCalibrationStore;

/**
 * Opaque coupling map.
 */
typedef struct CmcCouplingMap CmcCouplingMap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread; do not free it.
 */
const char *cmc_last_error(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void cmc_string_free(char *s);

/**
 * Build a coupling map from a short architecture string such as `grid:4x4`
 * or a preset name such as `tokyo`.
 *
 * # Safety
 * `arch` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CmcStatus cmc_coupling_map_from_arch(const char *arch, struct CmcCouplingMap **out);

/**
 * Parse a coupling map from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CmcStatus cmc_coupling_map_from_json(const char *json, struct CmcCouplingMap **out);

/**
 * # Safety
 * `map` must be a live handle; `num_qubits` and `num_edges` valid pointers.
 */
enum CmcStatus cmc_coupling_map_size(const struct CmcCouplingMap *map,
                                     size_t *num_qubits,
                                     size_t *num_edges);

/**
 * JSON form of a coupling map. Free the result with [`cmc_string_free`].
 *
 * # Safety
 * `map` must be a live handle and `out` a valid pointer.
 */
enum CmcStatus cmc_coupling_map_to_json(const struct CmcCouplingMap *map, char **out);

/**
 * Patch plan with minimum patch separation `k`, as JSON.
 *
 * # Safety
 * `map` must be a live handle and `out` a valid pointer.
 */
enum CmcStatus cmc_patch_plan(const struct CmcCouplingMap *map, size_t k, char **out);

/**
 * # Safety
 * `map` must be null or a handle not yet freed.
 */
void cmc_coupling_map_free(struct CmcCouplingMap *map);

/**
 * Calibrate every patch of `map` on a simulated device and build a store.
 * `noise_json` is a noise spec; null means a noiseless device. `shots` is the
 * total calibration budget, split evenly over the plan's circuits.
 *
 * # Safety
 * `map` must be a live handle, `device` and `timestamp` NUL-terminated
 * strings, `noise_json` null or NUL-terminated, and `out` a valid pointer.
 */
enum CmcStatus cmc_store_calibrate_simulated(const struct CmcCouplingMap *map,
                                             const char *noise_json,
                                             size_t k,
                                             uint64_t shots,
                                             uint64_t seed,
                                             const char *device,
                                             const char *timestamp,
                                             struct CmcCalibrationStore **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CmcStatus cmc_store_load(const char *path, struct CmcCalibrationStore **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CmcStatus cmc_store_from_json(const char *json, struct CmcCalibrationStore **out);

/**
 * # Safety
 * `store` must be a live handle and `path` a NUL-terminated string.
 */
enum CmcStatus cmc_store_save(const struct CmcCalibrationStore *store, const char *path);

/**
 * # Safety
 * `store` must be a live handle and `out` a valid pointer.
 */
enum CmcStatus cmc_store_to_json(const struct CmcCalibrationStore *store, char **out);

/**
 * Mitigate raw counts. `counts_json` maps bitstrings over the measured
 * qubits to counts; `measured` lists those qubits (most significant bit
 * first) and may be null with `num_measured == 0` to mean every store qubit.
 * The result is a JSON object of bitstring to probability.
 *
 * # Safety
 * `store` must be a live handle, `counts_json` NUL-terminated, `measured`
 * valid for `num_measured` reads when non-null, and `out` a valid pointer.
 */
enum CmcStatus cmc_store_mitigate(const struct CmcCalibrationStore *store,
                                  const char *counts_json,
                                  const size_t *measured,
                                  size_t num_measured,
                                  char **out);

/**
 * # Safety
 * `store` must be null or a handle not yet freed.
 */
void cmc_store_free(struct CmcCalibrationStore *store);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CMC_H */
