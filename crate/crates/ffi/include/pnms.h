#ifndef PNMS_H
#define PNMS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PnmsTieBreak {
  PNMS_TIE_BREAK_PAPER_FAITHFUL = 0,
  PNMS_TIE_BREAK_BY_INDEX = 1,
} PnmsTieBreak;

typedef enum PnmsStatus {
  PNMS_STATUS_OK = 0,
  PNMS_STATUS_NULL_POINTER = 1,
  PNMS_STATUS_INVALID_CONFIG = 2,
  PNMS_STATUS_INVALID_DETECTION = 3,
  /**
   * More detections than the engine's `d_max`.
   */
  PNMS_STATUS_CAPACITY = 4,
  /**
   * The output buffer cannot hold every survivor; `out_len` holds the
   * required length.
   */
  PNMS_STATUS_BUFFER_TOO_SMALL = 5,
  PNMS_STATUS_INTERNAL = 6,
} PnmsStatus;

/**
 * Opaque engine handle.
 */
typedef struct PnmsEngine PnmsEngine;

typedef struct PnmsConfig {
  double theta;
  size_t d_max;
  size_t k;
  size_t workers;
  enum PnmsTieBreak tie_break;
} PnmsConfig;

typedef struct PnmsDetection {
  uint32_t x;
  uint32_t y;
  /**
   * Side length of the square window.
   */
  uint32_t z;
  double s;
} PnmsDetection;

typedef struct PnmsCounters {
  uint64_t map_cells;
  uint64_t map_writes;
  uint64_t reduce_segments;
} PnmsCounters;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default configuration: theta 0.3, d_max 4096, k 32, one worker.
 */
struct PnmsConfig pnms_config_default(void);

/**
 * Creates an engine and stores its handle in `*out`.
 *
 * # Safety
 * `config` must point to a valid `PnmsConfig` and `out` to writable storage
 * for one pointer.
 */
enum PnmsStatus pnms_engine_new(const struct PnmsConfig *config, struct PnmsEngine **out);

/**
 * Releases an engine. Null is ignored.
 *
 * # Safety
 * `engine` must be null or a handle from `pnms_engine_new` not yet freed.
 */
void pnms_engine_free(struct PnmsEngine *engine);

/**
 * Runs NMS on `n` detections and copies the survivors, in input order, to
 * `out`. `counters` may be null.
 *
 * # Safety
 * `engine` must be a live handle, `detections` must point to `n` readable
 * elements (or be null when `n` is 0), `out` to `out_cap` writable elements
 * (or be null when `out_cap` is 0), and `out_len` to writable storage.
 */
enum PnmsStatus pnms_engine_run(struct PnmsEngine *engine,
                                const struct PnmsDetection *detections,
                                size_t n,
                                struct PnmsDetection *out,
                                size_t out_cap,
                                size_t *out_len,
                                struct PnmsCounters *counters);

/**
 * Static, NUL-terminated description of a status code.
 */
const char *pnms_status_message(enum PnmsStatus status);

/**
 * Library version as a static, NUL-terminated string.
 */
const char *pnms_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PNMS_H */
