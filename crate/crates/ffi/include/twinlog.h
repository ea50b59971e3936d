#ifndef TWINLOG_H
#define TWINLOG_H

/* Generated by cbindgen from the twinlog-ffi sources. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TwinlogStatus {
  TWINLOG_STATUS_OK = 0,
  TWINLOG_STATUS_NULL_ARGUMENT = 1,
  TWINLOG_STATUS_INVALID_UTF8 = 2,
  TWINLOG_STATUS_INVALID_SCENARIO = 3,
  TWINLOG_STATUS_INFEASIBLE = 4,
  TWINLOG_STATUS_TOO_LARGE = 5,
  TWINLOG_STATUS_INVALID_ROUTE = 6,
  TWINLOG_STATUS_UNDEFINED = 7,
  TWINLOG_STATUS_RUN_FAILED = 8,
  TWINLOG_STATUS_INVALID_ARGUMENT = 9,
  TWINLOG_STATUS_PANIC = 10,
} TwinlogStatus;

typedef enum TwinlogMode {
  /**
   * Each carrier serves only its own orders.
   */
  TWINLOG_MODE_BASELINE = 0,
  TWINLOG_MODE_COLLABORATIVE = 1,
} TwinlogMode;

typedef enum TwinlogStrategy {
  TWINLOG_STRATEGY_AUTO = 0,
  TWINLOG_STRATEGY_EXACT = 1,
  TWINLOG_STRATEGY_HEURISTIC = 2,
} TwinlogStrategy;

/**
 * A solved plan.
 */
typedef struct TwinlogPlan TwinlogPlan;

/**
 * A validated scenario.
 */
typedef struct TwinlogScenario TwinlogScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next call into this library from the same thread.
 */
const char *twinlog_last_error(void);

/**
 * Parses and validates a scenario from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum TwinlogStatus twinlog_scenario_from_json(const char *json, struct TwinlogScenario **out);

/**
 * Loads a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum TwinlogStatus twinlog_scenario_from_path(const char *path, struct TwinlogScenario **out);

/**
 * The bundled three-carrier showcase.
 *
 * # Safety
 * `out` must be writable.
 */
enum TwinlogStatus twinlog_scenario_showcase(struct TwinlogScenario **out);

/**
 * # Safety
 * `scenario` must come from this library and not be freed twice.
 */
void twinlog_scenario_free(struct TwinlogScenario *scenario);

/**
 * Plans `scenario`; `mode` is a `TwinlogMode` and `strategy` a
 * `TwinlogStrategy` value.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum TwinlogStatus twinlog_solve(const struct TwinlogScenario *scenario,
                                 int32_t mode,
                                 int32_t strategy,
                                 struct TwinlogPlan **out);

/**
 * # Safety
 * `plan` must be a live handle; `out` must be writable.
 */
enum TwinlogStatus twinlog_plan_total_blocks(const struct TwinlogPlan *plan, uint32_t *out);

/**
 * The plan as JSON; release with `twinlog_string_free`.
 *
 * # Safety
 * `plan` must be a live handle; `out` must be writable.
 */
enum TwinlogStatus twinlog_plan_to_json(const struct TwinlogPlan *plan, char **out);

/**
 * # Safety
 * `plan` must come from this library and not be freed twice.
 */
void twinlog_plan_free(struct TwinlogPlan *plan);

/**
 * Blocks travelled along `route` (`len` marker ids) on the scenario's
 * map, or on the plain 5x5 grid when `scenario` is NULL.
 *
 * # Safety
 * `route` must point to `len` readable values; `out` must be writable.
 */
enum TwinlogStatus twinlog_route_length(const struct TwinlogScenario *scenario,
                                        const uint16_t *route,
                                        size_t len,
                                        uint32_t *out);

/**
 * Relative saving `(pre - post) / pre`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TwinlogStatus twinlog_synergy(uint32_t pre, uint32_t post, double *out);

/**
 * Runs the scenario in-process under the simulated clock and returns the
 * distance report as JSON; release with `twinlog_string_free`.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum TwinlogStatus twinlog_run(const struct TwinlogScenario *scenario, uint64_t seed, char **out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void twinlog_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWINLOG_H */
