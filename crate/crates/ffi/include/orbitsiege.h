#ifndef ORBITSIEGE_H
#define ORBITSIEGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OsgEvacuationKind {
  OSG_EVACUATION_KIND_DOWNLINKED = 0,
  /**
   * Still onboard at the end of the horizon.
   */
  OSG_EVACUATION_KIND_PENDING = 1,
  OSG_EVACUATION_KIND_DROPPED = 2,
} OsgEvacuationKind;

typedef enum OsgStatus {
  OSG_STATUS_OK = 0,
  /**
   * No strategy reaches the goal; a result, not a fault.
   */
  OSG_STATUS_ATTACK_FAIL = 1,
  OSG_STATUS_NULL_POINTER = 2,
  OSG_STATUS_INVALID_UTF8 = 3,
  OSG_STATUS_IO = 4,
  OSG_STATUS_PARSE = 5,
  OSG_STATUS_VALIDATION = 6,
  OSG_STATUS_INVALID_REQUEST = 7,
  OSG_STATUS_UNKNOWN_UNIT = 8,
  OSG_STATUS_BUFFER_TOO_SMALL = 9,
  OSG_STATUS_PANIC = 10,
} OsgStatus;

/**
 * A loaded scenario with its target queue and attack surface.
 */
typedef struct OsgScenario OsgScenario;

/**
 * A planned attack strategy.
 */
typedef struct OsgStrategy OsgStrategy;

/**
 * Fate of one unit. `slot` is the downlink or drop slot; zero when pending.
 */
typedef struct OsgEvacuation {
  enum OsgEvacuationKind kind;
  size_t slot;
} OsgEvacuation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *osg_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *osg_version(void);

/**
 * Loads a scenario JSON file and prepares its target queue.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum OsgStatus osg_scenario_load(const char *path, struct OsgScenario **out);

/**
 * Same as [`osg_scenario_load`] from JSON text.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum OsgStatus osg_scenario_from_json(const char *json, struct OsgScenario **out);

/**
 * # Safety
 * `handle` must come from this library and not be used afterwards.
 */
void osg_scenario_free(struct OsgScenario *handle);

/**
 * Last slot of the horizon, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be null or a live scenario handle.
 */
size_t osg_scenario_last_slot(const struct OsgScenario *handle);

/**
 * Fate of `unit_id` under the attacked slots `slots[0..n_slots]`
 * (`slots` may be null when `n_slots` is 0).
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
enum OsgStatus osg_scenario_fate(const struct OsgScenario *handle,
                                 const size_t *slots,
                                 size_t n_slots,
                                 const char *unit_id,
                                 struct OsgEvacuation *out);

/**
 * Plans a delay attack keeping the last target onboard past
 * `target_slot`. A null `targets` uses the scenario's own targets.
 *
 * # Safety
 * `targets` must hold `n_targets` valid strings when non-null; `out` must
 * be valid.
 */
enum OsgStatus osg_plan_delay(const struct OsgScenario *handle,
                              const char *const *targets,
                              size_t n_targets,
                              size_t target_slot,
                              struct OsgStrategy **out);

/**
 * Plans an overflow attack dropping every target.
 *
 * # Safety
 * As for [`osg_plan_delay`].
 */
enum OsgStatus osg_plan_overflow(const struct OsgScenario *handle,
                                 const char *const *targets,
                                 size_t n_targets,
                                 struct OsgStrategy **out);

/**
 * Number of attacked slots.
 *
 * # Safety
 * `strategy` must be null or a live strategy handle.
 */
size_t osg_strategy_len(const struct OsgStrategy *strategy);

/**
 * Total cost.
 *
 * # Safety
 * `strategy` must be null or a live strategy handle.
 */
uint64_t osg_strategy_cost(const struct OsgStrategy *strategy);

/**
 * Copies the attacked slots in ascending order into `buf`. `written`
 * receives the slot count even when the buffer is too small.
 *
 * # Safety
 * `buf` must hold `capacity` elements; `written` must be valid.
 */
enum OsgStatus osg_strategy_slots(const struct OsgStrategy *strategy,
                                  size_t *buf,
                                  size_t capacity,
                                  size_t *written);

/**
 * Fate of the `index`-th target under the strategy.
 *
 * # Safety
 * `out` must be valid.
 */
enum OsgStatus osg_strategy_outcome(const struct OsgStrategy *strategy,
                                    size_t index,
                                    struct OsgEvacuation *out);

/**
 * # Safety
 * `strategy` must come from this library and not be used afterwards.
 */
void osg_strategy_free(struct OsgStrategy *strategy);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORBITSIEGE_H */
