#ifndef ZONEMEM_H
#define ZONEMEM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ZmStrategy {
  ZM_STRATEGY_SEMANTIC = 0,
  ZM_STRATEGY_GEOMETRIC = 1,
} ZmStrategy;

typedef enum ZmStatus {
  ZM_STATUS_OK = 0,
  ZM_STATUS_NULL_POINTER = 1,
  ZM_STATUS_INVALID_ARGUMENT = 2,
  ZM_STATUS_IO = 3,
  ZM_STATUS_FORMAT = 4,
  ZM_STATUS_NOT_FOUND = 5,
  ZM_STATUS_INCONSISTENT = 6,
  ZM_STATUS_PANIC = 7,
} ZmStatus;

/**
 * A loaded or generated map.
 */
typedef struct ZmMap ZmMap;

/**
 * The result of one replay run.
 */
typedef struct ZmReport ZmReport;

/**
 * A live working-set policy fed one pose at a time.
 */
typedef struct ZmSession ZmSession;

/**
 * Parameters for synthetic world generation.
 */
typedef struct ZmWorldSpec {
  size_t rooms;
  double room_w;
  double room_h;
  double corridor_w;
  double kf_spacing;
  uint64_t payload_bytes;
  uint64_t seed;
} ZmWorldSpec;

/**
 * Replay parameters. `k_max == 0` selects 1.5x the largest zone.
 */
typedef struct ZmReplayOptions {
  enum ZmStrategy strategy;
  size_t k_max;
  bool prefetch;
  double lc_radius;
  size_t lc_min;
  double r_load;
  double r_unload;
} ZmReplayOptions;

typedef struct ZmSummary {
  uint64_t total_transactions;
  uint64_t batch_loads;
  uint64_t batch_unloads;
  uint64_t kf_loads;
  uint64_t kf_unloads;
  size_t peak_resident_count;
  uint64_t peak_resident_bytes;
  uint64_t budget_violations;
  uint64_t over_budget_zone_events;
  uint64_t lc_opportunities;
  uint64_t lc_accepted;
  double lc_hit_ratio;
} ZmSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *zm_last_error_message(void);

struct ZmWorldSpec zm_world_spec_default(void);

struct ZmReplayOptions zm_replay_options_default(void);

/**
 * Generates a synthetic world.
 *
 * # Safety
 * `spec` must point to a valid `ZmWorldSpec`; `out` must be writable.
 */
enum ZmStatus zm_world_generate(const struct ZmWorldSpec *spec, struct ZmMap **out);

/**
 * Opens a map directory.
 *
 * # Safety
 * `dir` must be a nul-terminated string; `out` must be writable.
 */
enum ZmStatus zm_map_open(const char *dir, struct ZmMap **out);

/**
 * Writes the map directory (zones.json, keyframes.jsonl, index.json).
 *
 * # Safety
 * `map` must be a live handle; `dir` a nul-terminated string.
 */
enum ZmStatus zm_map_write(const struct ZmMap *map, const char *dir);

/**
 * # Safety
 * `map` must be NULL or a handle not yet freed.
 */
void zm_map_free(struct ZmMap *map);

/**
 * # Safety
 * `map` must be NULL or a live handle.
 */
size_t zm_map_zone_count(const struct ZmMap *map);

/**
 * # Safety
 * `map` must be NULL or a live handle.
 */
size_t zm_map_keyframe_count(const struct ZmMap *map);

/**
 * # Safety
 * `map` must be NULL or a live handle.
 */
size_t zm_map_largest_zone(const struct ZmMap *map);

/**
 * Zone containing `(x, y)`; `ZM_STATUS_NOT_FOUND` when outside every zone.
 *
 * # Safety
 * `map` must be a live handle; `zone_id` must be writable.
 */
enum ZmStatus zm_map_locate(const struct ZmMap *map, double x, double y, uint32_t *zone_id);

/**
 * Replays the map's default patrol.
 *
 * # Safety
 * `map` and `options` must be valid; `out` writable.
 */
enum ZmStatus zm_replay_default_patrol(const struct ZmMap *map,
                                       const struct ZmReplayOptions *options,
                                       struct ZmReport **out);

/**
 * Replays a `t,x,y,theta` trajectory CSV.
 *
 * # Safety
 * `map` and `options` must be valid; `trajectory_csv` nul-terminated; `out` writable.
 */
enum ZmStatus zm_replay_run(const struct ZmMap *map,
                            const char *trajectory_csv,
                            const struct ZmReplayOptions *options,
                            struct ZmReport **out);

/**
 * # Safety
 * `report` must be a live handle; `out` writable.
 */
enum ZmStatus zm_report_summary(const struct ZmReport *report, struct ZmSummary *out);

/**
 * # Safety
 * `report` must be a live handle; `path` nul-terminated.
 */
enum ZmStatus zm_report_write_json(const struct ZmReport *report, const char *path);

/**
 * # Safety
 * `report` must be a live handle; `path` nul-terminated.
 */
enum ZmStatus zm_report_write_timeseries(const struct ZmReport *report, const char *path);

/**
 * # Safety
 * `report` must be NULL or a handle not yet freed.
 */
void zm_report_free(struct ZmReport *report);

/**
 * Starts a session with nothing resident. The session keeps its own
 * reference to the map, so the map handle may be freed afterwards.
 *
 * # Safety
 * `map` must be a live handle; `out` writable.
 */
enum ZmStatus zm_session_new(const struct ZmMap *map,
                             enum ZmStrategy strategy,
                             size_t k_max,
                             struct ZmSession **out);

/**
 * Feeds one pose; advances the session tick.
 *
 * # Safety
 * `session` must be a live handle.
 */
enum ZmStatus zm_session_update(struct ZmSession *session, double x, double y, double theta);

/**
 * Changes the budget; evicts immediately when it shrinks.
 *
 * # Safety
 * `session` must be a live handle.
 */
enum ZmStatus zm_session_set_budget(struct ZmSession *session, size_t k_max);

/**
 * # Safety
 * `session` must be NULL or a live handle.
 */
size_t zm_session_resident_count(const struct ZmSession *session);

/**
 * # Safety
 * `session` must be NULL or a live handle.
 */
uint64_t zm_session_transactions(const struct ZmSession *session);

/**
 * # Safety
 * `session` must be NULL or a handle not yet freed.
 */
void zm_session_free(struct ZmSession *session);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZONEMEM_H */
