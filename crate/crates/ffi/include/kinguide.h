#ifndef KINGUIDE_H
#define KINGUIDE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call. Values 1 to 3 match the command-line
 exit codes.
 */
typedef enum KgStatus {
  KG_STATUS_OK = 0,
  /*
   Bad input: schema, validation or dimension errors.
   */
  KG_STATUS_INVALID = 1,
  /*
   Failure while running.
   */
  KG_STATUS_RUNTIME = 2,
  /*
   Planner endpoint or credential failure.
   */
  KG_STATUS_EXTERNAL = 3,
  KG_STATUS_NULL_POINTER = 4,
  KG_STATUS_INVALID_UTF8 = 5,
  KG_STATUS_BUFFER_TOO_SMALL = 6,
  KG_STATUS_PANIC = 7,
} KgStatus;

typedef struct KgCheckpoint KgCheckpoint;

typedef struct KgMotion KgMotion;

typedef struct KgPlanSet KgPlanSet;

typedef struct KgSkeleton KgSkeleton;

/*
 World placement of a motion's first frame.
 */
typedef struct KgOrigin {
  double x;
  double z;
  double yaw;
} KgOrigin;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *kg_version(void);

/*
 Copies the calling thread's last error message into `buf` (NUL
 terminated, truncated to `len`). Returns the full message length, or 0
 when there is none.

 # Safety
 `buf` must point to `len` writable bytes or be null.
 */
size_t kg_last_error(char *buf, size_t len);

/*
 # Safety
 `s` must come from this library or be null.
 */
void kg_string_free(char *s);

/*
 The default 22-joint skeleton.
 */
struct KgSkeleton *kg_skeleton_new(void);

/*
 # Safety
 `skel` must come from `kg_skeleton_new` or be null.
 */
void kg_skeleton_free(struct KgSkeleton *skel);

/*
 # Safety
 `skel` must be a live handle or null (returns 0).
 */
size_t kg_skeleton_joint_count(const struct KgSkeleton *skel);

/*
 Parses a motion file in its JSON form.

 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
enum KgStatus kg_motion_from_json(const char *json, struct KgMotion **out);

/*
 Serializes a motion to the JSON motion file form.

 # Safety
 `motion` must be a live handle; `out` must be writable. Free the result
 with `kg_string_free`.
 */
enum KgStatus kg_motion_to_json(const struct KgMotion *motion, char **out);

/*
 # Safety
 `motion` must come from this library or be null.
 */
void kg_motion_free(struct KgMotion *motion);

/*
 # Safety
 `motion` must be a live handle or null (returns 0).
 */
size_t kg_motion_frames(const struct KgMotion *motion);

/*
 # Safety
 `motion` must be a live handle or null (returns 0).
 */
size_t kg_motion_dim(const struct KgMotion *motion);

/*
 World placement recorded with the motion (zero for loaded files).

 # Safety
 `motion` must be a live handle or null (returns the zero origin).
 */
struct KgOrigin kg_motion_origin(const struct KgMotion *motion);

/*
 World joint positions, `frames x joints x 3` doubles, from the motion's
 own origin.

 # Safety
 `out` must point to `len` writable doubles.
 */
enum KgStatus kg_forward_kinematics(const struct KgMotion *motion,
                                    const struct KgSkeleton *skel,
                                    double *out,
                                    size_t len);

/*
 Loads a checkpoint directory.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum KgStatus kg_checkpoint_load(const char *path, struct KgCheckpoint **out);

/*
 # Safety
 `ckpt` must come from `kg_checkpoint_load` or be null.
 */
void kg_checkpoint_free(struct KgCheckpoint *ckpt);

/*
 Generates one motion for `prompt`. `targets_json` (a targets file) and
 `options_json` (a generate config) may be null; without targets the
 motion has the checkpoint's frame count and no constraints.

 # Safety
 String arguments must be NUL-terminated or null where allowed; `out`
 must be writable.
 */
enum KgStatus kg_generate(const struct KgCheckpoint *ckpt,
                          const char *prompt,
                          const char *targets_json,
                          const char *options_json,
                          uint64_t seed,
                          struct KgMotion **out);

/*
 Parses a JSON plan document (one plan or an array of plans).

 # Safety
 `json` must be NUL-terminated; `out` must be writable.
 */
enum KgStatus kg_plans_parse(const char *json, struct KgPlanSet **out);

/*
 # Safety
 `plans` must come from `kg_plans_parse` or be null.
 */
void kg_plans_free(struct KgPlanSet *plans);

/*
 # Safety
 `plans` must be a live handle or null (returns 0).
 */
size_t kg_plans_count(const struct KgPlanSet *plans);

/*
 Canonical JSON of the plan set.

 # Safety
 `plans` must be a live handle; `out` must be writable. Free the result
 with `kg_string_free`.
 */
enum KgStatus kg_plans_to_json(const struct KgPlanSet *plans, char **out);

/*
 Runs the validation rules. Writes a JSON array of diagnostics (warnings
 included) to `out` and returns `Invalid` when any error is present.

 # Safety
 `plans` must be a live handle; `out` must be writable. Free the result
 with `kg_string_free`.
 */
enum KgStatus kg_plans_validate(const struct KgPlanSet *plans, char **out);

/*
 Samples every agent of plan `index`. Writes one motion handle per agent
 into `out` (capacity `capacity`) and the agent count into `written`, which
 is also set when the capacity is too small.
 `config_json` (an interact config) may be null.

 # Safety
 `out` must point to `capacity` writable handle slots; `written` must be
 writable.
 */
enum KgStatus kg_interact(const struct KgCheckpoint *ckpt,
                          const struct KgPlanSet *plans,
                          size_t index,
                          const char *config_json,
                          uint64_t seed,
                          struct KgMotion **out,
                          size_t capacity,
                          size_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KINGUIDE_H */
