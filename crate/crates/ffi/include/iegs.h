#ifndef IEGS_H
#define IEGS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes; the nonzero ones match the exit codes of the `iegs`
// binary where a counterpart exists.
typedef enum IegsStatus {
  IEGS_STATUS_OK = 0,
  // Null pointer, bad UTF-8 or an index out of range.
  IEGS_STATUS_INVALID_ARGUMENT = 1,
  // Parse, validation, structural or range error in the inputs.
  IEGS_STATUS_INVALID_INPUT = 2,
  // Newton divergence, singular matrix, domain error or step underflow.
  IEGS_STATUS_SOLVER_FAILURE = 3,
  IEGS_STATUS_IO = 4,
  // A panic was caught at the boundary.
  IEGS_STATUS_INTERNAL = 5,
} IegsStatus;

// Scenario bound to the network it was loaded against.
typedef struct IegsScenario IegsScenario;

// Validated network.
typedef struct IegsSystem IegsSystem;

// Sampled solver output.
typedef struct IegsTrajectory IegsTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next failing call on the same thread.
const char *iegs_last_error(void);

// Library version as a static string.
const char *iegs_version(void);

// Loads and validates a network file.
//
// # Safety
// `path` must be a nul-terminated string and `out` a writable pointer.
enum IegsStatus iegs_system_load(const char *path, struct IegsSystem **out);

// # Safety
// `system` must be null or a handle from [`iegs_system_load`] not yet freed.
void iegs_system_free(struct IegsSystem *system);

// Number of gas nodes, pipelines and buses.
//
// # Safety
// `system` must be a live handle; the count pointers may be null.
enum IegsStatus iegs_system_counts(const struct IegsSystem *system,
                                   size_t *nodes,
                                   size_t *pipelines,
                                   size_t *buses);

// Loads a scenario file and binds it against `system`.
//
// # Safety
// `system` must be a live handle, `path` a nul-terminated string and `out`
// a writable pointer.
enum IegsStatus iegs_scenario_load(const struct IegsSystem *system,
                                   const char *path,
                                   struct IegsScenario **out);

// # Safety
// `scenario` must be null or a handle from [`iegs_scenario_load`] not yet
// freed.
void iegs_scenario_free(struct IegsScenario *scenario);

// Runs one method, given as `method:key=value,...` (for example
// `dt:order=5,dx=1000` or `ieuler:dt=180,dx=1000`).
//
// # Safety
// `system` and `scenario` must be live handles, the scenario loaded
// against that system; `method` must be a nul-terminated string and `out`
// a writable pointer.
enum IegsStatus iegs_simulate(const struct IegsSystem *system,
                              const struct IegsScenario *scenario,
                              const char *method,
                              struct IegsTrajectory **out);

// # Safety
// `traj` must be null or a handle from [`iegs_simulate`] not yet freed.
void iegs_trajectory_free(struct IegsTrajectory *traj);

// Number of sample times; 0 for a null handle.
//
// # Safety
// `traj` must be null or a live handle.
size_t iegs_trajectory_samples(const struct IegsTrajectory *traj);

// Number of variables (columns excluding time); 0 for a null handle.
//
// # Safety
// `traj` must be null or a live handle.
size_t iegs_trajectory_variables(const struct IegsTrajectory *traj);

// Name of variable `col`, or null when out of range. Owned by the handle.
//
// # Safety
// `traj` must be null or a live handle.
const char *iegs_trajectory_name(const struct IegsTrajectory *traj, size_t col);

// Column index of a variable, or -1 when absent.
//
// # Safety
// `traj` must be null or a live handle and `name` null or nul-terminated.
ptrdiff_t iegs_trajectory_find(const struct IegsTrajectory *traj, const char *name);

// Sample time `row` in seconds.
//
// # Safety
// `traj` must be a live handle and `out` writable.
enum IegsStatus iegs_trajectory_time(const struct IegsTrajectory *traj, size_t row, double *out);

// Value of variable `col` at sample `row`.
//
// # Safety
// `traj` must be a live handle and `out` writable.
enum IegsStatus iegs_trajectory_value(const struct IegsTrajectory *traj,
                                      size_t row,
                                      size_t col,
                                      double *out);

// Copies one column (`samples` values) into `buf` of length `len`.
//
// # Safety
// `traj` must be a live handle and `buf` valid for `len` writes.
enum IegsStatus iegs_trajectory_column(const struct IegsTrajectory *traj,
                                       size_t col,
                                       double *buf,
                                       size_t len);

// Method name, step count and wall-clock seconds from the provenance.
// Any output pointer may be null.
//
// # Safety
// `traj` must be a live handle. The method string is owned by the handle.
enum IegsStatus iegs_trajectory_provenance(const struct IegsTrajectory *traj,
                                           const char **method,
                                           size_t *steps,
                                           double *wall_clock_s);

// Writes the result file and its provenance sidecar.
//
// # Safety
// `traj` must be a live handle and `path` nul-terminated.
enum IegsStatus iegs_trajectory_write(const struct IegsTrajectory *traj, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IEGS_H */
