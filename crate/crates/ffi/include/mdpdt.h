/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef MDPDT_H
#define MDPDT_H

#include <stddef.h>
#include <stdint.h>

typedef enum MdpdtAgentKind {
  MDPDT_AGENT_KIND_MDP_DT = 0,
  MDPDT_AGENT_KIND_STATIC_MDP = 1,
  MDPDT_AGENT_KIND_QDT = 2,
  MDPDT_AGENT_KIND_Q_LEARNING = 3,
} MdpdtAgentKind;

typedef enum MdpdtStatus {
  MDPDT_STATUS_OK = 0,
  MDPDT_STATUS_NULL_POINTER = 1,
  MDPDT_STATUS_INVALID_ARGUMENT = 2,
  MDPDT_STATUS_INSUFFICIENT_SAMPLE = 3,
  MDPDT_STATUS_DEGENERATE_VARIANCE = 4,
  MDPDT_STATUS_CONFIG = 5,
  MDPDT_STATUS_IO = 6,
  MDPDT_STATUS_PANIC = 7,
} MdpdtStatus;

typedef enum MdpdtTest {
  MDPDT_TEST_STUDENT_T = 0,
  MDPDT_TEST_WELCH = 1,
  MDPDT_TEST_MANN_WHITNEY = 2,
  MDPDT_TEST_KOLMOGOROV_SMIRNOV = 3,
} MdpdtTest;

// An agent together with the RNG driving its exploration.
typedef struct MdpdtAgent MdpdtAgent;

// A parsed experiment configuration.
typedef struct MdpdtConfig MdpdtConfig;

// A simulated cluster.
typedef struct MdpdtEnv MdpdtEnv;

// Result of a two-sample test. `degrees_of_freedom` is NaN for the rank
// and distribution tests.
typedef struct MdpdtTestOutcome {
  double statistic;
  double p_value;
  double degrees_of_freedom;
} MdpdtTestOutcome;

typedef struct MdpdtRunMetrics {
  size_t steps;
  double total_reward;
  size_t splits_total;
  size_t splits_correct;
  size_t final_states;
} MdpdtRunMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next call into the library on the same thread.
const char *mdpdt_last_error(void);

// Runs a two-sample test on `a[0..na]` and `b[0..nb]`.
//
// # Safety
// `a` and `b` must point to `na` and `nb` readable doubles; `out_result` must be
// writable.
enum MdpdtStatus mdpdt_two_sample_test(enum MdpdtTest test,
                                       const double *a,
                                       size_t na,
                                       const double *b,
                                       size_t nb,
                                       struct MdpdtTestOutcome *out_result);

// Parses a TOML experiment configuration from a string.
//
// # Safety
// `toml` must be a NUL-terminated string; `out_config` must be writable.
enum MdpdtStatus mdpdt_config_parse(const char *toml, struct MdpdtConfig **out_config);

// Loads a TOML experiment configuration from a file.
//
// # Safety
// `path` must be a NUL-terminated string; `out_config` must be writable.
enum MdpdtStatus mdpdt_config_load(const char *path, struct MdpdtConfig **out_config);

// # Safety
// `config` must come from `mdpdt_config_parse`/`mdpdt_config_load` or be null.
void mdpdt_config_free(struct MdpdtConfig *config);

// Creates the simulated cluster described by `config`.
//
// # Safety
// `config` must be a live handle; `out_env` must be writable.
enum MdpdtStatus mdpdt_env_new(const struct MdpdtConfig *config,
                               uint64_t seed,
                               struct MdpdtEnv **out_env);

// # Safety
// `env` must come from `mdpdt_env_new` or be null.
void mdpdt_env_free(struct MdpdtEnv *env);

// Number of measurement parameters and of actions.
//
// # Safety
// `env` must be a live handle; the out pointers must be writable.
enum MdpdtStatus mdpdt_env_dims(const struct MdpdtEnv *env,
                                size_t *out_params,
                                size_t *out_actions);

// Copies the current measurement into `buf`, which must hold at least
// as many values as `mdpdt_env_dims` reports.
//
// # Safety
// `env` must be a live handle; `buf` must be writable for `len` doubles.
enum MdpdtStatus mdpdt_env_observe(const struct MdpdtEnv *env, double *buf, size_t len);

// Applies `action` and writes the reward.
//
// # Safety
// `env` must be a live handle; `out_reward` must be writable.
enum MdpdtStatus mdpdt_env_step(struct MdpdtEnv *env, size_t action, double *out_reward);

// Creates an agent from the `[agent]` section of `config`.
//
// # Safety
// `config` must be a live handle; `out_agent` must be writable.
enum MdpdtStatus mdpdt_agent_new(const struct MdpdtConfig *config,
                                 enum MdpdtAgentKind kind,
                                 uint64_t seed,
                                 struct MdpdtAgent **out_agent);

// # Safety
// `agent` must come from `mdpdt_agent_new` or be null.
void mdpdt_agent_free(struct MdpdtAgent *agent);

// Runs `steps` sense-act steps. With `train` non-zero the agent explores
// with probability `epsilon` and learns; otherwise it acts greedily and
// learns nothing.
//
// # Safety
// `agent` and `env` must be live handles; `out_metrics` must be writable.
enum MdpdtStatus mdpdt_agent_run(struct MdpdtAgent *agent,
                                 struct MdpdtEnv *env,
                                 size_t steps,
                                 int32_t train,
                                 double epsilon,
                                 struct MdpdtRunMetrics *out_metrics);

// Replays an experience log file through the agent's learning machinery.
//
// # Safety
// `agent` must be a live handle; `path` a NUL-terminated string.
enum MdpdtStatus mdpdt_agent_train_file(struct MdpdtAgent *agent,
                                        const char *path,
                                        size_t *out_splits);

// Current number of abstract states.
//
// # Safety
// `agent` must be a live handle; `out_states` must be writable.
enum MdpdtStatus mdpdt_agent_num_states(const struct MdpdtAgent *agent, size_t *out_states);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MDPDT_H */
