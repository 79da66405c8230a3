/* C ABI for the exmart change-point detector. */

#ifndef EXMART_H
#define EXMART_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Betting-function family.
typedef enum ExmartBetting {
  EXMART_BETTING_POWER = 0,
  EXMART_BETTING_MIXTURE = 1,
  EXMART_BETTING_ODD = 2,
  EXMART_BETTING_PLUGIN = 3,
} ExmartBetting;

// p-value computation mode.
typedef enum ExmartMode {
  EXMART_MODE_FULL = 0,
  EXMART_MODE_INDUCTIVE = 1,
} ExmartMode;

// Result of an FFI call.
typedef enum ExmartStatus {
  EXMART_STATUS_OK = 0,
  // A required pointer argument was null.
  EXMART_STATUS_NULL_POINTER = 1,
  // The configuration failed validation.
  EXMART_STATUS_INVALID_CONFIG = 2,
  // The pushed sample was rejected (non-finite value, dimension change,
  // empty feature vector).
  EXMART_STATUS_INVALID_DATA = 3,
  // An internal invariant failed; the handle is still safe to free.
  EXMART_STATUS_PANIC = 4,
} ExmartStatus;

// Concentration-inequality test backing the alarm.
typedef enum ExmartTest {
  EXMART_TEST_AZUMA = 0,
  EXMART_TEST_DOOB = 1,
} ExmartTest;

// Opaque detector handle.
typedef struct ExmartDetector ExmartDetector;

// Plain-old-data detector configuration.
//
// Numeric fields accept 0 (or a non-positive value) to request the
// built-in default noted on each field.
typedef struct ExmartConfig {
  enum ExmartMode mode;
  // Leading samples consumed as the training set (inductive mode).
  size_t train_size;
  // Sliding window W; 0 selects 100.
  size_t window;
  // Significance level; must lie in (0,1).
  double alpha;
  enum ExmartTest test;
  enum ExmartBetting betting;
  // Power betting epsilon; non-positive selects 0.92.
  double epsilon;
  // Increment bound / plug-in clip; non-positive selects the family
  // default (3 for plugin, 1 otherwise).
  double bound;
  // Seed of the tie-break randomization.
  uint64_t seed;
  // Reset the martingale after an alarm instead of halting.
  bool continue_after_alarm;
  // Use cumulative instead of windowed density moments.
  bool cumulative_estimator;
  // Density-estimation window; 0 shares `window`.
  size_t estimator_window;
  // Divide inductive p-values by the literal stream index instead of
  // training size + 1.
  bool literal_denominator;
} ExmartConfig;

// What one pushed sample produced.
typedef struct ExmartStep {
  // 1-based p-value step index; 0 while training or halted.
  uint64_t step;
  double p_value;
  double increment;
  // `S_n` for additive betting, `log S_n` for multiplicative.
  double martingale;
  double alpha_hat;
  double beta_hat;
  // True when this step raised an alarm.
  bool alarm;
  // Statistic and threshold of the alarm (0 when `alarm` is false).
  double statistic;
  double threshold;
  // True while the sample was absorbed into the training set.
  bool in_training;
  // True when an earlier alarm halted the detector and the sample was
  // ignored.
  bool halted;
} ExmartStep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Fills `out` with the default configuration: inductive mode, training
// size 200, W = 100, α = 0.05, Azuma test, plug-in betting, seed 0.
//
// # Safety
// `out` must be null or point to writable storage for one `ExmartConfig`.
enum ExmartStatus exmart_config_default(struct ExmartConfig *out);

// Creates a detector. On success `*out` owns the handle; release it with
// [`exmart_detector_free`].
//
// # Safety
// `config` must point to a valid `ExmartConfig` and `out` to writable
// storage for one pointer.
enum ExmartStatus exmart_detector_new(const struct ExmartConfig *config,
                                      struct ExmartDetector **out);

// Feeds one sample of `len` features and fills `out` with the step
// outcome. Training samples set `in_training`; after a halting alarm the
// call returns `Ok` with `halted` set and the sample is ignored.
//
// # Safety
// `detector` must be a live handle from [`exmart_detector_new`];
// `features` must point to `len` readable doubles; `out` must be writable.
enum ExmartStatus exmart_detector_push(struct ExmartDetector *detector,
                                       const double *features,
                                       size_t len,
                                       struct ExmartStep *out);

// Number of alarms raised so far; 0 for a null handle.
//
// # Safety
// `detector` must be null or a live handle.
uint64_t exmart_detector_alarm_count(const struct ExmartDetector *detector);

// True when a halting alarm stopped the detector.
//
// # Safety
// `detector` must be null or a live handle.
bool exmart_detector_halted(const struct ExmartDetector *detector);

// Releases a handle. Null is a no-op.
//
// # Safety
// `detector` must be null or a handle from [`exmart_detector_new`] not
// yet freed.
void exmart_detector_free(struct ExmartDetector *detector);

// `√(2W·ln(2/α))` — the windowed Hoeffding–Azuma threshold for b = 1.
double exmart_azuma_threshold(size_t window, double alpha);

// `√(W/(12α))` — the windowed Doob–Kolmogorov threshold.
double exmart_doob_threshold(size_t window, double alpha);

// ABI version: major·10000 + minor·100 + patch.
uint32_t exmart_ffi_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* EXMART_H */
