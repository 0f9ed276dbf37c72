#ifndef EEG_EMOTION_H
#define EEG_EMOTION_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EegStatus {
  EEG_STATUS_OK = 0,
  EEG_STATUS_NULL_POINTER = 1,
  EEG_STATUS_INVALID_ARGUMENT = 2,
  EEG_STATUS_PARSE = 3,
  EEG_STATUS_IO = 4,
  EEG_STATUS_FORMAT = 5,
  EEG_STATUS_NUMERIC = 6,
  EEG_STATUS_TRAINING = 7,
  EEG_STATUS_BUFFER_TOO_SMALL = 8,
  EEG_STATUS_PANIC = 99,
} EegStatus;

// Preprocessing plus feature extraction for one sample rate.
typedef struct EegExtractor EegExtractor;

// A trained four-class model.
typedef struct EegModel EegModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next call into this library on the same thread.
const char *eeg_last_error(void);

// Length of a feature vector (34).
size_t eeg_feature_count(void);

// Static, NUL-terminated label name for quadrant 1..4, or null.
const char *eeg_label_name(int32_t quadrant);

// Writes the `window_len` smoothing weights for the window center into
// `out`, which must hold at least `window_len` values.
//
// # Safety
// `out` must be valid for `out_len` writes.
enum EegStatus eeg_savgol_coefficients(size_t window_len,
                                       size_t poly_order,
                                       double *out,
                                       size_t out_len);

// Creates an extractor. `sg_window`/`sg_order` of 0 select the defaults
// (11 and 3).
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum EegStatus eeg_extractor_new(double sample_rate_hz,
                                 size_t sg_window,
                                 size_t sg_order,
                                 struct EegExtractor **out);

// Imputes, smooths and extracts the 34 features of one trial.
//
// `samples` is row-major `n_samples x 4` in channel order TP9, AF7, AF8,
// TP10; NaN marks a missing sample. `out` receives 34 values.
//
// # Safety
// `extractor` must come from [`eeg_extractor_new`]; `samples` must be valid
// for `4 * n_samples` reads and `out` for 34 writes.
enum EegStatus eeg_extractor_run(const struct EegExtractor *extractor,
                                 const double *samples,
                                 size_t n_samples,
                                 double *out);

// Releases an extractor. Null is ignored.
//
// # Safety
// `extractor` must come from [`eeg_extractor_new`] and not be used after.
void eeg_extractor_free(struct EegExtractor *extractor);

// Loads a model file written by the `train` command.
//
// # Safety
// `path` must be a NUL-terminated string; `out` valid for one write.
enum EegStatus eeg_model_load(const char *path, struct EegModel **out);

// Parses a model from the JSON text of a model file.
//
// # Safety
// `json` must be a NUL-terminated string; `out` valid for one write.
enum EegStatus eeg_model_from_json(const char *json, struct EegModel **out);

// Predicts the quadrant (1..4) of one raw 34-value feature vector.
// `votes`, if non-null, receives the four per-label vote counts.
//
// # Safety
// `model` must come from a model constructor; `features` valid for 34
// reads; `quadrant` for one write; `votes` null or valid for 4 writes.
enum EegStatus eeg_model_predict(const struct EegModel *model,
                                 const double *features,
                                 int32_t *quadrant,
                                 uint32_t *votes);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must come from a model constructor and not be used after.
void eeg_model_free(struct EegModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EEG_EMOTION_H */
