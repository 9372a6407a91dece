#ifndef TIAM_H
#define TIAM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TiamStatus {
  TIAM_STATUS_OK = 0,
  TIAM_STATUS_NULL_ARGUMENT = 1,
  TIAM_STATUS_INVALID_UTF8 = 2,
  /**
   * Input rejected by a schema or semantic check.
   */
  TIAM_STATUS_INVALID = 3,
  TIAM_STATUS_IO = 4,
  /**
   * Result does not fit the output type.
   */
  TIAM_STATUS_OVERFLOW = 5,
  TIAM_STATUS_PANIC = 6,
} TiamStatus;

/**
 * Opaque palette handle.
 */
typedef struct TiamPalette TiamPalette;

/**
 * Opaque template handle.
 */
typedef struct TiamTemplate TiamTemplate;

typedef struct TiamLab {
  double l;
  double a;
  double b;
} TiamLab;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Valid until the next
 * failing call on the same thread; never null.
 */
const char *tiam_last_error(void);

/**
 * # Safety
 * `s` must come from this library, or be null.
 */
void tiam_string_free(char *s);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum TiamStatus tiam_template_from_json(const char *json, struct TiamTemplate **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum TiamStatus tiam_template_load(const char *path, struct TiamTemplate **out);

/**
 * # Safety
 * `t` must come from `tiam_template_*`, or be null.
 */
void tiam_template_free(struct TiamTemplate *t);

/**
 * Closed-form number of prompts the template yields.
 *
 * # Safety
 * `t` must be a live handle; `out` must be writable.
 */
enum TiamStatus tiam_template_count(const struct TiamTemplate *t, uint64_t *out);

/**
 * The full prompt dataset as JSON. Free with `tiam_string_free`.
 *
 * # Safety
 * `t` must be a live handle; `out_json` must be writable.
 */
enum TiamStatus tiam_template_generate_json(const struct TiamTemplate *t, char **out_json);

/**
 * # Safety
 * `out` must be writable.
 */
enum TiamStatus tiam_palette_standard(struct TiamPalette **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum TiamStatus tiam_palette_load(const char *path, struct TiamPalette **out);

/**
 * # Safety
 * `p` must come from `tiam_palette_*`, or be null.
 */
void tiam_palette_free(struct TiamPalette *p);

struct TiamLab tiam_srgb_to_lab(uint8_t r, uint8_t g, uint8_t b);

/**
 * Name of the nearest reference color. Free with `tiam_string_free`.
 *
 * # Safety
 * `p` must be a live handle; `out_name` must be writable.
 */
enum TiamStatus tiam_palette_classify(const struct TiamPalette *p,
                                      uint8_t r,
                                      uint8_t g,
                                      uint8_t b,
                                      char **out_name);

/**
 * IoU of two masks given as `{"size": [h, w], "counts": [...]}`.
 *
 * # Safety
 * Both strings must be NUL-terminated; `out` must be writable.
 */
enum TiamStatus tiam_mask_iou(const char *mask_a, const char *mask_b, double *out);

/**
 * Score a results document against a dataset document. Writes a JSON
 * array of outcomes sorted by prompt id and seed. Records that cannot be
 * scored make the call fail.
 *
 * # Safety
 * Strings must be NUL-terminated, `palette` a live handle and `out_json`
 * writable.
 */
enum TiamStatus tiam_score_json(const char *dataset_json,
                                const char *results_json,
                                const struct TiamPalette *palette,
                                double confidence_threshold,
                                double dedup_iou,
                                double binding_threshold,
                                char **out_json);

/**
 * Mean success over a JSON array of outcomes.
 *
 * # Safety
 * `outcomes_json` must be NUL-terminated; `out` must be writable.
 */
enum TiamStatus tiam_compute_tiam(const char *outcomes_json, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TIAM_H */
