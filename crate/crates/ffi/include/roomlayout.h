#ifndef ROOMLAYOUT_H
#define ROOMLAYOUT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RlGroup {
  RL_GROUP_A = 0,
  RL_GROUP_B = 1,
  RL_GROUP_C = 2,
} RlGroup;

typedef enum RlStatus {
  RL_STATUS_OK = 0,
  RL_STATUS_NULL_POINTER = 1,
  RL_STATUS_INVALID_INPUT = 2,
  RL_STATUS_DIMENSION_MISMATCH = 3,
  RL_STATUS_LAYOUT = 4,
  RL_STATUS_COMPUTATION = 5,
  RL_STATUS_IO = 6,
  RL_STATUS_PANIC = 7,
} RlStatus;

/**
 * Opaque keypoint heatmap stack.
 */
typedef struct RlHeatmap RlHeatmap;

/**
 * Opaque label mask.
 */
typedef struct RlMask RlMask;

typedef struct RlSelectConfig {
  double lambda;
  double iou_threshold;
  double presence_tau;
  double min_confidence;
} RlSelectConfig;

typedef struct RlScore {
  uint32_t matching_regions;
  double mean_iou;
  double total;
} RlScore;

/**
 * Keypoint in image pixels; `id` is 1-based within the group.
 */
typedef struct RlKeypoint {
  uint8_t id;
  double x;
  double y;
} RlKeypoint;

typedef struct RlSelection {
  enum RlGroup group;
  uint8_t room_type;
  /**
   * Totals for A, B, C; a hypothesis that failed to build is -infinity.
   */
  double totals[3];
} RlSelection;

typedef struct RlCameraFit {
  double ratio;
  double focal;
  double rotation[3];
  double translation[3];
  double rms_residual;
  uint32_t iterations;
  bool converged;
  bool degenerate;
} RlCameraFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next `rl_` call on the same thread.
 */
const char *rl_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rl_version(void);

/**
 * Creates a mask from `width * height` row-major label codes (0-5).
 *
 * # Safety
 * `codes` must point to `len` readable bytes and `out_mask` to writable storage
 * for one pointer.
 */
enum RlStatus rl_mask_new(uint32_t width,
                          uint32_t height,
                          const uint8_t *codes,
                          size_t len,
                          struct RlMask **out_mask);

/**
 * Loads an 8-bit label PNG.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out_mask` must be writable.
 */
enum RlStatus rl_mask_load(const char *path, struct RlMask **out_mask);

/**
 * # Safety
 * `mask` must be a live handle and `path` a NUL-terminated string.
 */
enum RlStatus rl_mask_save(const struct RlMask *mask, const char *path);

/**
 * # Safety
 * `mask` must be a live handle; `width` and `height` must be writable.
 */
enum RlStatus rl_mask_size(const struct RlMask *mask, uint32_t *width, uint32_t *height);

/**
 * Copies the label codes into `buf`, which must hold `width * height` bytes.
 *
 * # Safety
 * `mask` must be a live handle and `buf` must point to `len` writable bytes.
 */
enum RlStatus rl_mask_codes(const struct RlMask *mask, uint8_t *buf, size_t len);

/**
 * # Safety
 * `mask` must be null or a handle not yet freed.
 */
void rl_mask_free(struct RlMask *mask);

/**
 * Wraps channel-major heatmap values (`channels * width * height`, in
 * [0, 1]) for `group`.
 *
 * # Safety
 * `values` must point to `len` readable floats; `out_heatmap` must be
 * writable.
 */
enum RlStatus rl_heatmap_new(enum RlGroup group,
                             uint32_t width,
                             uint32_t height,
                             double sigma,
                             const float *values,
                             size_t len,
                             struct RlHeatmap **out_heatmap);

/**
 * Loads a heatmap directory (`kp_<id>.png` files plus sidecar).
 *
 * # Safety
 * `dir` must be a NUL-terminated string; `out_heatmap` must be writable.
 */
enum RlStatus rl_heatmap_load(const char *dir, struct RlHeatmap **out_heatmap);

/**
 * # Safety
 * `heatmap` must be null or a handle not yet freed.
 */
void rl_heatmap_free(struct RlHeatmap *heatmap);

/**
 * Default selection parameters.
 */
struct RlSelectConfig rl_select_config_default(void);

/**
 * Scores a layout mask against a segmentation.
 *
 * # Safety
 * Both handles must be live; `out_score` must be writable.
 */
enum RlStatus rl_score(const struct RlMask *layout_mask,
                       const struct RlMask *segmentation,
                       double lambda,
                       double iou_threshold,
                       struct RlScore *out_score);

/**
 * Rasterizes the layout of `group` built from image-frame keypoints.
 *
 * # Safety
 * `points` must point to `count` keypoints; `out_mask` must be writable.
 */
enum RlStatus rl_rasterize(enum RlGroup group,
                           bool floor_present,
                           bool ceiling_present,
                           const struct RlKeypoint *points,
                           size_t count,
                           uint32_t width,
                           uint32_t height,
                           struct RlMask **out_mask);

/**
 * Runs the three hypotheses and picks one. `segmentations` and `heatmaps`
 * hold three handles each, in A, B, C order. `config` may be null for the
 * defaults; `out_mask` may be null when the chosen mask is not needed.
 *
 * # Safety
 * The arrays must hold three live handles each; `out_selection` must be
 * writable.
 */
enum RlStatus rl_select(const struct RlMask *const *segmentations,
                        const struct RlHeatmap *const *heatmaps,
                        uint32_t width,
                        uint32_t height,
                        const struct RlSelectConfig *config,
                        struct RlSelection *out_selection,
                        struct RlMask **out_mask);

/**
 * Selects from a prediction bundle directory and writes the report files
 * into `out_dir`.
 *
 * # Safety
 * Both paths must be NUL-terminated strings; `config` may be null;
 * `out_selection` must be writable.
 */
enum RlStatus rl_select_bundle(const char *bundle_dir,
                               const char *out_dir,
                               const struct RlSelectConfig *config,
                               struct RlSelection *out_selection);

/**
 * Pixel error in percent.
 *
 * # Safety
 * Both handles must be live; `out_pct` must be writable.
 */
enum RlStatus rl_pixel_error(const struct RlMask *pred, const struct RlMask *gt, double *out_pct);

/**
 * Keypoint error in percent of the image diagonal.
 *
 * # Safety
 * `pred` and `gt` must point to `pred_count` and `gt_count` keypoints;
 * `out_pct` must be writable.
 */
enum RlStatus rl_keypoint_error(enum RlGroup pred_group,
                                const struct RlKeypoint *pred,
                                size_t pred_count,
                                enum RlGroup gt_group,
                                const struct RlKeypoint *gt,
                                size_t gt_count,
                                uint32_t width,
                                uint32_t height,
                                double *out_pct);

/**
 * Fits a unit-width box and pinhole camera to the eight keypoints of a
 * type-0 layout.
 *
 * # Safety
 * `points` must point to `count` keypoints; `out_fit` must be writable.
 */
enum RlStatus rl_fit_camera(const struct RlKeypoint *points,
                            size_t count,
                            uint32_t width,
                            uint32_t height,
                            struct RlCameraFit *out_fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROOMLAYOUT_H */
