#include <math.h>
#include <stdio.h>
#include <string.h>

#include "roomlayout.h"

#define CHECK(cond)                                                     \
  do {                                                                  \
    if (!(cond)) {                                                      \
      const char *e = rl_last_error();                                  \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond, e ? e : ""); \
      return 1;                                                         \
    }                                                                   \
  } while (0)

int main(void) {
  /* 4x4 floor, top row center wall */
  uint8_t gt_codes[16], pred_codes[16];
  for (int i = 0; i < 16; i++) {
    gt_codes[i] = 1;
    pred_codes[i] = i < 4 ? 4 : 1;
  }
  RlMask *gt = NULL, *pred = NULL;
  CHECK(rl_mask_new(4, 4, gt_codes, 16, &gt) == RL_STATUS_OK);
  CHECK(rl_mask_new(4, 4, pred_codes, 16, &pred) == RL_STATUS_OK);

  double pe = 0.0;
  CHECK(rl_pixel_error(pred, gt, &pe) == RL_STATUS_OK);
  CHECK(fabs(pe - 25.0) < 1e-12);

  RlScore s;
  CHECK(rl_score(pred, gt, 1.0, 0.8, &s) == RL_STATUS_OK);
  CHECK(s.matching_regions == 0);

  RlMask *small = NULL;
  CHECK(rl_mask_new(2, 2, gt_codes, 4, &small) == RL_STATUS_OK);
  CHECK(rl_pixel_error(small, gt, &pe) == RL_STATUS_DIMENSION_MISMATCH);
  CHECK(rl_last_error() != NULL);
  CHECK(rl_pixel_error(NULL, gt, &pe) == RL_STATUS_NULL_POINTER);

  RlKeypoint a[1] = {{1, 100.0, 100.0}};
  RlKeypoint b[1] = {{1, 130.0, 140.0}};
  double kpe = 0.0;
  CHECK(rl_keypoint_error(RL_GROUP_C, b, 1, RL_GROUP_C, a, 1, 300, 400, &kpe) == RL_STATUS_OK);
  CHECK(fabs(kpe - 10.0) < 1e-12);

  /* type 9: one wall and a floor */
  RlKeypoint c[2] = {{3, 0.0, 60.0}, {4, 100.0, 70.0}};
  RlMask *raster = NULL;
  CHECK(rl_rasterize(RL_GROUP_C, true, false, c, 2, 100, 100, &raster) == RL_STATUS_OK);
  uint32_t w = 0, h = 0;
  CHECK(rl_mask_size(raster, &w, &h) == RL_STATUS_OK);
  CHECK(w == 100 && h == 100);
  static uint8_t codes[100 * 100];
  CHECK(rl_mask_codes(raster, codes, sizeof codes) == RL_STATUS_OK);
  CHECK(codes[0] == 4 && codes[99 * 100] == 1);

  rl_mask_free(raster);
  rl_mask_free(small);
  rl_mask_free(pred);
  rl_mask_free(gt);
  rl_mask_free(NULL);
  printf("ok %s\n", rl_version());
  return 0;
}
