//! Pixel Error and Keypoint Error, per image and averaged over a dataset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keypoint::KeypointSet;
use crate::mask::SegMask;
use crate::model::{Label, Size};

/// Cost of a keypoint left without a partner, in diagonal-normalized units.
pub const UNMATCHED_PENALTY: f64 = 1.0;

/// Percentage of non-void ground-truth pixels whose label differs.
pub fn pixel_error(pred: &SegMask, gt: &SegMask) -> Result<f64> {
    pred.check_same_size(gt)?;
    let (mut wrong, mut valid) = (0usize, 0usize);
    for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
        if g == Label::Void {
            continue;
        }
        valid += 1;
        wrong += (p != g) as usize;
    }
    if valid == 0 {
        return Err(Error::invalid("ground truth mask is entirely void"));
    }
    Ok(100.0 * wrong as f64 / valid as f64)
}

/// Minimum [`pixel_error`] over the six relabelings of the three wall
/// classes in `pred`.
pub fn pixel_error_wall_permuted(pred: &SegMask, gt: &SegMask) -> Result<f64> {
    const PERMS: [[Label; 3]; 6] = [
        [Label::LeftWall, Label::CenterWall, Label::RightWall],
        [Label::LeftWall, Label::RightWall, Label::CenterWall],
        [Label::CenterWall, Label::LeftWall, Label::RightWall],
        [Label::CenterWall, Label::RightWall, Label::LeftWall],
        [Label::RightWall, Label::LeftWall, Label::CenterWall],
        [Label::RightWall, Label::CenterWall, Label::LeftWall],
    ];
    let mut best = f64::INFINITY;
    for perm in PERMS {
        let relabeled: Vec<Label> = pred
            .labels()
            .iter()
            .map(|&l| match l {
                Label::LeftWall => perm[0],
                Label::CenterWall => perm[1],
                Label::RightWall => perm[2],
                other => other,
            })
            .collect();
        let m = SegMask::from_labels(pred.size(), relabeled)?;
        best = best.min(pixel_error(&m, gt)?);
    }
    Ok(best)
}

/// Mean diagonal-normalized keypoint distance in percent.
///
/// Sets of the same group are compared ID to ID; otherwise a minimum-cost
/// one-to-one assignment is used. Every point without a partner costs
/// [`UNMATCHED_PENALTY`], and each matched cost is capped at the same value.
/// The sum is divided by the larger set size.
pub fn keypoint_error(pred: &KeypointSet, gt: &KeypointSet, image_size: Size) -> Result<f64> {
    if pred.is_empty() && gt.is_empty() {
        return Err(Error::invalid("both keypoint sets are empty"));
    }
    if image_size.is_empty() {
        return Err(Error::invalid(format!("image size {image_size} is empty")));
    }
    let diag = image_size.diagonal();
    let dist = |a: &crate::keypoint::Keypoint, b: &crate::keypoint::Keypoint| {
        ((a.x - b.x).hypot(a.y - b.y) / diag).min(UNMATCHED_PENALTY)
    };
    let n = pred.len().max(gt.len());
    let total = if pred.group() == gt.group() {
        let mut total = 0.0;
        let mut matched = 0usize;
        for p in pred.points() {
            if let Some(g) = gt.get(p.id) {
                total += dist(p, g);
                matched += 1;
            }
        }
        let unmatched = pred.len() + gt.len() - 2 * matched;
        total + unmatched as f64 * UNMATCHED_PENALTY
    } else {
        let cost: Vec<Vec<f64>> = pred
            .points()
            .iter()
            .map(|p| gt.points().iter().map(|g| dist(p, g)).collect())
            .collect();
        let (assigned, _) = min_cost_assignment(&cost);
        let matched = pred.len().min(gt.len());
        assigned + (n - matched) as f64 * UNMATCHED_PENALTY
    };
    Ok(100.0 * total / n as f64)
}

/// Hungarian algorithm on a rectangular cost matrix (rows or columns may be
/// the larger side). Returns the minimum total cost over assignments that
/// match `min(rows, cols)` pairs, and the column chosen for every row.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> (f64, Vec<Option<usize>>) {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return (0.0, vec![None; rows]);
    }
    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    let at = |i: usize, j: usize| if transpose { cost[j][i] } else { cost[i][j] };

    // potentials over 1-based indices, column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut of_small = vec![None; n];
    for j in 1..=m {
        if owner[j] != 0 {
            of_small[owner[j] - 1] = Some(j - 1);
        }
    }
    let mut row_to_col = vec![None; rows];
    let mut total = 0.0;
    for (s, c) in of_small.iter().enumerate() {
        if let Some(c) = *c {
            let (r, col) = if transpose { (c, s) } else { (s, c) };
            row_to_col[r] = Some(col);
            total += cost[r][col];
        }
    }
    (total, row_to_col)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSample {
    pub image_id: String,
    pub pred_mask: SegMask,
    pub pred_keypoints: KeypointSet,
    pub gt_mask: SegMask,
    pub gt_keypoints: KeypointSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub image_id: String,
    pub pixel_error_pct: f64,
    pub keypoint_error_pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedImage {
    pub image_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub image_count: usize,
    pub pixel_error_pct: f64,
    pub keypoint_error_pct: f64,
    pub wall_permutation_tolerant: bool,
    pub images: Vec<ImageMetrics>,
    pub skipped: Vec<SkippedImage>,
}

impl MetricsReport {
    pub fn warning_count(&self) -> usize {
        self.skipped.len()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalOptions {
    pub wall_permutation_tolerant: bool,
}

pub fn image_metrics(sample: &EvalSample, options: EvalOptions) -> Result<ImageMetrics> {
    let pe = if options.wall_permutation_tolerant {
        pixel_error_wall_permuted(&sample.pred_mask, &sample.gt_mask)?
    } else {
        pixel_error(&sample.pred_mask, &sample.gt_mask)?
    };
    let kpe = keypoint_error(&sample.pred_keypoints, &sample.gt_keypoints, sample.gt_mask.size())?;
    Ok(ImageMetrics {
        image_id: sample.image_id.clone(),
        pixel_error_pct: pe,
        keypoint_error_pct: kpe,
    })
}

/// Unweighted mean over images; per-image failures are recorded and skipped.
pub fn dataset_eval(samples: &[EvalSample], options: EvalOptions) -> Result<MetricsReport> {
    if samples.is_empty() {
        return Err(Error::invalid("no images to evaluate"));
    }
    let results: Vec<Result<ImageMetrics>> = samples.iter().map(|s| image_metrics(s, options)).collect();
    aggregate(samples.iter().map(|s| s.image_id.clone()).zip(results), options)
}

pub(crate) fn aggregate(
    results: impl IntoIterator<Item = (String, Result<ImageMetrics>)>,
    options: EvalOptions,
) -> Result<MetricsReport> {
    let mut images = Vec::new();
    let mut skipped = Vec::new();
    for (image_id, r) in results {
        match r {
            Ok(m) => images.push(m),
            Err(e) => {
                log::warn!("skipping image {image_id}: {e}");
                skipped.push(SkippedImage {
                    image_id,
                    reason: e.to_string(),
                });
            }
        }
    }
    if images.is_empty() {
        return Err(Error::Computation(format!(
            "all {} images failed to evaluate",
            skipped.len()
        )));
    }
    let n = images.len() as f64;
    Ok(MetricsReport {
        image_count: images.len(),
        pixel_error_pct: images.iter().map(|m| m.pixel_error_pct).sum::<f64>() / n,
        keypoint_error_pct: images.iter().map(|m| m.keypoint_error_pct).sum::<f64>() / n,
        wall_permutation_tolerant: options.wall_permutation_tolerant,
        images,
        skipped,
    })
}
