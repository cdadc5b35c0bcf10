//! Directory-level operations behind the command-line tool.

use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{select, SelectConfig};
use crate::io::{
    load_groundtruth, load_prediction_bundle, save_depth_raster, save_groundtruth, save_prediction_bundle,
    save_selection, write_json, GroundTruthData, PredictionBundle, SelectionReport, PREDICTION_FILE,
};
use crate::keypoint::rescale_keypoints;
use crate::layout::{build_layout, rasterize};
use crate::metrics::{aggregate, image_metrics, EvalOptions, EvalSample, MetricsReport};
use crate::model::{RoomType, Size};
use crate::synth::{perturb, sample_scene_of_type, scene_to_groundtruth, PerturbConfig, SceneRanges, SyntheticScene};

pub const SCENES_FILE: &str = "scenes.json";

/// Selects a layout for one bundle and writes the report into `out`.
pub fn select_bundle(bundle_dir: &Path, out: &Path, config: &SelectConfig) -> Result<SelectionReport> {
    let bundle = load_prediction_bundle(bundle_dir)?;
    let result = select(&bundle.inputs, bundle.image_size, config)?;
    let report = SelectionReport::from_result(&bundle.image_id, &result, config);
    save_selection(out, &report, &result.chosen_layout().mask)?;
    Ok(report)
}

/// Independent per-item seed derived from a run seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.next_u64()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneEntry {
    pub image_id: String,
    pub room_type: u8,
    pub scene: SyntheticScene,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthOptions {
    pub count: usize,
    pub seed: u64,
    pub ranges: SceneRanges,
    pub perturb: PerturbConfig,
    pub with_depth: bool,
}

pub fn image_id(index: usize) -> String {
    format!("scene_{index:05}")
}

/// Writes `count` scenes cycling through the 11 room types:
/// `gt/<id>.json` with its mask, `pred/<id>/` prediction bundles and a
/// `scenes.json` index. Output bytes depend only on the options.
pub fn generate_dataset(out: &Path, options: &SynthOptions) -> Result<Vec<SceneEntry>> {
    let gt_dir = out.join("gt");
    let pred_dir = out.join("pred");
    let entries = (0..options.count)
        .into_par_iter()
        .map(|i| {
            let id = image_id(i);
            let target = RoomType::new((i % RoomType::COUNT as usize) as u8)?;
            let scene = sample_scene_of_type(derive_seed(options.seed, i as u64), &options.ranges, Some(target))?;
            let gt = scene_to_groundtruth(&scene, &options.ranges)?;
            let mut cfg = options.perturb;
            cfg.noise.seed = derive_seed(options.perturb.noise.seed, i as u64);
            let inputs = perturb(&gt, &cfg)?;
            save_groundtruth(&gt_dir, &id, gt.room_type, &gt.keypoints, &gt.mask)?;
            if options.with_depth {
                save_depth_raster(&gt_dir.join(format!("{id}_depth.bin")), &gt.depth)?;
            }
            save_prediction_bundle(
                &pred_dir.join(&id),
                &PredictionBundle {
                    image_id: id.clone(),
                    image_size: scene.image_size,
                    inputs,
                },
            )?;
            Ok(SceneEntry {
                image_id: id,
                room_type: gt.room_type.id(),
                scene,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_json(&out.join(SCENES_FILE), &entries)?;
    Ok(entries)
}

/// Prediction record for `image_id`: `<pred>/<id>.json` or
/// `<pred>/<id>/prediction.json`.
fn prediction_path(pred_dir: &Path, image_id: &str) -> Option<PathBuf> {
    [
        pred_dir.join(format!("{image_id}.json")),
        pred_dir.join(image_id).join(PREDICTION_FILE),
    ]
    .into_iter()
    .find(|p| p.is_file())
}

/// A prediction at another resolution is rebuilt from its keypoints and
/// rasterized at the ground-truth size.
fn eval_sample(gt: GroundTruthData, pred: GroundTruthData) -> Result<EvalSample> {
    let size = gt.mask.size();
    let (pred_mask, pred_keypoints) = if pred.mask.size() == size {
        (pred.mask, pred.keypoints)
    } else {
        let kps = rescale_keypoints(&pred.keypoints, size)?;
        let layout = build_layout(
            pred.room_type.group(),
            &kps,
            pred.room_type.floor_present(),
            pred.room_type.ceiling_present(),
            size,
        )?;
        (rasterize(&layout, size), kps)
    };
    Ok(EvalSample {
        image_id: gt.record.image_id.clone(),
        pred_mask,
        pred_keypoints,
        gt_mask: gt.mask,
        gt_keypoints: gt.keypoints,
    })
}

/// Evaluates every `*.json` record in `gt_dir` against `pred_dir`. Images
/// whose prediction is missing or unreadable are skipped with a warning.
pub fn evaluate_dirs(gt_dir: &Path, pred_dir: &Path, options: EvalOptions) -> Result<MetricsReport> {
    let mut gt_files: Vec<PathBuf> = std::fs::read_dir(gt_dir)
        .map_err(|e| Error::io(gt_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    gt_files.sort();
    if gt_files.is_empty() {
        return Err(Error::invalid(format!(
            "no ground-truth records in {}",
            gt_dir.display()
        )));
    }
    let mut results = Vec::with_capacity(gt_files.len());
    for path in gt_files {
        let gt = load_groundtruth(&path)?;
        let id = gt.record.image_id.clone();
        let r = match prediction_path(pred_dir, &id) {
            None => Err(Error::invalid(format!("no prediction for {id}"))),
            Some(p) => load_groundtruth(&p)
                .and_then(|pred| eval_sample(gt, pred))
                .and_then(|s| image_metrics(&s, options)),
        };
        results.push((id, r));
    }
    aggregate(results, options)
}

pub fn image_size_arg(width: u32, height: u32) -> Result<Size> {
    let s = Size::new(width, height);
    if s.is_empty() {
        return Err(Error::invalid(format!("image size {s} is empty")));
    }
    Ok(s)
}
