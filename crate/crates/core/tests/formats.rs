use std::fs;

use roomlayout::heatmap::{encode, DEFAULT_RESOLUTION, DEFAULT_SIGMA};
use roomlayout::hypothesis::{select, SelectConfig};
use roomlayout::io::{
    load_depth_raster, load_groundtruth, load_heatmaps, load_mask, load_prediction_bundle, save_depth_raster,
    save_groundtruth, save_heatmaps, save_mask, save_prediction_bundle, PredictionBundle,
};
use roomlayout::synth::{perturb, sample_scene_of_type, scene_to_groundtruth, PerturbConfig, SceneRanges};
use roomlayout::{Error, RoomType, Size};

fn ground_truth(seed: u64, type_id: u8) -> roomlayout::synth::GroundTruth {
    let ranges = SceneRanges {
        image_size: Size::new(120, 90),
        ..SceneRanges::default()
    };
    let scene = sample_scene_of_type(seed, &ranges, Some(RoomType::new(type_id).unwrap())).unwrap();
    scene_to_groundtruth(&scene, &ranges).unwrap()
}

#[test]
fn masks_and_records_reload_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let gt = ground_truth(1, 4);
    let mask_path = dir.path().join("m.png");
    save_mask(&mask_path, &gt.mask).unwrap();
    assert_eq!(load_mask(&mask_path).unwrap(), gt.mask);

    let rec = save_groundtruth(dir.path(), "img", gt.room_type, &gt.keypoints, &gt.mask).unwrap();
    let back = load_groundtruth(&rec).unwrap();
    assert_eq!(back.room_type, gt.room_type);
    assert_eq!(back.keypoints, gt.keypoints);
    assert_eq!(back.mask, gt.mask);
}

#[test]
fn heatmaps_reload_to_their_quantized_values() {
    let dir = tempfile::tempdir().unwrap();
    let gt = ground_truth(2, 0);
    let hm = encode(&gt.keypoints, DEFAULT_RESOLUTION, DEFAULT_SIGMA).unwrap();
    save_heatmaps(dir.path(), &hm).unwrap();
    let back = load_heatmaps(dir.path()).unwrap();
    assert_eq!(back.group(), hm.group());
    assert_eq!(back.size(), hm.size());
    for (a, b) in hm.values().iter().zip(back.values()) {
        assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-7);
    }

    fs::remove_file(dir.path().join("kp_8.png")).unwrap();
    assert!(matches!(
        load_heatmaps(dir.path()),
        Err(Error::Io { .. } | Error::ImageDecode { .. } | Error::Schema { .. })
    ));
}

#[test]
fn bundles_select_the_same_after_a_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let gt = ground_truth(3, 9);
    let inputs = perturb(&gt, &PerturbConfig::default()).unwrap();
    let bundle = PredictionBundle {
        image_id: "b".into(),
        image_size: gt.scene.image_size,
        inputs: inputs.clone(),
    };
    save_prediction_bundle(dir.path(), &bundle).unwrap();
    let back = load_prediction_bundle(dir.path()).unwrap();
    let cfg = SelectConfig::default();
    let a = select(&inputs, bundle.image_size, &cfg).unwrap();
    let b = select(&back.inputs, back.image_size, &cfg).unwrap();
    assert_eq!(a.chosen, b.chosen);
    assert_eq!(a.chosen_layout().mask, b.chosen_layout().mask);

    fs::remove_dir_all(dir.path().join("B")).unwrap();
    let err = load_prediction_bundle(dir.path()).unwrap_err();
    assert!(err.to_string().contains("absent"), "{err}");
}

#[test]
fn depth_rasters_keep_f32_precision_and_reject_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let gt = ground_truth(4, 0);
    let path = dir.path().join("d.bin");
    save_depth_raster(&path, &gt.depth).unwrap();
    let back = load_depth_raster(&path).unwrap();
    assert_eq!(back.size, gt.depth.size);
    for (a, b) in gt.depth.depth.iter().zip(&back.depth) {
        assert!((a - b).abs() <= 1e-6 * a.abs());
    }

    let mut bytes = fs::read(&path).unwrap();
    bytes.truncate(bytes.len() - 4);
    fs::write(&path, &bytes).unwrap();
    assert!(matches!(load_depth_raster(&path), Err(Error::Schema { .. })));
    fs::write(&path, b"NOTDEPTH00000000").unwrap();
    assert!(matches!(load_depth_raster(&path), Err(Error::Schema { .. })));
}

#[test]
fn records_with_wrong_keypoints_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    // type 6 has ids 1-4; id 5 belongs to no type-6 layout
    fs::write(
        &path,
        r#"{"image_id":"r","width":10,"height":10,"room_type":6,
            "keypoints":[{"id":1,"x":0,"y":1},{"id":2,"x":10,"y":1},{"id":3,"x":0,"y":9},{"id":5,"x":10,"y":9}]}"#,
    )
    .unwrap();
    let err = load_groundtruth(&path).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    fs::write(
        &path,
        r#"{"image_id":"r","width":10,"height":10,"room_type":6,"keypoints":[],"extra":1}"#,
    )
    .unwrap();
    assert!(load_groundtruth(&path).is_err());
}
