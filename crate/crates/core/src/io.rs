//! On-disk formats.
//!
//! * masks: 8-bit grayscale PNG holding the label codes 0-5;
//! * heatmaps: a directory with one 16-bit grayscale PNG per channel
//!   (`kp_<id>.png`, value `round(v * 65535)`) and a `heatmaps.json` sidecar;
//! * layout and ground-truth records: JSON (`GroundTruthRecord`);
//! * prediction bundles: `bundle.json` plus one `A`, `B`, `C` directory, each
//!   with `segmentation.png` and `heatmaps/`;
//! * selection reports: `selection.json`, `layout_mask.png` and a
//!   `prediction.json` record for evaluation;
//! * depth: `RLDEPTH1` magic, width and height as u32 LE, then row-major f32
//!   LE values, plus a normalized 16-bit PNG.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb, RgbImage};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::depth::DepthMap;
use crate::error::{Error, Result};
use crate::heatmap::Heatmap;
use crate::hypothesis::{HypothesisInput, SelectConfig, SelectionResult};
use crate::keypoint::{Keypoint, KeypointSet};
use crate::layout::Edge;
use crate::mask::SegMask;
use crate::model::{Group, Label, RoomType, Size};

pub const HEATMAP_SIDECAR: &str = "heatmaps.json";
pub const BUNDLE_FILE: &str = "bundle.json";
pub const SEGMENTATION_FILE: &str = "segmentation.png";
pub const HEATMAP_DIR: &str = "heatmaps";
pub const SELECTION_FILE: &str = "selection.json";
pub const LAYOUT_MASK_FILE: &str = "layout_mask.png";
pub const PREDICTION_FILE: &str = "prediction.json";
pub const DEPTH_MAGIC: &[u8; 8] = b"RLDEPTH1";

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::schema(path, e.to_string()))
}

/// Pretty JSON with a trailing newline; field order follows the types, so
/// output bytes depend only on the value.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::invalid(e.to_string()))?;
    bytes.push(b'\n');
    write(path, &bytes)
}

fn decode_png(path: &Path) -> Result<DynamicImage> {
    let bytes = read(path)?;
    image::load_from_memory_with_format(&bytes, ImageFormat::Png).map_err(|e| Error::ImageDecode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn encode_png(img: DynamicImage, path: &Path) -> Result<()> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)
        .map_err(|e| Error::ImageDecode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    write(path, buf.get_ref())
}

pub fn save_mask(path: &Path, mask: &SegMask) -> Result<()> {
    let img = ImageBuffer::<Luma<u8>, _>::from_raw(mask.width(), mask.height(), mask.codes())
        .expect("buffer length matches the mask size");
    encode_png(DynamicImage::ImageLuma8(img), path)
}

pub fn load_mask(path: &Path) -> Result<SegMask> {
    let img = match decode_png(path)? {
        DynamicImage::ImageLuma8(img) => img,
        other => {
            return Err(Error::schema(
                path,
                format!("mask must be 8-bit grayscale, found {:?}", other.color()),
            ))
        }
    };
    let size = Size::new(img.width(), img.height());
    SegMask::from_codes(size, img.as_raw()).map_err(|e| Error::schema(path, e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapSidecar {
    pub group: Group,
    pub sigma: f64,
    pub width: u32,
    pub height: u32,
    pub channels: Vec<u8>,
}

/// Values are quantized to 16 bits; a saved container reloads to exactly the
/// quantized values.
pub fn save_heatmaps(dir: &Path, heatmap: &Heatmap) -> Result<()> {
    let size = heatmap.size();
    let ids = heatmap.group().prototype_ids();
    for &id in &ids {
        let data: Vec<u16> = heatmap
            .channel(id)
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) as f64 * 65535.0).round() as u16)
            .collect();
        let img = ImageBuffer::<Luma<u16>, _>::from_raw(size.width, size.height, data)
            .expect("buffer length matches the heatmap size");
        encode_png(DynamicImage::ImageLuma16(img), &dir.join(format!("kp_{id}.png")))?;
    }
    write_json(
        &dir.join(HEATMAP_SIDECAR),
        &HeatmapSidecar {
            group: heatmap.group(),
            sigma: heatmap.sigma(),
            width: size.width,
            height: size.height,
            channels: ids,
        },
    )
}

pub fn load_heatmaps(dir: &Path) -> Result<Heatmap> {
    let sidecar_path = dir.join(HEATMAP_SIDECAR);
    let meta: HeatmapSidecar = read_json(&sidecar_path)?;
    let group = meta.group;
    let expected = group.prototype_ids();
    if meta.channels != expected {
        return Err(Error::schema(
            &sidecar_path,
            format!(
                "group {group} heatmaps list {} channels {:?}, expected {} channels {:?}",
                meta.channels.len(),
                meta.channels,
                expected.len(),
                expected
            ),
        ));
    }
    let size = Size::new(meta.width, meta.height);
    let mut values = Vec::with_capacity(size.area() * expected.len());
    for id in expected {
        let path = dir.join(format!("kp_{id}.png"));
        let img = match decode_png(&path)? {
            DynamicImage::ImageLuma16(img) => img,
            other => {
                return Err(Error::schema(
                    &path,
                    format!("heatmap channel must be 16-bit grayscale, found {:?}", other.color()),
                ))
            }
        };
        if img.width() != size.width || img.height() != size.height {
            return Err(Error::schema(
                &path,
                format!("channel is {}x{}, sidecar says {size}", img.width(), img.height()),
            ));
        }
        values.extend(img.as_raw().iter().map(|&v| (v as f64 / 65535.0) as f32));
    }
    let extra = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .filter(|e| {
            let name = e.file_name();
            let name = name.to_string_lossy();
            name.starts_with("kp_") && name.ends_with(".png")
        })
        .count();
    if extra != group.prototype_keypoint_count() {
        return Err(Error::schema(
            dir,
            format!(
                "group {group} heatmaps have {extra} channel files, expected {}",
                group.prototype_keypoint_count()
            ),
        ));
    }
    Heatmap::from_values(group, size, meta.sigma, values).map_err(|e| Error::schema(dir, e.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeypointRecord {
    pub id: u8,
    pub x: f64,
    pub y: f64,
}

/// A layout in original image coordinates. `mask` is a path relative to the
/// record file; it is required for ground truth and optional when the
/// record only describes a layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthRecord {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub room_type: u8,
    pub keypoints: Vec<KeypointRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
}

impl GroundTruthRecord {
    pub fn size(&self) -> Size {
        Size::new(self.width, self.height)
    }

    pub fn from_keypoints(image_id: &str, room_type: RoomType, kps: &KeypointSet, mask: Option<String>) -> Self {
        GroundTruthRecord {
            image_id: image_id.to_string(),
            width: kps.frame().width,
            height: kps.frame().height,
            room_type: room_type.id(),
            keypoints: kps
                .points()
                .iter()
                .map(|k| KeypointRecord {
                    id: k.id,
                    x: k.x,
                    y: k.y,
                })
                .collect(),
            mask,
        }
    }

    /// Checks the record against the room-type tables.
    pub fn validate(&self, path: &Path) -> Result<(RoomType, KeypointSet)> {
        let room_type = RoomType::new(self.room_type).map_err(|e| Error::schema(path, e.to_string()))?;
        if self.width == 0 || self.height == 0 {
            return Err(Error::schema(
                path,
                format!("image size {}x{} is empty", self.width, self.height),
            ));
        }
        let legal = room_type.keypoint_ids();
        for k in &self.keypoints {
            if !legal.contains(&k.id) {
                return Err(Error::schema(
                    path,
                    format!("keypoint id {} is not used by room type {}", k.id, room_type.id()),
                ));
            }
        }
        for id in &legal {
            match self.keypoints.iter().filter(|k| k.id == *id).count() {
                0 => {
                    return Err(Error::schema(
                        path,
                        format!("room type {} needs keypoint id {id}", room_type.id()),
                    ))
                }
                1 => {}
                _ => return Err(Error::schema(path, format!("keypoint id {id} appears more than once"))),
            }
        }
        let kps = KeypointSet::new(
            room_type.group(),
            self.size(),
            self.keypoints.iter().map(|k| Keypoint::new(k.id, k.x, k.y)).collect(),
        )
        .map_err(|e| Error::schema(path, e.to_string()))?;
        Ok((room_type, kps))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthData {
    pub record: GroundTruthRecord,
    pub room_type: RoomType,
    pub keypoints: KeypointSet,
    pub mask: SegMask,
}

pub fn load_layout_record(path: &Path) -> Result<(GroundTruthRecord, RoomType, KeypointSet)> {
    let record: GroundTruthRecord = read_json(path)?;
    let (room_type, kps) = record.validate(path)?;
    Ok((record, room_type, kps))
}

pub fn load_groundtruth(path: &Path) -> Result<GroundTruthData> {
    let (record, room_type, keypoints) = load_layout_record(path)?;
    let rel = record
        .mask
        .as_ref()
        .ok_or_else(|| Error::schema(path, "missing field `mask`"))?;
    let mask_path = path.parent().unwrap_or(Path::new(".")).join(rel);
    let mask = load_mask(&mask_path)?;
    if mask.size() != record.size() {
        return Err(Error::schema(
            &mask_path,
            format!("mask is {}, record says {}", mask.size(), record.size()),
        ));
    }
    Ok(GroundTruthData {
        record,
        room_type,
        keypoints,
        mask,
    })
}

/// Writes `<dir>/<image_id>.json` and `<dir>/<image_id>_mask.png`.
pub fn save_groundtruth(
    dir: &Path,
    image_id: &str,
    room_type: RoomType,
    kps: &KeypointSet,
    mask: &SegMask,
) -> Result<PathBuf> {
    let mask_name = format!("{image_id}_mask.png");
    save_mask(&dir.join(&mask_name), mask)?;
    let path = dir.join(format!("{image_id}.json"));
    write_json(
        &path,
        &GroundTruthRecord::from_keypoints(image_id, room_type, kps, Some(mask_name)),
    )?;
    Ok(path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleMeta {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionBundle {
    pub image_id: String,
    pub image_size: Size,
    /// Ordered A, B, C.
    pub inputs: Vec<HypothesisInput>,
}

pub fn save_prediction_bundle(dir: &Path, bundle: &PredictionBundle) -> Result<()> {
    write_json(
        &dir.join(BUNDLE_FILE),
        &BundleMeta {
            image_id: bundle.image_id.clone(),
            width: bundle.image_size.width,
            height: bundle.image_size.height,
        },
    )?;
    for input in &bundle.inputs {
        let gdir = dir.join(input.group.tag());
        save_mask(&gdir.join(SEGMENTATION_FILE), &input.segmentation)?;
        save_heatmaps(&gdir.join(HEATMAP_DIR), &input.heatmaps)?;
    }
    Ok(())
}

pub fn load_prediction_bundle(dir: &Path) -> Result<PredictionBundle> {
    let meta_path = dir.join(BUNDLE_FILE);
    let meta: BundleMeta = read_json(&meta_path)?;
    let image_size = Size::new(meta.width, meta.height);
    if image_size.is_empty() {
        return Err(Error::schema(&meta_path, format!("image size {image_size} is empty")));
    }
    let mut inputs = Vec::with_capacity(3);
    let mut resolution: Option<Size> = None;
    for group in Group::ALL {
        let gdir = dir.join(group.tag());
        if !gdir.is_dir() {
            return Err(Error::invalid(format!("hypothesis {group} absent")));
        }
        let seg_path = gdir.join(SEGMENTATION_FILE);
        let segmentation = load_mask(&seg_path)?;
        if segmentation.size() != image_size {
            return Err(Error::schema(
                &seg_path,
                format!("segmentation is {}, bundle says {image_size}", segmentation.size()),
            ));
        }
        let hdir = gdir.join(HEATMAP_DIR);
        let heatmaps = load_heatmaps(&hdir)?;
        if heatmaps.group() != group {
            return Err(Error::schema(
                &hdir,
                format!("directory {} holds group {} heatmaps", group.tag(), heatmaps.group()),
            ));
        }
        match resolution {
            Some(r) if r != heatmaps.size() => {
                return Err(Error::schema(
                    &hdir,
                    format!("heatmaps are {}, other groups use {r}", heatmaps.size()),
                ))
            }
            _ => resolution = Some(heatmaps.size()),
        }
        inputs.push(HypothesisInput {
            group,
            segmentation,
            heatmaps,
        });
    }
    Ok(PredictionBundle {
        image_id: meta.image_id,
        image_size,
        inputs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub group: Group,
    pub floor_present: bool,
    pub ceiling_present: bool,
    pub decoded_keypoints: Vec<Keypoint>,
    /// `None` when the layout could not be built (total is minus infinity).
    pub matching_regions: Option<usize>,
    pub mean_iou: Option<f64>,
    pub lambda: f64,
    pub total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub chosen: Group,
    pub room_type: u8,
    pub keypoints: Vec<Keypoint>,
    pub lambda: f64,
    pub iou_threshold: f64,
    pub presence_tau: f64,
    pub groups: Vec<GroupReport>,
}

impl SelectionReport {
    pub fn from_result(image_id: &str, result: &SelectionResult, config: &SelectConfig) -> Self {
        let chosen = result.chosen_layout();
        let groups = result
            .outcomes
            .iter()
            .map(|o| {
                let (n, m, t, err) = match &o.result {
                    Ok(s) => (
                        Some(s.score.matching_regions),
                        Some(s.score.mean_iou),
                        Some(s.score.total),
                        None,
                    ),
                    Err(e) => (None, None, None, Some(e.clone())),
                };
                GroupReport {
                    group: o.group,
                    floor_present: o.floor_present,
                    ceiling_present: o.ceiling_present,
                    decoded_keypoints: o.keypoints.points().to_vec(),
                    matching_regions: n,
                    mean_iou: m,
                    lambda: config.lambda,
                    total: t,
                    error: err,
                }
            })
            .collect();
        SelectionReport {
            image_id: image_id.to_string(),
            width: result.image_size.width,
            height: result.image_size.height,
            chosen: result.chosen,
            room_type: chosen
                .layout
                .room_type()
                .expect("a built layout always has a room type")
                .id(),
            keypoints: chosen.layout.keypoints().points().to_vec(),
            lambda: config.lambda,
            iou_threshold: config.iou_threshold,
            presence_tau: config.presence_tau,
            groups,
        }
    }

    pub fn prediction_record(&self) -> GroundTruthRecord {
        GroundTruthRecord {
            image_id: self.image_id.clone(),
            width: self.width,
            height: self.height,
            room_type: self.room_type,
            keypoints: self
                .keypoints
                .iter()
                .map(|k| KeypointRecord {
                    id: k.id,
                    x: k.x,
                    y: k.y,
                })
                .collect(),
            mask: Some(LAYOUT_MASK_FILE.to_string()),
        }
    }
}

pub fn save_selection(dir: &Path, report: &SelectionReport, layout_mask: &SegMask) -> Result<()> {
    write_json(&dir.join(SELECTION_FILE), report)?;
    save_mask(&dir.join(LAYOUT_MASK_FILE), layout_mask)?;
    write_json(&dir.join(PREDICTION_FILE), &report.prediction_record())
}

pub fn load_selection(dir: &Path) -> Result<(SelectionReport, SegMask)> {
    let report: SelectionReport = read_json(&dir.join(SELECTION_FILE))?;
    let mask = load_mask(&dir.join(LAYOUT_MASK_FILE))?;
    Ok((report, mask))
}

pub fn save_depth_raster(path: &Path, depth: &DepthMap) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + 4 * depth.depth.len());
    bytes.extend_from_slice(DEPTH_MAGIC);
    bytes.extend_from_slice(&depth.size.width.to_le_bytes());
    bytes.extend_from_slice(&depth.size.height.to_le_bytes());
    for d in &depth.depth {
        bytes.extend_from_slice(&(*d as f32).to_le_bytes());
    }
    write(path, &bytes)
}

/// Reads a raster back; `filled_pixels` is not stored and comes back as 0.
pub fn load_depth_raster(path: &Path) -> Result<DepthMap> {
    let bytes = read(path)?;
    if bytes.len() < 16 || &bytes[..8] != DEPTH_MAGIC {
        return Err(Error::schema(path, "not a depth raster (bad magic)"));
    }
    let w = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    let h = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes"));
    let size = Size::new(w, h);
    if bytes.len() != 16 + 4 * size.area() {
        return Err(Error::schema(
            path,
            format!("{} data bytes for a {size} raster", bytes.len() - 16),
        ));
    }
    let depth: Vec<f64> = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    let (min, max) = depth.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
        (lo.min(d), hi.max(d))
    });
    Ok(DepthMap {
        size,
        depth,
        min,
        max,
        filled_pixels: 0,
    })
}

pub fn save_depth_png(path: &Path, depth: &DepthMap) -> Result<()> {
    let data: Vec<u16> = depth
        .normalized()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
        .collect();
    let img = ImageBuffer::<Luma<u16>, _>::from_raw(depth.size.width, depth.size.height, data)
        .expect("buffer length matches the depth size");
    encode_png(DynamicImage::ImageLuma16(img), path)
}

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    Ok(decode_png(path)?.to_rgb8())
}

pub fn save_rgb(path: &Path, img: &RgbImage) -> Result<()> {
    encode_png(DynamicImage::ImageRgb8(img.clone()), path)
}

fn edge_color(regions: (Label, Label)) -> Rgb<u8> {
    match regions {
        (Label::Ceiling, _) | (_, Label::Ceiling) => Rgb([255, 64, 64]),
        (Label::Floor, _) | (_, Label::Floor) => Rgb([64, 160, 255]),
        _ => Rgb([255, 220, 0]),
    }
}

/// Draws layout edges (in image coordinates) onto `img`.
pub fn draw_edges(img: &mut RgbImage, edges: &[Edge]) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    for e in edges {
        let color = edge_color(e.regions);
        let (dx, dy) = (e.b[0] - e.a[0], e.b[1] - e.a[1]);
        let steps = dx.abs().max(dy.abs()).ceil().max(1.0) as usize;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let (x, y) = ((e.a[0] + t * dx).round() as i64, (e.a[1] + t * dy).round() as i64);
            if (0..w).contains(&x) && (0..h).contains(&y) {
                img.put_pixel(x as u32, y as u32, color);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heatmap::{encode, DEFAULT_RESOLUTION};
    use tempfile::tempdir;

    fn type1_kps() -> KeypointSet {
        KeypointSet::new(
            Group::A,
            Size::new(64, 48),
            vec![
                Keypoint::new(1, 20.0, 0.0),
                Keypoint::new(2, 44.0, 0.0),
                Keypoint::new(3, 20.0, 30.0),
                Keypoint::new(4, 44.0, 30.0),
                Keypoint::new(7, 0.0, 40.0),
                Keypoint::new(8, 64.0, 40.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn mask_png_round_trips_bit_exactly() {
        let dir = tempdir().unwrap();
        let codes: Vec<u8> = (0..64 * 48).map(|i| (i % 6) as u8).collect();
        let mask = SegMask::from_codes(Size::new(64, 48), &codes).unwrap();
        let p = dir.path().join("m.png");
        save_mask(&p, &mask).unwrap();
        assert_eq!(load_mask(&p).unwrap(), mask);
        let first = fs::read(&p).unwrap();
        save_mask(&p, &mask).unwrap();
        assert_eq!(fs::read(&p).unwrap(), first);
    }

    #[test]
    fn out_of_range_mask_codes_are_schema_errors() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("m.png");
        let img = ImageBuffer::<Luma<u8>, _>::from_raw(2, 2, vec![0u8, 1, 9, 2]).unwrap();
        encode_png(DynamicImage::ImageLuma8(img), &p).unwrap();
        let err = load_mask(&p).unwrap_err();
        assert!(matches!(err, Error::Schema { .. }), "{err}");
    }

    #[test]
    fn truncated_png_is_a_decode_error() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("m.png");
        save_mask(&p, &SegMask::filled(Size::new(16, 16), Label::Floor)).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_mask(&p).unwrap_err(), Error::ImageDecode { .. }));
    }

    #[test]
    fn heatmaps_round_trip_after_quantization() {
        let dir = tempdir().unwrap();
        let hm = encode(&type1_kps(), DEFAULT_RESOLUTION, 2.0).unwrap();
        save_heatmaps(dir.path(), &hm).unwrap();
        let back = load_heatmaps(dir.path()).unwrap();
        assert_eq!(back.group(), Group::A);
        for (a, b) in hm.values().iter().zip(back.values()) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-7);
        }
        let again = dir.path().join("again");
        save_heatmaps(&again, &back).unwrap();
        assert_eq!(load_heatmaps(&again).unwrap(), back);
    }

    #[test]
    fn wrong_channel_count_is_rejected() {
        let dir = tempdir().unwrap();
        let hm = encode(&type1_kps(), DEFAULT_RESOLUTION, 2.0).unwrap();
        save_heatmaps(dir.path(), &hm).unwrap();
        fs::remove_file(dir.path().join("kp_8.png")).unwrap();
        assert!(load_heatmaps(dir.path()).is_err());
        let mut meta: HeatmapSidecar = read_json(&dir.path().join(HEATMAP_SIDECAR)).unwrap();
        meta.channels.pop();
        write_json(&dir.path().join(HEATMAP_SIDECAR), &meta).unwrap();
        let err = load_heatmaps(dir.path()).unwrap_err();
        assert!(err.to_string().contains("7 channels"), "{err}");
    }

    #[test]
    fn groundtruth_round_trips_and_reports_bad_ids() {
        let dir = tempdir().unwrap();
        let rt = RoomType::new(1).unwrap();
        let kps = type1_kps();
        let mask = SegMask::filled(Size::new(64, 48), Label::CenterWall);
        let p = save_groundtruth(dir.path(), "img", rt, &kps, &mask).unwrap();
        let gt = load_groundtruth(&p).unwrap();
        assert_eq!(gt.room_type, rt);
        assert_eq!(gt.keypoints, kps);
        assert_eq!(gt.mask, mask);

        let mut record = gt.record.clone();
        record.keypoints[4].id = 5;
        write_json(&p, &record).unwrap();
        let err = load_groundtruth(&p).unwrap_err().to_string();
        assert!(err.contains("keypoint id 5"), "{err}");

        let mut record = gt.record.clone();
        record.keypoints.pop();
        write_json(&p, &record).unwrap();
        let err = load_groundtruth(&p).unwrap_err().to_string();
        assert!(err.contains("needs keypoint id 8"), "{err}");

        fs::write(&p, br#"{"image_id": "x", "width": 4, "height": 4, "keypoints": []}"#).unwrap();
        let err = load_groundtruth(&p).unwrap_err().to_string();
        assert!(err.contains("room_type"), "{err}");
    }

    #[test]
    fn depth_raster_round_trips() {
        let dir = tempdir().unwrap();
        let depth = DepthMap {
            size: Size::new(3, 2),
            depth: vec![1.0, 1.5, 2.0, 2.5, 3.0, 3.5],
            min: 1.0,
            max: 3.5,
            filled_pixels: 0,
        };
        let p = dir.path().join("d.bin");
        save_depth_raster(&p, &depth).unwrap();
        assert_eq!(load_depth_raster(&p).unwrap(), depth);
        assert_eq!(fs::read(&p).unwrap().len(), 16 + 24);
        let mut bytes = fs::read(&p).unwrap();
        bytes[0] = b'X';
        fs::write(&p, bytes).unwrap();
        assert!(load_depth_raster(&p).is_err());
    }
}
