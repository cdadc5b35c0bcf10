//! C ABI over the `roomlayout` engine.
//!
//! Every entry point returns an [`RlStatus`]. On failure the message is
//! available from [`rl_last_error`] on the same thread until the next call.
//! Masks and heatmaps cross the boundary as opaque handles that the caller
//! releases with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use roomlayout::depth::{fit_camera_and_box, FitOptions};
use roomlayout::heatmap::Heatmap;
use roomlayout::hypothesis::{score, select, HypothesisInput, SelectConfig};
use roomlayout::layout::{build_layout, rasterize};
use roomlayout::metrics::{keypoint_error, pixel_error};
use roomlayout::pipeline::select_bundle;
use roomlayout::{Error, Group, Keypoint, KeypointSet, SegMask, Size};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DimensionMismatch = 3,
    Layout = 4,
    Computation = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RlGroup {
    A = 0,
    B = 1,
    C = 2,
}

impl From<RlGroup> for Group {
    fn from(g: RlGroup) -> Group {
        match g {
            RlGroup::A => Group::A,
            RlGroup::B => Group::B,
            RlGroup::C => Group::C,
        }
    }
}

impl From<Group> for RlGroup {
    fn from(g: Group) -> RlGroup {
        match g {
            Group::A => RlGroup::A,
            Group::B => RlGroup::B,
            Group::C => RlGroup::C,
        }
    }
}

/// Keypoint in image pixels; `id` is 1-based within the group.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RlKeypoint {
    pub id: u8,
    pub x: f64,
    pub y: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RlScore {
    pub matching_regions: u32,
    pub mean_iou: f64,
    pub total: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RlSelectConfig {
    pub lambda: f64,
    pub iou_threshold: f64,
    pub presence_tau: f64,
    pub min_confidence: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RlSelection {
    pub group: RlGroup,
    pub room_type: u8,
    /// Totals for A, B, C; a hypothesis that failed to build is -infinity.
    pub totals: [f64; 3],
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RlCameraFit {
    pub ratio: f64,
    pub focal: f64,
    pub rotation: [f64; 3],
    pub translation: [f64; 3],
    pub rms_residual: f64,
    pub iterations: u32,
    pub converged: bool,
    pub degenerate: bool,
}

/// Opaque label mask.
pub struct RlMask(SegMask);

/// Opaque keypoint heatmap stack.
pub struct RlHeatmap(Heatmap);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RlStatus {
    match e {
        Error::DimensionMismatch { .. } => RlStatus::DimensionMismatch,
        Error::Layout(_) => RlStatus::Layout,
        Error::Computation(_) => RlStatus::Computation,
        Error::Io { .. } | Error::ImageDecode { .. } | Error::Schema { .. } => RlStatus::Io,
        Error::InvalidInput(_) | Error::RoomTypeOutOfRange(_) => RlStatus::InvalidInput,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RlStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            RlStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            RlStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn c_path(p: *const c_char, what: &'static str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidInput(format!("{what} is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn keypoint_set(
    group: RlGroup,
    points: *const RlKeypoint,
    count: usize,
    width: u32,
    height: u32,
) -> Result<KeypointSet, Failure> {
    let pts = slice(points, count, "points")?
        .iter()
        .map(|k| Keypoint::new(k.id, k.x, k.y))
        .collect();
    Ok(KeypointSet::new(group.into(), Size::new(width, height), pts)?)
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next `rl_` call on the same thread.
#[no_mangle]
pub extern "C" fn rl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a mask from `width * height` row-major label codes (0-5).
///
/// # Safety
/// `codes` must point to `len` readable bytes and `out_mask` to writable storage
/// for one pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_mask_new(
    width: u32,
    height: u32,
    codes: *const u8,
    len: usize,
    out_mask: *mut *mut RlMask,
) -> RlStatus {
    guard(|| {
        let slot = out(out_mask, "out_mask")?;
        let codes = slice(codes, len, "codes")?;
        let mask = SegMask::from_codes(Size::new(width, height), codes)?;
        *slot = Box::into_raw(Box::new(RlMask(mask)));
        Ok(())
    })
}

/// Loads an 8-bit label PNG.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_mask` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_mask_load(path: *const c_char, out_mask: *mut *mut RlMask) -> RlStatus {
    guard(|| {
        let slot = out(out_mask, "out_mask")?;
        let mask = roomlayout::io::load_mask(&c_path(path, "path")?)?;
        *slot = Box::into_raw(Box::new(RlMask(mask)));
        Ok(())
    })
}

/// # Safety
/// `mask` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rl_mask_save(mask: *const RlMask, path: *const c_char) -> RlStatus {
    guard(|| {
        let m = deref(mask, "mask")?;
        roomlayout::io::save_mask(&c_path(path, "path")?, &m.0)?;
        Ok(())
    })
}

/// # Safety
/// `mask` must be a live handle; `width` and `height` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_mask_size(mask: *const RlMask, width: *mut u32, height: *mut u32) -> RlStatus {
    guard(|| {
        let m = deref(mask, "mask")?;
        *out(width, "width")? = m.0.width();
        *out(height, "height")? = m.0.height();
        Ok(())
    })
}

/// Copies the label codes into `buf`, which must hold `width * height` bytes.
///
/// # Safety
/// `mask` must be a live handle and `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rl_mask_codes(mask: *const RlMask, buf: *mut u8, len: usize) -> RlStatus {
    guard(|| {
        let m = deref(mask, "mask")?;
        let codes = m.0.codes();
        if len != codes.len() {
            return Err(Error::InvalidInput(format!("buffer holds {len} bytes, mask has {}", codes.len())).into());
        }
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        ptr::copy_nonoverlapping(codes.as_ptr(), buf, len);
        Ok(())
    })
}

/// # Safety
/// `mask` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_mask_free(mask: *mut RlMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// Wraps channel-major heatmap values (`channels * width * height`, in
/// [0, 1]) for `group`.
///
/// # Safety
/// `values` must point to `len` readable floats; `out_heatmap` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rl_heatmap_new(
    group: RlGroup,
    width: u32,
    height: u32,
    sigma: f64,
    values: *const f32,
    len: usize,
    out_heatmap: *mut *mut RlHeatmap,
) -> RlStatus {
    guard(|| {
        let slot = out(out_heatmap, "out_heatmap")?;
        let values = slice(values, len, "values")?.to_vec();
        let hm = Heatmap::from_values(group.into(), Size::new(width, height), sigma, values)?;
        *slot = Box::into_raw(Box::new(RlHeatmap(hm)));
        Ok(())
    })
}

/// Loads a heatmap directory (`kp_<id>.png` files plus sidecar).
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out_heatmap` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_heatmap_load(dir: *const c_char, out_heatmap: *mut *mut RlHeatmap) -> RlStatus {
    guard(|| {
        let slot = out(out_heatmap, "out_heatmap")?;
        let hm = roomlayout::io::load_heatmaps(&c_path(dir, "dir")?)?;
        *slot = Box::into_raw(Box::new(RlHeatmap(hm)));
        Ok(())
    })
}

/// # Safety
/// `heatmap` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_heatmap_free(heatmap: *mut RlHeatmap) {
    if !heatmap.is_null() {
        drop(Box::from_raw(heatmap));
    }
}

/// Default selection parameters.
#[no_mangle]
pub extern "C" fn rl_select_config_default() -> RlSelectConfig {
    let d = SelectConfig::default();
    RlSelectConfig {
        lambda: d.lambda,
        iou_threshold: d.iou_threshold,
        presence_tau: d.presence_tau,
        min_confidence: d.min_confidence,
    }
}

fn select_config(c: Option<&RlSelectConfig>) -> SelectConfig {
    match c {
        None => SelectConfig::default(),
        Some(c) => SelectConfig {
            lambda: c.lambda,
            iou_threshold: c.iou_threshold,
            presence_tau: c.presence_tau,
            min_confidence: c.min_confidence,
            ..SelectConfig::default()
        },
    }
}

/// Scores a layout mask against a segmentation.
///
/// # Safety
/// Both handles must be live; `out_score` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_score(
    layout_mask: *const RlMask,
    segmentation: *const RlMask,
    lambda: f64,
    iou_threshold: f64,
    out_score: *mut RlScore,
) -> RlStatus {
    guard(|| {
        let slot = out(out_score, "out_score")?;
        let s = score(
            &deref(layout_mask, "layout_mask")?.0,
            &deref(segmentation, "segmentation")?.0,
            lambda,
            iou_threshold,
        )?;
        *slot = RlScore {
            matching_regions: s.matching_regions as u32,
            mean_iou: s.mean_iou,
            total: s.total,
        };
        Ok(())
    })
}

/// Rasterizes the layout of `group` built from image-frame keypoints.
///
/// # Safety
/// `points` must point to `count` keypoints; `out_mask` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_rasterize(
    group: RlGroup,
    floor_present: bool,
    ceiling_present: bool,
    points: *const RlKeypoint,
    count: usize,
    width: u32,
    height: u32,
    out_mask: *mut *mut RlMask,
) -> RlStatus {
    guard(|| {
        let slot = out(out_mask, "out_mask")?;
        let size = Size::new(width, height);
        let kps = keypoint_set(group, points, count, width, height)?;
        let layout = build_layout(group.into(), &kps, floor_present, ceiling_present, size)?;
        *slot = Box::into_raw(Box::new(RlMask(rasterize(&layout, size))));
        Ok(())
    })
}

/// Runs the three hypotheses and picks one. `segmentations` and `heatmaps`
/// hold three handles each, in A, B, C order. `config` may be null for the
/// defaults; `out_mask` may be null when the chosen mask is not needed.
///
/// # Safety
/// The arrays must hold three live handles each; `out_selection` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rl_select(
    segmentations: *const *const RlMask,
    heatmaps: *const *const RlHeatmap,
    width: u32,
    height: u32,
    config: *const RlSelectConfig,
    out_selection: *mut RlSelection,
    out_mask: *mut *mut RlMask,
) -> RlStatus {
    guard(|| {
        let slot = out(out_selection, "out_selection")?;
        let segs = slice(segmentations, 3, "segmentations")?;
        let hms = slice(heatmaps, 3, "heatmaps")?;
        let mut inputs = Vec::with_capacity(3);
        for (i, group) in Group::ALL.into_iter().enumerate() {
            inputs.push(HypothesisInput {
                group,
                segmentation: deref(segs[i], "segmentation")?.0.clone(),
                heatmaps: deref(hms[i], "heatmap")?.0.clone(),
            });
        }
        let r = select(&inputs, Size::new(width, height), &select_config(config.as_ref()))?;
        let chosen = r.chosen_layout();
        *slot = RlSelection {
            group: r.chosen.into(),
            room_type: chosen.layout.room_type().map_or(u8::MAX, |t| t.id()),
            totals: [r.outcomes[0].total(), r.outcomes[1].total(), r.outcomes[2].total()],
        };
        if !out_mask.is_null() {
            *out_mask = Box::into_raw(Box::new(RlMask(chosen.mask.clone())));
        }
        Ok(())
    })
}

/// Selects from a prediction bundle directory and writes the report files
/// into `out_dir`.
///
/// # Safety
/// Both paths must be NUL-terminated strings; `config` may be null;
/// `out_selection` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_select_bundle(
    bundle_dir: *const c_char,
    out_dir: *const c_char,
    config: *const RlSelectConfig,
    out_selection: *mut RlSelection,
) -> RlStatus {
    guard(|| {
        let slot = out(out_selection, "out_selection")?;
        let report = select_bundle(
            &c_path(bundle_dir, "bundle_dir")?,
            &c_path(out_dir, "out_dir")?,
            &select_config(config.as_ref()),
        )?;
        let total = |g: Group| {
            report
                .groups
                .iter()
                .find(|r| r.group == g)
                .and_then(|r| r.total)
                .unwrap_or(f64::NEG_INFINITY)
        };
        *slot = RlSelection {
            group: report.chosen.into(),
            room_type: report.room_type,
            totals: [total(Group::A), total(Group::B), total(Group::C)],
        };
        Ok(())
    })
}

/// Pixel error in percent.
///
/// # Safety
/// Both handles must be live; `out_pct` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_pixel_error(pred: *const RlMask, gt: *const RlMask, out_pct: *mut f64) -> RlStatus {
    guard(|| {
        let slot = out(out_pct, "out_pct")?;
        *slot = pixel_error(&deref(pred, "pred")?.0, &deref(gt, "gt")?.0)?;
        Ok(())
    })
}

/// Keypoint error in percent of the image diagonal.
///
/// # Safety
/// `pred` and `gt` must point to `pred_count` and `gt_count` keypoints;
/// `out_pct` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_keypoint_error(
    pred_group: RlGroup,
    pred: *const RlKeypoint,
    pred_count: usize,
    gt_group: RlGroup,
    gt: *const RlKeypoint,
    gt_count: usize,
    width: u32,
    height: u32,
    out_pct: *mut f64,
) -> RlStatus {
    guard(|| {
        let slot = out(out_pct, "out_pct")?;
        let p = keypoint_set(pred_group, pred, pred_count, width, height)?;
        let g = keypoint_set(gt_group, gt, gt_count, width, height)?;
        *slot = keypoint_error(&p, &g, Size::new(width, height))?;
        Ok(())
    })
}

/// Fits a unit-width box and pinhole camera to the eight keypoints of a
/// type-0 layout.
///
/// # Safety
/// `points` must point to `count` keypoints; `out_fit` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_fit_camera(
    points: *const RlKeypoint,
    count: usize,
    width: u32,
    height: u32,
    out_fit: *mut RlCameraFit,
) -> RlStatus {
    guard(|| {
        let slot = out(out_fit, "out_fit")?;
        let kps = keypoint_set(RlGroup::A, points, count, width, height)?;
        let fit = fit_camera_and_box(&kps, Size::new(width, height), &FitOptions::default())?;
        *slot = RlCameraFit {
            ratio: fit.ratio,
            focal: fit.focal,
            rotation: fit.pose.rotation,
            translation: fit.pose.translation,
            rms_residual: fit.rms_residual,
            iterations: fit.iterations as u32,
            converged: fit.converged,
            degenerate: fit.degenerate,
        };
        Ok(())
    })
}
