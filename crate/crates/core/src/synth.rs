//! Synthetic box rooms with analytic ground truth.
//!
//! World frame: x right, y down, z forward. The room spans `x in [0, 1]`,
//! `y in [0, r]`, `z in [-d, 0]`; the center wall is the plane `z = 0` and the
//! camera sits inside the box looking roughly along +z. This is the same
//! parameterization the depth fit recovers.

use nalgebra::{Point3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::camera::{PinholeCamera, Pose};
use crate::depth::{CameraFit, DepthMap};
use crate::error::{Error, Result};
use crate::geom::{polygon_area, Rect, P2, V2};
use crate::heatmap::{encode, DEFAULT_RESOLUTION, DEFAULT_SIGMA};
use crate::hypothesis::HypothesisInput;
use crate::keypoint::{Keypoint, KeypointSet};
use crate::layout::{build_layout, Chain, Layout};
use crate::mask::SegMask;
use crate::model::{wall_labels_of_group, Group, GroupBWalls, Label, RoomType, Size};

/// Planes of the box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Face {
    Ceiling,
    Floor,
    Left,
    Center,
    Right,
    Back,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::Ceiling,
        Face::Floor,
        Face::Left,
        Face::Center,
        Face::Right,
        Face::Back,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

/// Sampling intervals. Angles in degrees, lengths in wall widths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneRanges {
    pub image_size: Size,
    pub ratio: [f64; 2],
    /// Focal length as a multiple of the image width.
    pub focal: [f64; 2],
    pub max_yaw: f64,
    pub max_pitch: f64,
    pub max_roll: f64,
    /// Rejects views whose yaw and pitch are both below this.
    pub min_tilt: f64,
    /// Camera distance to the center wall.
    pub distance: [f64; 2],
    /// Room extent behind the camera.
    pub behind: [f64; 2],
    /// Minimum camera clearance to the side walls, floor and ceiling.
    pub clearance: f64,
    /// Visible faces must cover at least this fraction of the image.
    pub min_region_frac: f64,
    /// Junctions of present regions keep this distance (px) from the border.
    pub junction_margin: f64,
    pub max_attempts: usize,
}

impl Default for SceneRanges {
    fn default() -> Self {
        SceneRanges {
            image_size: Size::new(320, 320),
            ratio: [0.5, 2.0],
            focal: [0.6, 1.5],
            max_yaw: 35.0,
            max_pitch: 20.0,
            max_roll: 5.0,
            min_tilt: 0.0,
            distance: [0.5, 3.0],
            behind: [0.2, 2.0],
            clearance: 0.05,
            min_region_frac: 0.04,
            junction_margin: 2.0,
            max_attempts: 200_000,
        }
    }
}

impl SceneRanges {
    /// Ranges used for depth-fit scenes: far enough that the sampled edge
    /// points lie in front of the camera, and clearly oblique.
    pub fn for_depth() -> Self {
        SceneRanges {
            distance: [1.5, 3.0],
            min_tilt: 8.0,
            ..SceneRanges::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = |name: &str, r: [f64; 2], lo: f64| {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] > lo && r[0] <= r[1]) {
                return Err(Error::invalid(format!(
                    "range {name} = {r:?} is not a valid interval above {lo}"
                )));
            }
            Ok(())
        };
        ordered("ratio", self.ratio, 0.0)?;
        ordered("focal", self.focal, 0.0)?;
        ordered("distance", self.distance, 0.0)?;
        ordered("behind", self.behind, 0.0)?;
        if self.image_size.is_empty() {
            return Err(Error::invalid(format!("image size {} is empty", self.image_size)));
        }
        for (name, v, hi) in [
            ("max_yaw", self.max_yaw, 80.0),
            ("max_pitch", self.max_pitch, 80.0),
            ("max_roll", self.max_roll, 80.0),
        ] {
            if !(0.0..=hi).contains(&v) {
                return Err(Error::invalid(format!("{name} = {v} outside [0, {hi}]")));
            }
        }
        if self.min_tilt > self.max_yaw.max(self.max_pitch) {
            return Err(Error::invalid("min_tilt exceeds both max_yaw and max_pitch"));
        }
        if !(0.0..0.5).contains(&self.clearance) {
            return Err(Error::invalid(format!("clearance {} outside [0, 0.5)", self.clearance)));
        }
        if !(0.0..1.0).contains(&self.min_region_frac) {
            return Err(Error::invalid(format!(
                "min_region_frac {} outside [0, 1)",
                self.min_region_frac
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::invalid("max_attempts must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub seed: u64,
    pub image_size: Size,
    /// Height of the box (center wall height over width).
    pub ratio: f64,
    /// Extent of the box along z.
    pub depth: f64,
    pub focal: f64,
    pub camera_center: [f64; 3],
    /// Radians. Positive yaw turns right, positive pitch looks up.
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl SyntheticScene {
    /// Square room seen head-on from its middle; always a type-0 view.
    pub fn frontoparallel(image_size: Size) -> Self {
        SyntheticScene {
            seed: 0,
            image_size,
            ratio: 1.0,
            depth: 3.0,
            focal: 0.5 * image_size.width as f64,
            camera_center: [0.5, 0.5, -1.5],
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
        }
    }

    /// Orientation of the camera in the world.
    fn world_from_camera(&self) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Vector3::y_axis(), self.yaw)
            * Rotation3::from_axis_angle(&Vector3::x_axis(), -self.pitch)
            * Rotation3::from_axis_angle(&Vector3::z_axis(), self.roll)
    }

    pub fn camera(&self) -> PinholeCamera {
        let rotation = self.world_from_camera().inverse();
        let center = Vector3::from(self.camera_center);
        PinholeCamera {
            focal: self.focal,
            principal: P2::new(self.image_size.width as f64 / 2.0, self.image_size.height as f64 / 2.0),
            rotation,
            translation: -(rotation * center),
        }
    }

    /// The fit a perfect depth estimate would return.
    pub fn true_fit(&self) -> CameraFit {
        let cam = self.camera();
        CameraFit {
            ratio: self.ratio,
            focal: self.focal,
            pose: Pose {
                rotation: cam.axis_angle(),
                translation: [cam.translation.x, cam.translation.y, cam.translation.z],
            },
            principal: [cam.principal.x, cam.principal.y],
            image_size: self.image_size,
            rms_residual: 0.0,
            converged: true,
            iterations: 0,
            degenerate: false,
            condition_number: 0.0,
            cost_history: Vec::new(),
        }
    }

    fn face_polygon(&self, face: Face) -> [Point3<f64>; 4] {
        let (r, d) = (self.ratio, -self.depth);
        let p = Point3::new;
        match face {
            Face::Center => [p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(1.0, r, 0.0), p(0.0, r, 0.0)],
            Face::Back => [p(0.0, 0.0, d), p(1.0, 0.0, d), p(1.0, r, d), p(0.0, r, d)],
            Face::Left => [p(0.0, 0.0, 0.0), p(0.0, r, 0.0), p(0.0, r, d), p(0.0, 0.0, d)],
            Face::Right => [p(1.0, 0.0, 0.0), p(1.0, r, 0.0), p(1.0, r, d), p(1.0, 0.0, d)],
            Face::Ceiling => [p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(1.0, 0.0, d), p(0.0, 0.0, d)],
            Face::Floor => [p(0.0, r, 0.0), p(1.0, r, 0.0), p(1.0, r, d), p(0.0, r, d)],
        }
    }

    /// Visible image area of every face as a fraction of the image, by
    /// clipping the face against the near plane and the image rectangle.
    pub fn face_fractions(&self) -> [f64; 6] {
        let cam = self.camera();
        let rect = Rect::image(self.image_size.width as f64, self.image_size.height as f64);
        let mut out = [0.0; 6];
        for face in Face::ALL {
            let poly: Vec<Point3<f64>> = self.face_polygon(face).iter().map(|p| cam.to_camera(p)).collect();
            let front = clip_near(&poly, 1e-3);
            if front.len() < 3 {
                continue;
            }
            let projected: Vec<P2> = front
                .iter()
                .map(|c| {
                    P2::new(
                        cam.focal * c.x / c.z + cam.principal.x,
                        cam.focal * c.y / c.z + cam.principal.y,
                    )
                })
                .collect();
            let clipped = rect.clip_polygon(&projected);
            if clipped.len() >= 3 {
                out[face.index()] = polygon_area(&clipped).abs() / rect.area();
            }
        }
        out
    }

    /// Face seen through pixel `(i, j)` and the camera-frame depth of the hit.
    pub fn cast(&self, cam: &PinholeCamera, origin: &Point3<f64>, px: &P2) -> (Face, f64) {
        let dir = cam.ray_direction(px);
        let mut best = (Face::Back, f64::INFINITY);
        let mut consider = |face: Face, plane: f64, o: f64, d: f64| {
            if d.abs() > 1e-15 {
                let t = (plane - o) / d;
                if t > 0.0 && t < best.1 {
                    best = (face, t);
                }
            }
        };
        if dir.x > 0.0 {
            consider(Face::Right, 1.0, origin.x, dir.x);
        } else {
            consider(Face::Left, 0.0, origin.x, dir.x);
        }
        if dir.y > 0.0 {
            consider(Face::Floor, self.ratio, origin.y, dir.y);
        } else {
            consider(Face::Ceiling, 0.0, origin.y, dir.y);
        }
        if dir.z > 0.0 {
            consider(Face::Center, 0.0, origin.z, dir.z);
        } else {
            consider(Face::Back, -self.depth, origin.z, dir.z);
        }
        best
    }
}

/// Keeps the part of a planar polygon with camera-frame `z >= near`.
fn clip_near(poly: &[Point3<f64>], near: f64) -> Vec<Point3<f64>> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (fa, fb) = (a.z - near, b.z - near);
        if fa >= 0.0 {
            out.push(a);
        }
        if (fa >= 0.0) != (fb >= 0.0) {
            let t = fa / (fa - fb);
            out.push(a + (b - a) * t);
        }
    }
    out
}

/// Which walls are visible, in left-to-right order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VisibleWalls {
    LeftCenterRight,
    LeftCenter,
    CenterRight,
    Center,
}

impl VisibleWalls {
    pub fn group(self) -> Group {
        match self {
            VisibleWalls::LeftCenterRight => Group::A,
            VisibleWalls::LeftCenter | VisibleWalls::CenterRight => Group::B,
            VisibleWalls::Center => Group::C,
        }
    }
}

/// Analytic layout of a scene: its type, visible walls and keypoints.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneLayout {
    pub room_type: RoomType,
    pub walls: VisibleWalls,
    pub keypoints: KeypointSet,
    pub face_fractions: [f64; 6],
}

struct Projector {
    cam: PinholeCamera,
    rect: Rect,
}

impl Projector {
    fn point(&self, p: [f64; 3]) -> Option<P2> {
        self.cam.project(&Point3::from(p))
    }

    /// Image direction in which the point `p - s z` moves as `s` grows from 0.
    fn receding(&self, p: [f64; 3]) -> V2 {
        let c = self.cam.to_camera(&Point3::from(p));
        let dc = self.cam.rotation * Vector3::new(0.0, 0.0, -1.0);
        V2::new(
            self.cam.focal * (dc.x * c.z - c.x * dc.z) / (c.z * c.z),
            self.cam.focal * (dc.y * c.z - c.y * dc.z) / (c.z * c.z),
        )
    }

    fn exit(&self, from: &P2, dir: &V2) -> std::result::Result<P2, String> {
        if dir.norm() < 1e-12 {
            return Err("edge degenerates to a point".to_string());
        }
        self.rect
            .exit_point(from, dir)
            .ok_or_else(|| "edge does not leave the image".to_string())
    }

    /// Visible ends of the vertical wall/wall edge at `x`, top first.
    fn vertical_edge(&self, x: f64, ratio: f64) -> std::result::Result<(P2, P2), String> {
        let (top, bottom) = (
            self.point([x, 0.0, 0.0]).ok_or("wall corner behind the camera")?,
            self.point([x, ratio, 0.0]).ok_or("wall corner behind the camera")?,
        );
        let (a, b) = self
            .rect
            .clip_segment(&top, &bottom)
            .ok_or_else(|| "wall/wall edge outside the image".to_string())?;
        Ok((a, b))
    }
}

/// Classifies the view and derives its canonical keypoints.
pub fn analyze_scene(
    scene: &SyntheticScene,
    ranges_min_frac: f64,
    margin: f64,
) -> std::result::Result<SceneLayout, String> {
    let fr = scene.face_fractions();
    let visible = |f: Face| fr[f.index()] > 1e-9;
    if visible(Face::Back) {
        return Err("back wall visible".to_string());
    }
    if let Some(f) = Face::ALL
        .iter()
        .find(|&&f| visible(f) && fr[f.index()] < ranges_min_frac)
    {
        return Err(format!("{f:?} covers only {:.4} of the image", fr[f.index()]));
    }
    let walls = match (visible(Face::Left), visible(Face::Center), visible(Face::Right)) {
        (true, true, true) => VisibleWalls::LeftCenterRight,
        (true, true, false) => VisibleWalls::LeftCenter,
        (false, true, true) => VisibleWalls::CenterRight,
        (false, true, false) => VisibleWalls::Center,
        other => return Err(format!("wall visibility {other:?} is not a room type")),
    };
    let ceiling = visible(Face::Ceiling);
    let floor = visible(Face::Floor);
    let group = walls.group();
    let room_type = RoomType::from_parts(group, ceiling, floor).ok_or("neither floor nor ceiling visible")?;

    let size = scene.image_size;
    let proj = Projector {
        cam: scene.camera(),
        rect: Rect::image(size.width as f64, size.height as f64),
    };
    let inner = Rect {
        x0: margin,
        y0: margin,
        x1: size.width as f64 - margin,
        y1: size.height as f64 - margin,
    };
    let r = scene.ratio;
    let junction = |x: f64, y: f64| -> std::result::Result<P2, String> {
        let p = proj.point([x, y, 0.0]).ok_or("junction behind the camera")?;
        if !inner.contains(&p) {
            return Err(format!("junction ({x}, {y}) at {p} too close to the border"));
        }
        Ok(p)
    };
    let receding_exit = |x: f64, y: f64, from: &P2| proj.exit(from, &proj.receding([x, y, 0.0]));

    let mut pts: Vec<(u8, P2)> = Vec::new();
    match walls {
        VisibleWalls::LeftCenterRight => {
            for (k, x) in [0.0, 1.0].into_iter().enumerate() {
                let k = k as u8;
                let (top, bottom) = proj.vertical_edge(x, r)?;
                let upper = if ceiling { junction(x, 0.0)? } else { top };
                let lower = if floor { junction(x, r)? } else { bottom };
                pts.push((1 + k, upper));
                pts.push((3 + k, lower));
                if ceiling {
                    pts.push((5 + k, receding_exit(x, 0.0, &upper)?));
                }
                if floor {
                    pts.push((7 + k, receding_exit(x, r, &lower)?));
                }
            }
        }
        VisibleWalls::LeftCenter | VisibleWalls::CenterRight => {
            let (x, other) = if walls == VisibleWalls::LeftCenter {
                (0.0, 1.0)
            } else {
                (1.0, 0.0)
            };
            let (top, bottom) = proj.vertical_edge(x, r)?;
            let upper = if ceiling { junction(x, 0.0)? } else { top };
            let lower = if floor { junction(x, r)? } else { bottom };
            pts.push((1, upper));
            pts.push((2, lower));
            for (y, present, first_id, j) in [(0.0, ceiling, 3u8, upper), (r, floor, 5u8, lower)] {
                if !present {
                    continue;
                }
                let along_side = receding_exit(x, y, &j)?;
                let toward = proj.point([other, y, 0.0]).ok_or("wall corner behind the camera")?;
                let along_center = proj.exit(&j, &(toward - j))?;
                let (left, right) = if walls == VisibleWalls::LeftCenter {
                    (along_side, along_center)
                } else {
                    (along_center, along_side)
                };
                pts.push((first_id, left));
                pts.push((first_id + 1, right));
            }
        }
        VisibleWalls::Center => {
            for (y, present, first_id) in [(0.0, ceiling, 1u8), (r, floor, 3u8)] {
                if !present {
                    continue;
                }
                let a = proj.point([0.0, y, 0.0]).ok_or("wall corner behind the camera")?;
                let b = proj.point([1.0, y, 0.0]).ok_or("wall corner behind the camera")?;
                let (p, q) = proj
                    .rect
                    .line_crossings(&a, &(b - a))
                    .ok_or("center wall edge misses the image")?;
                let (left, right) = if p.x <= q.x { (p, q) } else { (q, p) };
                pts.push((first_id, left));
                pts.push((first_id + 1, right));
            }
        }
    }
    let keypoints = KeypointSet::new(
        group,
        size,
        pts.into_iter().map(|(id, p)| Keypoint::new(id, p.x, p.y)).collect(),
    )
    .map_err(|e| e.to_string())?;
    build_layout(group, &keypoints, floor, ceiling, size).map_err(|e| e.to_string())?;
    Ok(SceneLayout {
        room_type,
        walls,
        keypoints,
        face_fractions: fr,
    })
}

fn draw_scene(rng: &mut ChaCha8Rng, seed: u64, ranges: &SceneRanges) -> SyntheticScene {
    let uniform = |rng: &mut ChaCha8Rng, r: [f64; 2]| if r[0] < r[1] { rng.gen_range(r[0]..=r[1]) } else { r[0] };
    let sym = |rng: &mut ChaCha8Rng, m: f64| if m > 0.0 { rng.gen_range(-m..=m) } else { 0.0 };
    let ratio = uniform(rng, ranges.ratio);
    let focal = uniform(rng, ranges.focal) * ranges.image_size.width as f64;
    let distance = uniform(rng, ranges.distance);
    let behind = uniform(rng, ranges.behind);
    let c = ranges.clearance;
    let cx = rng.gen_range(c..=1.0 - c);
    let cy = rng.gen_range(c * ratio..=(1.0 - c) * ratio);
    let yaw = sym(rng, ranges.max_yaw).to_radians();
    let pitch = sym(rng, ranges.max_pitch).to_radians();
    let roll = sym(rng, ranges.max_roll).to_radians();
    SyntheticScene {
        seed,
        image_size: ranges.image_size,
        ratio,
        depth: distance + behind,
        focal,
        camera_center: [cx, cy, -distance],
        yaw,
        pitch,
        roll,
    }
}

/// Deterministic scene of any valid type.
pub fn sample_scene(seed: u64, ranges: &SceneRanges) -> Result<SyntheticScene> {
    sample_scene_of_type(seed, ranges, None)
}

/// Rejection-samples until the view is a valid layout, of type `target`
/// when given.
pub fn sample_scene_of_type(seed: u64, ranges: &SceneRanges, target: Option<RoomType>) -> Result<SyntheticScene> {
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..ranges.max_attempts {
        let scene = draw_scene(&mut rng, seed, ranges);
        if ranges.min_tilt > 0.0 && scene.yaw.abs().max(scene.pitch.abs()) < ranges.min_tilt.to_radians() {
            continue;
        }
        match analyze_scene(&scene, ranges.min_region_frac, ranges.junction_margin) {
            Ok(l) if target.is_none_or(|t| t == l.room_type) => return Ok(scene),
            _ => continue,
        }
    }
    Err(Error::Computation(format!(
        "no valid scene{} within {} attempts (seed {seed})",
        target.map(|t| format!(" of type {}", t.id())).unwrap_or_default(),
        ranges.max_attempts
    )))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub scene: SyntheticScene,
    pub room_type: RoomType,
    pub walls: VisibleWalls,
    pub keypoints: KeypointSet,
    pub mask: SegMask,
    pub depth: DepthMap,
    /// Box face seen by each pixel, row-major.
    pub faces: Vec<Face>,
}

impl GroundTruth {
    pub fn group(&self) -> Group {
        self.room_type.group()
    }

    pub fn layout(&self) -> Result<Layout> {
        build_layout(
            self.group(),
            &self.keypoints,
            self.room_type.floor_present(),
            self.room_type.ceiling_present(),
            self.scene.image_size,
        )
    }
}

/// Labels a box face in `group`'s alphabet, given which walls are really
/// visible. Walls a group cannot represent stay unlabelled; a two-wall view
/// of three walls keeps the larger side wall (`keep_left`).
pub fn face_label(face: Face, group: Group, walls: VisibleWalls, keep_left: bool, b_walls: GroupBWalls) -> Label {
    match face {
        Face::Ceiling => Label::Ceiling,
        Face::Floor => Label::Floor,
        Face::Back => Label::Void,
        wall => match group {
            Group::A => match wall {
                Face::Left => Label::LeftWall,
                Face::Right => Label::RightWall,
                _ => Label::CenterWall,
            },
            Group::C if wall == Face::Center => Label::CenterWall,
            Group::C => Label::Void,
            Group::B => {
                let (first, second) = match wall_labels_of_group(Group::B, b_walls) {
                    [a, b] => (*a, *b),
                    _ => unreachable!("group B has two walls"),
                };
                let pair = match walls {
                    VisibleWalls::LeftCenterRight if keep_left => (Some(Face::Left), Face::Center),
                    VisibleWalls::LeftCenterRight | VisibleWalls::CenterRight => (Some(Face::Center), Face::Right),
                    VisibleWalls::LeftCenter => (Some(Face::Left), Face::Center),
                    VisibleWalls::Center => (None, Face::Center),
                };
                if pair.0 == Some(wall) {
                    first
                } else if pair.1 == wall {
                    second
                } else {
                    Label::Void
                }
            }
        },
    }
}

/// Ground truth at the scene's image size.
pub fn scene_to_groundtruth(scene: &SyntheticScene, ranges: &SceneRanges) -> Result<GroundTruth> {
    let layout = analyze_scene(scene, ranges.min_region_frac, ranges.junction_margin)
        .map_err(|e| Error::Computation(format!("degenerate projection: {e}")))?;
    let size = scene.image_size;
    let cam = scene.camera();
    let origin = Point3::from(scene.camera_center);
    let mut faces = Vec::with_capacity(size.area());
    let mut depth = Vec::with_capacity(size.area());
    for j in 0..size.height {
        for i in 0..size.width {
            let (face, t) = scene.cast(&cam, &origin, &P2::new(i as f64, j as f64));
            faces.push(face);
            depth.push(t);
        }
    }
    let group = layout.room_type.group();
    let labels = faces
        .iter()
        .map(|&f| face_label(f, group, layout.walls, true, GroupBWalls::default()))
        .collect();
    let mask = SegMask::from_labels(size, labels)?;
    let (min, max) = depth.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
        (lo.min(d), hi.max(d))
    });
    Ok(GroundTruth {
        scene: scene.clone(),
        room_type: layout.room_type,
        walls: layout.walls,
        keypoints: layout.keypoints,
        mask,
        depth: DepthMap {
            size,
            depth,
            min,
            max,
            filled_pixels: 0,
        },
        faces,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Standard deviation of keypoint jitter in image pixels.
    pub keypoint_sigma: f64,
    /// Probability that a pixel takes another label present in its mask.
    pub flip_prob: f64,
    /// Pixels within this distance of a region boundary take the label of a
    /// random pixel in their neighborhood.
    pub boundary_radius: u32,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            keypoint_sigma: 0.0,
            flip_prob: 0.0,
            boundary_radius: 0,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.keypoint_sigma.is_finite() && self.keypoint_sigma >= 0.0) {
            return Err(Error::invalid(format!(
                "keypoint sigma {} must be >= 0",
                self.keypoint_sigma
            )));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return Err(Error::invalid(format!(
                "flip probability {} outside [0, 1]",
                self.flip_prob
            )));
        }
        Ok(())
    }
}

/// How inputs for all three groups are derived from one ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbConfig {
    pub noise: NoiseConfig,
    /// Image columns (fractions of the width) of the wall/wall edges a
    /// wrong group A hypothesis places.
    pub a_columns: [f64; 2],
    pub b_column: f64,
    pub b_walls: GroupBWalls,
    pub heatmap_resolution: Size,
    pub heatmap_sigma: f64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig {
            noise: NoiseConfig::default(),
            a_columns: [0.3, 0.7],
            b_column: 0.5,
            b_walls: GroupBWalls::default(),
            heatmap_resolution: DEFAULT_RESOLUTION,
            heatmap_sigma: DEFAULT_SIGMA,
        }
    }
}

/// Keypoints a wrong hypothesis would report: vertical edges at fixed image
/// columns, floor and ceiling following the true boundaries.
fn wrong_group_keypoints(group: Group, truth: &Layout, config: &PerturbConfig) -> Result<KeypointSet> {
    let size = truth.size();
    let (w, h) = (size.width as f64, size.height as f64);
    let on = |chain: Option<&Chain>, x: f64, fallback: f64| chain.map_or(fallback, |c| c.y_at(x));
    let ends = |chain: &Chain| {
        let v = chain.vertices();
        (v[0], v[v.len() - 1])
    };
    let mut pts: Vec<Keypoint> = Vec::new();
    let (ceiling, floor) = (truth.ceiling(), truth.floor());
    let columns: Vec<f64> = match group {
        Group::A => config.a_columns.iter().map(|c| c * w).collect(),
        Group::B => vec![config.b_column * w],
        Group::C => Vec::new(),
    };
    let n = columns.len() as u8;
    for (k, &x) in columns.iter().enumerate() {
        let k = k as u8;
        pts.push(Keypoint::new(1 + k, x, on(ceiling, x, 0.0)));
        pts.push(Keypoint::new(1 + n + k, x, on(floor, x, h)));
    }
    let mut next = 1 + 2 * n;
    for chain in [ceiling, floor] {
        if let Some(c) = chain {
            let (a, b) = ends(c);
            pts.push(Keypoint::new(next, a.x, a.y));
            pts.push(Keypoint::new(next + 1, b.x, b.y));
        }
        next += 2;
    }
    // group C numbers its floor line after the ceiling line even when the
    // ceiling is absent, which the loop above already does
    KeypointSet::new(group, size, pts)
}

fn jitter(kps: &KeypointSet, sigma: f64, rng: &mut ChaCha8Rng) -> Result<KeypointSet> {
    if sigma == 0.0 {
        return Ok(kps.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let pts = kps
        .points()
        .iter()
        .map(|k| Keypoint::new(k.id, k.x + normal.sample(rng), k.y + normal.sample(rng)))
        .collect();
    KeypointSet::new(kps.group(), kps.frame(), pts)
}

fn boundary_jitter(mask: &SegMask, radius: u32, rng: &mut ChaCha8Rng) -> SegMask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let rad = radius as i64;
    let src = mask.labels();
    let mut out = mask.clone();
    for y in 0..h {
        for x in 0..w {
            let here = src[(y * w + x) as usize];
            let window = |dy: i64, dx: i64| {
                let (xx, yy) = ((x + dx).clamp(0, w - 1), (y + dy).clamp(0, h - 1));
                src[(yy * w + xx) as usize]
            };
            let near_boundary = (-rad..=rad).any(|dy| (-rad..=rad).any(|dx| window(dy, dx) != here));
            if near_boundary {
                let (dx, dy) = (rng.gen_range(-rad..=rad), rng.gen_range(-rad..=rad));
                out.labels_mut()[(y * w + x) as usize] = window(dy, dx);
            }
        }
    }
    out
}

fn flip_labels(mask: &SegMask, prob: f64, rng: &mut ChaCha8Rng) -> SegMask {
    let present = mask.present_labels();
    let mut out = mask.clone();
    if prob == 0.0 || present.len() < 2 {
        return out;
    }
    for l in out.labels_mut() {
        if rng.gen_bool(prob) {
            let others: Vec<Label> = present.iter().copied().filter(|p| p != l).collect();
            if !others.is_empty() {
                *l = others[rng.gen_range(0..others.len())];
            }
        }
    }
    out
}

/// Network-like inputs for all three groups, ordered A, B, C. The true
/// group sees the ground truth; the others see the scene through their own
/// wall alphabet with systematically misplaced wall edges.
pub fn perturb(gt: &GroundTruth, config: &PerturbConfig) -> Result<Vec<HypothesisInput>> {
    config.noise.validate()?;
    let truth_group = gt.group();
    let truth_layout = gt.layout()?;
    let counts = {
        let mut c = [0usize; 6];
        for f in &gt.faces {
            c[f.index()] += 1;
        }
        c
    };
    let keep_left = counts[Face::Left.index()] >= counts[Face::Right.index()];
    let size = gt.scene.image_size;
    let mut inputs = Vec::with_capacity(3);
    for (stream, group) in Group::ALL.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.noise.seed);
        rng.set_stream(stream as u64);
        let (clean_mask, kps) = if group == truth_group {
            let mask = if config.b_walls == GroupBWalls::default() {
                gt.mask.clone()
            } else {
                relabel(gt, group, keep_left, config.b_walls)?
            };
            (mask, gt.keypoints.clone())
        } else {
            (
                relabel(gt, group, keep_left, config.b_walls)?,
                wrong_group_keypoints(group, &truth_layout, config)?,
            )
        };
        let kps = jitter(&kps, config.noise.keypoint_sigma, &mut rng)?;
        let mask = boundary_jitter(&clean_mask, config.noise.boundary_radius, &mut rng);
        let mask = flip_labels(&mask, config.noise.flip_prob, &mut rng);
        inputs.push(HypothesisInput {
            group,
            segmentation: mask,
            heatmaps: encode(&kps, config.heatmap_resolution, config.heatmap_sigma)?,
        });
    }
    debug_assert_eq!(size, inputs[0].segmentation.size());
    Ok(inputs)
}

fn relabel(gt: &GroundTruth, group: Group, keep_left: bool, b_walls: GroupBWalls) -> Result<SegMask> {
    let labels = gt
        .faces
        .iter()
        .map(|&f| face_label(f, group, gt.walls, keep_left, b_walls))
        .collect();
    SegMask::from_labels(gt.scene.image_size, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::render_depth;
    use crate::heatmap::decode_to_frame;
    use crate::layout::rasterize;

    fn ranges() -> SceneRanges {
        SceneRanges::default()
    }

    #[test]
    fn frontoparallel_view_is_type_zero() {
        let scene = SyntheticScene::frontoparallel(Size::new(320, 320));
        let l = analyze_scene(&scene, 0.04, 2.0).unwrap();
        assert_eq!(l.room_type.id(), 0);
        assert_eq!(l.keypoints.len(), 8);
        let k1 = l.keypoints.get(1).unwrap();
        // center wall of width 1 at distance 1.5 with f = 160
        assert!((k1.x - (160.0 - 160.0 * 0.5 / 1.5)).abs() < 1e-9);
        let exit5 = l.keypoints.get(5).unwrap();
        assert!(exit5.x.abs() < 1e-9 && exit5.y.abs() < 1e-9);
        let total: f64 = l.face_fractions.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn yawing_left_hides_the_right_wall() {
        let mut scene = SyntheticScene::frontoparallel(Size::new(320, 320));
        scene.focal = 320.0;
        scene.yaw = (-30.0f64).to_radians();
        let l = analyze_scene(&scene, 0.04, 2.0).unwrap();
        assert_eq!(l.walls, VisibleWalls::LeftCenter);
        assert_eq!(l.room_type.id(), 5);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_scene(42, &ranges()).unwrap();
        let b = sample_scene(42, &ranges()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_scene(43, &ranges()).unwrap());
    }

    #[test]
    fn every_type_can_be_targeted() {
        for t in RoomType::all() {
            let scene = sample_scene_of_type(t.id() as u64, &ranges(), Some(t)).unwrap();
            let gt = scene_to_groundtruth(&scene, &ranges()).unwrap();
            assert_eq!(gt.room_type, t);
            assert_eq!(gt.keypoints.ids(), t.keypoint_ids());
        }
    }

    #[test]
    fn groundtruth_mask_matches_rasterized_layout() {
        for seed in 0..40 {
            let t = RoomType::new((seed % 11) as u8).unwrap();
            let scene = sample_scene_of_type(seed, &ranges(), Some(t)).unwrap();
            let gt = scene_to_groundtruth(&scene, &ranges()).unwrap();
            let raster = rasterize(&gt.layout().unwrap(), scene.image_size);
            let agree = raster
                .labels()
                .iter()
                .zip(gt.mask.labels())
                .filter(|(a, b)| a == b)
                .count();
            let frac = agree as f64 / scene.image_size.area() as f64;
            assert!(frac >= 0.995, "seed {seed} type {}: agreement {frac}", t.id());
            assert!(gt.mask.labels().iter().all(|&l| l != Label::Void));
        }
    }

    #[test]
    fn groundtruth_depth_matches_rendered_true_fit() {
        let t0 = RoomType::new(0).unwrap();
        let scene = sample_scene_of_type(5, &SceneRanges::for_depth(), Some(t0)).unwrap();
        let gt = scene_to_groundtruth(&scene, &ranges()).unwrap();
        let layout = gt.layout().unwrap();
        let rendered = render_depth(&scene.true_fit(), &layout, scene.image_size).unwrap();
        let raster = rasterize(&layout, scene.image_size);
        let mut compared = 0;
        for i in 0..scene.image_size.area() {
            if raster.labels()[i] == gt.mask.labels()[i] {
                let (a, b) = (rendered.depth[i], gt.depth.depth[i]);
                assert!((a - b).abs() <= 1e-6 * b, "pixel {i}: {a} vs {b}");
                compared += 1;
            }
        }
        assert!(compared as f64 > 0.99 * scene.image_size.area() as f64);
    }

    #[test]
    fn zero_noise_true_group_reproduces_groundtruth() {
        let scene = sample_scene_of_type(9, &ranges(), Some(RoomType::new(3).unwrap())).unwrap();
        let gt = scene_to_groundtruth(&scene, &ranges()).unwrap();
        let inputs = perturb(&gt, &PerturbConfig::default()).unwrap();
        let truth = &inputs[1];
        assert_eq!(truth.group, Group::B);
        assert_eq!(truth.segmentation, gt.mask);
        let decoded = decode_to_frame(&truth.heatmaps, 0.2, scene.image_size).unwrap();
        assert_eq!(decoded.ids(), gt.keypoints.ids());
        assert_eq!(
            truth.heatmaps,
            encode(&gt.keypoints, DEFAULT_RESOLUTION, DEFAULT_SIGMA).unwrap()
        );
    }

    #[test]
    fn flip_rate_matches_probability() {
        let scene = sample_scene_of_type(1, &ranges(), Some(RoomType::new(0).unwrap())).unwrap();
        let gt = scene_to_groundtruth(&scene, &ranges()).unwrap();
        let config = PerturbConfig {
            noise: NoiseConfig {
                flip_prob: 0.1,
                seed: 11,
                ..NoiseConfig::default()
            },
            ..PerturbConfig::default()
        };
        let inputs = perturb(&gt, &config).unwrap();
        let changed = inputs[0]
            .segmentation
            .labels()
            .iter()
            .zip(gt.mask.labels())
            .filter(|(a, b)| a != b)
            .count();
        let frac = changed as f64 / gt.mask.labels().len() as f64;
        assert!((frac - 0.1).abs() <= 0.01, "{frac}");
        assert_eq!(inputs, perturb(&gt, &config).unwrap());
    }

    #[test]
    fn wrong_groups_use_their_own_alphabet() {
        let scene = sample_scene_of_type(2, &ranges(), Some(RoomType::new(0).unwrap())).unwrap();
        let gt = scene_to_groundtruth(&scene, &ranges()).unwrap();
        let inputs = perturb(&gt, &PerturbConfig::default()).unwrap();
        let b = inputs[1].segmentation.present_labels();
        assert!(!b.contains(&Label::RightWall));
        let c = inputs[2].segmentation.present_labels();
        assert!(c.iter().all(|l| !l.is_wall() || *l == Label::CenterWall));
        assert_eq!(inputs[2].heatmaps.channel_count(), 4);
    }

    #[test]
    fn invalid_noise_is_rejected() {
        let bad = NoiseConfig {
            flip_prob: 1.5,
            ..NoiseConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = NoiseConfig {
            keypoint_sigma: -1.0,
            ..NoiseConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
