//! Layout construction from keypoints and chain-based rasterization.
//!
//! A layout is described by up to two x-monotone chains (ceiling and floor
//! boundaries) and up to two y-monotone wall/wall boundaries. Terminal chain
//! segments are extended along their direction, so chains cover every image
//! column; pixels are classified against them at their sample point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Rect, P2};
use crate::keypoint::KeypointSet;
use crate::mask::SegMask;
use crate::model::{wall_labels_of_group, Group, GroupBWalls, Label, RoomType, Size};

/// Keypoints may sit this far (as a fraction of the image size) outside the
/// image before a layout is rejected.
pub const OUTSIDE_TOLERANCE: f64 = 0.1;

/// Piecewise-linear boundary with strictly increasing x.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    vertices: Vec<P2>,
}

impl Chain {
    fn new(vertices: Vec<P2>, what: &str) -> Result<Self> {
        debug_assert!(vertices.len() >= 2);
        if vertices.windows(2).any(|w| w[1].x <= w[0].x) {
            return Err(Error::layout(format!("{what} chain is not x-monotone")));
        }
        Ok(Chain { vertices })
    }

    pub fn vertices(&self) -> &[P2] {
        &self.vertices
    }

    /// Boundary height at column `x`, extrapolating the terminal segments.
    pub fn y_at(&self, x: f64) -> f64 {
        let v = &self.vertices;
        let last = v.len() - 2;
        let seg = (0..last).find(|&i| x <= v[i + 1].x).unwrap_or(last);
        let (a, b) = (v[seg], v[seg + 1]);
        a.y + (x - a.x) * (b.y - a.y) / (b.x - a.x)
    }
}

/// Wall/wall boundary: the line through its upper and lower end.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WallBoundary {
    pub top: P2,
    pub bottom: P2,
}

impl WallBoundary {
    pub fn x_at(&self, y: f64) -> f64 {
        let (a, b) = (self.top, self.bottom);
        a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    group: Group,
    keypoints: KeypointSet,
    floor_present: bool,
    ceiling_present: bool,
    size: Size,
    b_walls: GroupBWalls,
    ceiling: Option<Chain>,
    floor: Option<Chain>,
    walls: Vec<WallBoundary>,
}

impl Layout {
    pub fn group(&self) -> Group {
        self.group
    }

    pub fn keypoints(&self) -> &KeypointSet {
        &self.keypoints
    }

    pub fn floor_present(&self) -> bool {
        self.floor_present
    }

    pub fn ceiling_present(&self) -> bool {
        self.ceiling_present
    }

    pub fn size(&self) -> Size {
        self.size
    }

    pub fn ceiling(&self) -> Option<&Chain> {
        self.ceiling.as_ref()
    }

    pub fn floor(&self) -> Option<&Chain> {
        self.floor.as_ref()
    }

    pub fn wall_boundaries(&self) -> &[WallBoundary] {
        &self.walls
    }

    pub fn room_type(&self) -> Option<RoomType> {
        RoomType::from_parts(self.group, self.ceiling_present, self.floor_present)
    }

    pub fn region_count(&self) -> usize {
        self.group.wall_count() + self.floor_present as usize + self.ceiling_present as usize
    }

    pub fn wall_labels(&self) -> &'static [Label] {
        wall_labels_of_group(self.group, self.b_walls)
    }

    /// Labels of every declared region.
    pub fn region_labels(&self) -> Vec<Label> {
        let mut out = self.wall_labels().to_vec();
        if self.ceiling_present {
            out.push(Label::Ceiling);
        }
        if self.floor_present {
            out.push(Label::Floor);
        }
        out.sort();
        out
    }

    pub fn with_b_walls(mut self, b_walls: GroupBWalls) -> Self {
        self.b_walls = b_walls;
        self
    }

    /// Label of the continuous point `(x, y)` in layout coordinates.
    pub fn label_at(&self, x: f64, y: f64) -> Label {
        if let Some(c) = &self.ceiling {
            if y < c.y_at(x) {
                return Label::Ceiling;
            }
        }
        if let Some(f) = &self.floor {
            if y > f.y_at(x) {
                return Label::Floor;
            }
        }
        let idx = self.walls.iter().filter(|b| x >= b.x_at(y)).count();
        self.wall_labels()[idx]
    }
}

pub fn build_layout(
    group: Group,
    kps: &KeypointSet,
    floor_present: bool,
    ceiling_present: bool,
    image_size: Size,
) -> Result<Layout> {
    if image_size.is_empty() {
        return Err(Error::invalid(format!("image size {image_size} is empty")));
    }
    if kps.group() != group {
        return Err(Error::layout(format!(
            "keypoints belong to group {}, not {group}",
            kps.group()
        )));
    }
    let required = group.required_ids(ceiling_present, floor_present);
    let ids = kps.ids();
    let missing: Vec<u8> = required.iter().copied().filter(|id| !ids.contains(id)).collect();
    let extra: Vec<u8> = ids.iter().copied().filter(|id| !required.contains(id)).collect();
    if !missing.is_empty() {
        return Err(Error::layout(format!("missing keypoint ids {missing:?}")));
    }
    if !extra.is_empty() {
        return Err(Error::layout(format!("unexpected keypoint ids {extra:?}")));
    }
    let (w, h) = (image_size.width as f64, image_size.height as f64);
    let image = Rect::image(w, h);
    let allowed = image.inflated(OUTSIDE_TOLERANCE);
    for kp in kps.points() {
        if !allowed.contains(&P2::new(kp.x, kp.y)) {
            return Err(Error::layout(format!(
                "keypoint {} at ({:.2}, {:.2}) is too far outside the {image_size} image",
                kp.id, kp.x, kp.y
            )));
        }
    }
    let p = |id: u8| {
        let k = kps.get(id).expect("presence checked above");
        P2::new(k.x, k.y)
    };

    let (ceiling_ids, floor_ids, wall_ids): (&[u8], &[u8], &[(u8, u8)]) = match group {
        Group::A => (&[5, 1, 2, 6], &[7, 3, 4, 8], &[(1, 3), (2, 4)]),
        Group::B => (&[3, 1, 4], &[5, 2, 6], &[(1, 2)]),
        Group::C => (&[1, 2], &[3, 4], &[]),
    };
    let ceiling = ceiling_present
        .then(|| Chain::new(ceiling_ids.iter().map(|&id| p(id)).collect(), "ceiling"))
        .transpose()?;
    let floor = floor_present
        .then(|| Chain::new(floor_ids.iter().map(|&id| p(id)).collect(), "floor"))
        .transpose()?;
    let walls: Vec<WallBoundary> = wall_ids
        .iter()
        .map(|&(t, b)| WallBoundary {
            top: p(t),
            bottom: p(b),
        })
        .collect();

    for (i, b) in walls.iter().enumerate() {
        if b.bottom.y <= b.top.y {
            return Err(Error::layout(format!("wall boundary {i} is not y-monotone")));
        }
    }
    if let [left, right] = walls.as_slice() {
        for y in [left.top.y, left.bottom.y, right.top.y, right.bottom.y] {
            if left.x_at(y) >= right.x_at(y) {
                return Err(Error::layout("wall boundaries cross".to_string()));
            }
        }
    }
    if let (Some(c), Some(f)) = (&ceiling, &floor) {
        let mut xs = vec![0.0, w];
        xs.extend(
            c.vertices
                .iter()
                .chain(&f.vertices)
                .map(|v| v.x)
                .filter(|x| *x > 0.0 && *x < w),
        );
        if xs.iter().any(|&x| c.y_at(x) > f.y_at(x) + 1e-9) {
            return Err(Error::layout("ceiling chain crosses below the floor chain".to_string()));
        }
    }

    Ok(Layout {
        group,
        keypoints: kps.clone(),
        floor_present,
        ceiling_present,
        size: image_size,
        b_walls: GroupBWalls::default(),
        ceiling,
        floor,
        walls,
    })
}

/// Classifies every pixel sample point of a `size` raster. When `size`
/// differs from the layout's image size, pixel coordinates are scaled into
/// the layout frame first.
pub fn rasterize(layout: &Layout, size: Size) -> SegMask {
    let (w, h) = (size.width as usize, size.height as usize);
    let sx = layout.size.width as f64 / size.width as f64;
    let sy = layout.size.height as f64 / size.height as f64;
    let ceil_y: Vec<f64> = (0..w)
        .map(|i| {
            layout
                .ceiling
                .as_ref()
                .map_or(f64::NEG_INFINITY, |c| c.y_at(i as f64 * sx))
        })
        .collect();
    let floor_y: Vec<f64> = (0..w)
        .map(|i| layout.floor.as_ref().map_or(f64::INFINITY, |c| c.y_at(i as f64 * sx)))
        .collect();
    let walls = layout.wall_labels();
    let mut labels = Vec::with_capacity(w * h);
    let mut bx = vec![0.0; layout.walls.len()];
    for j in 0..h {
        let y = j as f64 * sy;
        for (slot, b) in bx.iter_mut().zip(&layout.walls) {
            *slot = b.x_at(y);
        }
        for i in 0..w {
            let x = i as f64 * sx;
            let label = if y < ceil_y[i] {
                Label::Ceiling
            } else if y > floor_y[i] {
                Label::Floor
            } else {
                walls[bx.iter().filter(|&&b| x >= b).count()]
            };
            labels.push(label);
        }
    }
    SegMask::from_labels(size, labels).expect("one label per pixel")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub regions: (Label, Label),
}

/// All boundary segments of the layout, clipped to the image rectangle and
/// tagged with the two regions they separate.
pub fn edges_of_layout(layout: &Layout) -> Vec<Edge> {
    let image = Rect::image(layout.size.width as f64, layout.size.height as f64);
    let walls = layout.wall_labels();
    let mut out = Vec::new();
    let mut push = |a: P2, b: P2, regions: (Label, Label)| {
        if let Some((a, b)) = image.clip_segment(&a, &b) {
            if (b - a).norm() > 1e-9 {
                out.push(Edge {
                    a: [a.x, a.y],
                    b: [b.x, b.y],
                    regions,
                });
            }
        }
    };
    // extend `end` away from `inner` to the border when it lies inside
    let extend = |inner: P2, end: P2| -> P2 {
        if image.contains_strictly(&end) {
            image.exit_point(&end, &(end - inner)).unwrap_or(end)
        } else {
            end
        }
    };
    for (chain, surface) in [(&layout.ceiling, Label::Ceiling), (&layout.floor, Label::Floor)] {
        let Some(chain) = chain else { continue };
        let mut v = chain.vertices.clone();
        let n = v.len();
        v[0] = extend(v[1], v[0]);
        v[n - 1] = extend(v[n - 2], v[n - 1]);
        for (i, seg) in v.windows(2).enumerate() {
            push(seg[0], seg[1], (surface, walls[i]));
        }
    }
    for (k, b) in layout.walls.iter().enumerate() {
        let top = if layout.ceiling_present {
            b.top
        } else {
            extend(b.bottom, b.top)
        };
        let bottom = if layout.floor_present {
            b.bottom
        } else {
            extend(b.top, b.bottom)
        };
        push(top, bottom, (walls[k], walls[k + 1]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keypoint::Keypoint;

    fn kps(group: Group, size: Size, pts: &[(u8, f64, f64)]) -> KeypointSet {
        KeypointSet::new(
            group,
            size,
            pts.iter().map(|&(id, x, y)| Keypoint::new(id, x, y)).collect(),
        )
        .unwrap()
    }

    const S: Size = Size::new(320, 320);

    fn type0() -> KeypointSet {
        kps(
            Group::A,
            S,
            &[
                (1, 100.0, 90.0),
                (2, 220.0, 95.0),
                (3, 105.0, 230.0),
                (4, 215.0, 225.0),
                (5, 0.0, 40.0),
                (6, 320.0, 30.0),
                (7, 0.0, 290.0),
                (8, 300.0, 320.0),
            ],
        )
    }

    #[test]
    fn single_wall_without_chains() {
        let l = build_layout(Group::C, &KeypointSet::empty(Group::C, S), false, false, S).unwrap();
        assert_eq!(l.region_count(), 1);
        let m = rasterize(&l, S);
        assert!(m.labels().iter().all(|&x| x == Label::CenterWall));
        assert!(edges_of_layout(&l).is_empty());
    }

    #[test]
    fn single_wall_with_horizontal_chains() {
        let k = kps(
            Group::C,
            S,
            &[(1, 0.0, 80.0), (2, 320.0, 80.0), (3, 0.0, 240.0), (4, 320.0, 240.0)],
        );
        let l = build_layout(Group::C, &k, true, true, S).unwrap();
        assert_eq!(l.region_count(), 3);
        let c = rasterize(&l, S).counts();
        // rows 0..80 ceiling, 80..=240 wall, 241..320 floor
        assert_eq!(c[Label::Ceiling as usize], 80 * 320);
        assert_eq!(c[Label::Floor as usize], 79 * 320);
        assert_eq!(c[Label::CenterWall as usize], 161 * 320);
        let fr = |n: usize| n as f64 / S.area() as f64;
        assert!((fr(c[Label::Ceiling as usize]) - 0.25).abs() < 0.01);
        assert!((fr(c[Label::CenterWall as usize]) - 0.5).abs() < 0.01);
        assert!((fr(c[Label::Floor as usize]) - 0.25).abs() < 0.01);
        assert_eq!(edges_of_layout(&l).len(), 2);
    }

    #[test]
    fn cuboid_has_eight_edges_and_five_regions() {
        let l = build_layout(Group::A, &type0(), true, true, S).unwrap();
        assert_eq!(l.room_type(), Some(RoomType::new(0).unwrap()));
        let edges = edges_of_layout(&l);
        assert_eq!(edges.len(), 8);
        assert_eq!(edges.iter().filter(|e| e.regions.0 == Label::Ceiling).count(), 3);
        assert_eq!(edges.iter().filter(|e| e.regions.0 == Label::Floor).count(), 3);
        for e in &edges {
            for p in [e.a, e.b] {
                assert!(p[0] >= 0.0 && p[0] <= 320.0 && p[1] >= 0.0 && p[1] <= 320.0);
            }
        }
        let m = rasterize(&l, S);
        let c = m.counts();
        assert_eq!(c.iter().sum::<usize>(), S.area());
        assert_eq!(c[0], 0);
        assert!(Label::SEMANTIC.iter().all(|l| c[*l as usize] > 0));
        assert_eq!(m.get(160, 160), Label::CenterWall);
        assert_eq!(m.get(20, 160), Label::LeftWall);
        assert_eq!(m.get(300, 160), Label::RightWall);
        assert_eq!(m.get(160, 5), Label::Ceiling);
        assert_eq!(m.get(160, 315), Label::Floor);
    }

    #[test]
    fn ceiling_is_scanned_before_floor_in_every_column() {
        let l = build_layout(Group::A, &type0(), true, true, S).unwrap();
        let m = rasterize(&l, S);
        for x in 0..S.width {
            let col: Vec<Label> = (0..S.height).map(|y| m.get(x, y)).collect();
            let last_ceiling = col.iter().rposition(|&l| l == Label::Ceiling);
            let first_floor = col.iter().position(|&l| l == Label::Floor);
            if let (Some(c), Some(f)) = (last_ceiling, first_floor) {
                assert!(c < f);
            }
        }
    }

    #[test]
    fn missing_or_extra_ids_are_rejected() {
        let k = type0();
        assert!(build_layout(Group::A, &k, false, true, S)
            .unwrap_err()
            .to_string()
            .contains("unexpected"));
        let partial = k.select(&[1, 2, 3, 4, 5, 6]).unwrap();
        assert!(build_layout(Group::A, &partial, true, true, S)
            .unwrap_err()
            .to_string()
            .contains("missing"));
        assert!(build_layout(Group::A, &partial, true, false, S).is_err());
        assert!(build_layout(Group::A, &partial, false, true, S).is_ok());
    }

    #[test]
    fn far_outside_keypoints_are_rejected() {
        let ok = kps(Group::C, S, &[(1, -30.0, 80.0), (2, 350.0, 80.0)]);
        assert!(build_layout(Group::C, &ok, false, true, S).is_ok());
        let bad = kps(Group::C, S, &[(1, -40.0, 80.0), (2, 320.0, 80.0)]);
        assert!(build_layout(Group::C, &bad, false, true, S).is_err());
    }

    #[test]
    fn non_monotone_and_crossing_chains_are_rejected() {
        let back = kps(Group::C, S, &[(1, 200.0, 80.0), (2, 100.0, 80.0)]);
        assert!(build_layout(Group::C, &back, false, true, S)
            .unwrap_err()
            .to_string()
            .contains("x-monotone"));
        let crossing = kps(
            Group::C,
            S,
            &[(1, 0.0, 200.0), (2, 320.0, 200.0), (3, 0.0, 100.0), (4, 320.0, 300.0)],
        );
        assert!(build_layout(Group::C, &crossing, true, true, S)
            .unwrap_err()
            .to_string()
            .contains("crosses"));
        let flat = kps(
            Group::C,
            S,
            &[(1, 0.0, 100.0), (2, 320.0, 100.0), (3, 0.0, 100.0), (4, 320.0, 100.0)],
        );
        let l = build_layout(Group::C, &flat, true, true, S).unwrap();
        assert_eq!(rasterize(&l, S).counts().iter().sum::<usize>(), S.area());
    }

    #[test]
    fn two_wall_layout_uses_configured_labels() {
        let k = kps(Group::B, S, &[(1, 150.0, 0.0), (2, 160.0, 320.0)]);
        let l = build_layout(Group::B, &k, false, false, S).unwrap();
        let m = rasterize(&l, S);
        assert_eq!(m.get(10, 10), Label::LeftWall);
        assert_eq!(m.get(300, 10), Label::CenterWall);
        let m = rasterize(&l.clone().with_b_walls(GroupBWalls::CenterRight), S);
        assert_eq!(m.get(10, 10), Label::CenterWall);
        assert_eq!(m.get(300, 10), Label::RightWall);
        let edges = edges_of_layout(&l);
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].regions, (Label::LeftWall, Label::CenterWall));
    }

    #[test]
    fn rasterizes_at_a_different_resolution() {
        let k = kps(
            Group::C,
            S,
            &[(1, 0.0, 80.0), (2, 320.0, 80.0), (3, 0.0, 240.0), (4, 320.0, 240.0)],
        );
        let l = build_layout(Group::C, &k, true, true, S).unwrap();
        let m = rasterize(&l, Size::new(640, 640));
        assert_eq!(m.get(0, 159), Label::Ceiling);
        assert_eq!(m.get(0, 160), Label::CenterWall);
    }
}
