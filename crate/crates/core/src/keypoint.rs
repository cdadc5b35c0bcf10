use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Group, Size};

/// A keypoint in continuous pixel coordinates of its set's frame. Pixel
/// `(i, j)` of a raster in that frame samples the point `(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub id: u8,
    pub x: f64,
    pub y: f64,
    #[serde(default = "full_confidence")]
    pub confidence: f64,
}

fn full_confidence() -> f64 {
    1.0
}

impl Keypoint {
    pub fn new(id: u8, x: f64, y: f64) -> Self {
        Keypoint {
            id,
            x,
            y,
            confidence: 1.0,
        }
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn point(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// Ordered keypoints of one hypothesis group, strictly increasing by ID.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeypointSet {
    group: Group,
    frame: Size,
    points: Vec<Keypoint>,
}

impl KeypointSet {
    /// Sorts by ID and validates: IDs unique and within the group's
    /// prototype table, coordinates and confidences finite.
    pub fn new(group: Group, frame: Size, mut points: Vec<Keypoint>) -> Result<Self> {
        points.sort_by_key(|k| k.id);
        for pair in points.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::invalid(format!("duplicate keypoint id {}", pair[0].id)));
            }
        }
        let max_id = group.prototype_keypoint_count() as u8;
        for kp in &points {
            if kp.id == 0 || kp.id > max_id {
                return Err(Error::invalid(format!(
                    "keypoint id {} is not a group {group} prototype id (1..={max_id})",
                    kp.id
                )));
            }
            if !kp.x.is_finite() || !kp.y.is_finite() || !kp.confidence.is_finite() {
                return Err(Error::invalid(format!("keypoint {} is not finite", kp.id)));
            }
        }
        Ok(KeypointSet { group, frame, points })
    }

    pub fn empty(group: Group, frame: Size) -> Self {
        KeypointSet {
            group,
            frame,
            points: Vec::new(),
        }
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn frame(&self) -> Size {
        self.frame
    }

    pub fn points(&self) -> &[Keypoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ids(&self) -> Vec<u8> {
        self.points.iter().map(|k| k.id).collect()
    }

    pub fn get(&self, id: u8) -> Option<&Keypoint> {
        self.points
            .binary_search_by_key(&id, |k| k.id)
            .ok()
            .map(|i| &self.points[i])
    }

    /// Keeps only the listed IDs; returns `None` if one of them is missing.
    pub fn select(&self, ids: &[u8]) -> Option<KeypointSet> {
        let points = ids
            .iter()
            .map(|&id| self.get(id).copied())
            .collect::<Option<Vec<_>>>()?;
        KeypointSet::new(self.group, self.frame, points).ok()
    }
}

/// Scales every coordinate by `to / from` per axis; IDs and confidences are
/// kept.
pub fn rescale_keypoints(kps: &KeypointSet, to: Size) -> Result<KeypointSet> {
    if to.is_empty() {
        return Err(Error::invalid(format!("cannot rescale keypoints to {to}")));
    }
    let from = kps.frame();
    if from.is_empty() {
        return Err(Error::invalid(format!("keypoint frame {from} is empty")));
    }
    let sx = to.width as f64 / from.width as f64;
    let sy = to.height as f64 / from.height as f64;
    let points = kps
        .points()
        .iter()
        .map(|k| Keypoint {
            x: k.x * sx,
            y: k.y * sy,
            ..*k
        })
        .collect();
    Ok(KeypointSet {
        group: kps.group(),
        frame: to,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rescale_examples() {
        let kps = KeypointSet::new(Group::C, Size::new(80, 80), vec![Keypoint::new(1, 40.0, 40.0)]).unwrap();
        let up = rescale_keypoints(&kps, Size::new(320, 320)).unwrap();
        assert_eq!(up.frame(), Size::new(320, 320));
        assert_eq!(up.points()[0].point(), [160.0, 160.0]);
        assert_eq!(rescale_keypoints(&kps, Size::new(80, 80)).unwrap(), kps);
        assert!(rescale_keypoints(&kps, Size::new(0, 10)).is_err());
    }

    #[test]
    fn rejects_foreign_and_duplicate_ids() {
        let f = Size::new(10, 10);
        assert!(KeypointSet::new(Group::C, f, vec![Keypoint::new(5, 1.0, 1.0)]).is_err());
        assert!(KeypointSet::new(
            Group::A,
            f,
            vec![Keypoint::new(2, 1.0, 1.0), Keypoint::new(2, 0.0, 0.0)]
        )
        .is_err());
        assert!(KeypointSet::new(Group::A, f, vec![Keypoint::new(1, f64::NAN, 1.0)]).is_err());
        let s = KeypointSet::new(
            Group::A,
            f,
            vec![Keypoint::new(8, 1.0, 1.0), Keypoint::new(3, 0.0, 0.0)],
        )
        .unwrap();
        assert_eq!(s.ids(), vec![3, 8]);
        assert_eq!(s.select(&[8]).unwrap().ids(), vec![8]);
        assert!(s.select(&[1]).is_none());
    }

    proptest! {
        #[test]
        fn up_then_down_rescale_drifts_below_1e9(
            x in 0.0..640.0f64, y in 0.0..480.0f64,
            w in 1u32..4000, h in 1u32..4000,
        ) {
            let kps = KeypointSet::new(Group::B, Size::new(640, 480), vec![Keypoint::new(2, x, y)]).unwrap();
            let back = rescale_keypoints(&rescale_keypoints(&kps, Size::new(w, h)).unwrap(), Size::new(640, 480)).unwrap();
            let p = back.points()[0];
            prop_assert!((p.x - x).abs() < 1e-9 && (p.y - y).abs() < 1e-9);
        }
    }
}
