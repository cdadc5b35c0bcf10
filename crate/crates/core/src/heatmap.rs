//! Gaussian keypoint heatmaps.
//!
//! Each prototype ID of a group owns one channel. A present keypoint is
//! drawn as an unnormalized Gaussian with peak 1.0; absent IDs leave their
//! channel at zero. Decoding takes the per-channel argmax (first maximum in
//! row-major order) and refines it with the intensity-weighted centroid of
//! the 3x3 neighborhood.

use crate::error::{Error, Result};
use crate::keypoint::{rescale_keypoints, Keypoint, KeypointSet};
use crate::model::{Group, Size};

pub const DEFAULT_RESOLUTION: Size = Size::new(80, 80);
pub const DEFAULT_SIGMA: f64 = 2.0;
pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.2;

#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    group: Group,
    size: Size,
    sigma: f64,
    // channel-major, then row-major
    values: Vec<f32>,
}

impl Heatmap {
    pub fn zeros(group: Group, size: Size, sigma: f64) -> Self {
        let len = group.prototype_keypoint_count() * size.area();
        Heatmap {
            group,
            size,
            sigma,
            values: vec![0.0; len],
        }
    }

    /// Wraps raw channel-major values after checking shape and range.
    pub fn from_values(group: Group, size: Size, sigma: f64, values: Vec<f32>) -> Result<Self> {
        if size.is_empty() {
            return Err(Error::invalid(format!("heatmap size {size} is empty")));
        }
        let expected = group.prototype_keypoint_count() * size.area();
        if values.len() != expected {
            return Err(Error::invalid(format!(
                "group {group} heatmap of size {size} needs {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::invalid(format!("heatmap value {v} outside [0, 1]")));
        }
        Ok(Heatmap {
            group,
            size,
            sigma,
            values,
        })
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn size(&self) -> Size {
        self.size
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn channel_count(&self) -> usize {
        self.group.prototype_keypoint_count()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Channel of prototype ID `id` (1-based).
    pub fn channel(&self, id: u8) -> &[f32] {
        let n = self.size.area();
        let c = id as usize - 1;
        &self.values[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, id: u8) -> &mut [f32] {
        let n = self.size.area();
        let c = id as usize - 1;
        &mut self.values[c * n..(c + 1) * n]
    }
}

/// Renders `kps` into a heatmap of resolution `res`. Coordinates are mapped
/// from the keypoint frame by pure per-axis scaling.
pub fn encode(kps: &KeypointSet, res: Size, sigma: f64) -> Result<Heatmap> {
    if res.is_empty() {
        return Err(Error::invalid(format!("heatmap resolution {res} is empty")));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let scaled = rescale_keypoints(kps, res)?;
    let mut heatmap = Heatmap::zeros(kps.group(), res, sigma);
    let inv_two_var = 1.0 / (2.0 * sigma * sigma);
    let (w, h) = (res.width as usize, res.height as usize);
    for kp in scaled.points() {
        let channel = heatmap.channel_mut(kp.id);
        let gx: Vec<f64> = (0..w)
            .map(|i| (-(i as f64 - kp.x).powi(2) * inv_two_var).exp())
            .collect();
        for j in 0..h {
            let gy = (-(j as f64 - kp.y).powi(2) * inv_two_var).exp();
            let row = &mut channel[j * w..(j + 1) * w];
            for (v, g) in row.iter_mut().zip(&gx) {
                *v = (gy * g) as f32;
            }
        }
    }
    Ok(heatmap)
}

/// Decodes one keypoint per channel whose peak reaches `min_conf`. The
/// result lives in the heatmap's own frame.
pub fn decode(heatmap: &Heatmap, min_conf: f64) -> KeypointSet {
    let (w, h) = (heatmap.size.width as usize, heatmap.size.height as usize);
    let mut points = Vec::new();
    for id in 1..=heatmap.channel_count() as u8 {
        let channel = heatmap.channel(id);
        let (mut best, mut best_at) = (f32::NEG_INFINITY, 0usize);
        for (idx, &v) in channel.iter().enumerate() {
            if v > best {
                best = v;
                best_at = idx;
            }
        }
        let peak = best as f64;
        if peak < min_conf {
            continue;
        }
        let (px, py) = (best_at % w, best_at / w);
        let ys = py.saturating_sub(1)..=(py + 1).min(h - 1);
        let xs = px.saturating_sub(1)..=(px + 1).min(w - 1);
        // the neighborhood floor is removed so the tails do not pull the
        // centroid towards the window center
        let floor = ys
            .clone()
            .flat_map(|y| xs.clone().map(move |x| channel[y * w + x]))
            .fold(f32::INFINITY, f32::min) as f64;
        let (mut sum, mut sx, mut sy) = (0.0f64, 0.0f64, 0.0f64);
        for y in ys {
            for x in xs.clone() {
                let v = channel[y * w + x] as f64 - floor;
                sum += v;
                sx += v * x as f64;
                sy += v * y as f64;
            }
        }
        let (x, y) = if sum > 0.0 {
            (sx / sum, sy / sum)
        } else {
            (px as f64, py as f64)
        };
        points.push(Keypoint::new(id, x, y).with_confidence(peak.clamp(0.0, 1.0)));
    }
    KeypointSet::new(heatmap.group, heatmap.size, points)
        .expect("decoded ids are unique prototype ids with finite coordinates")
}

/// [`decode`] followed by rescaling into `frame`.
pub fn decode_to_frame(heatmap: &Heatmap, min_conf: f64, frame: Size) -> Result<KeypointSet> {
    rescale_keypoints(&decode(heatmap, min_conf), frame)
}
