use nalgebra::{Point3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geom::P2;

/// Pinhole camera with square pixels and no skew. `x_cam = R x_world + t`;
/// the camera looks along +z with y pointing down the image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PinholeCamera {
    pub focal: f64,
    pub principal: P2,
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

impl PinholeCamera {
    pub fn to_camera(&self, p: &Point3<f64>) -> Point3<f64> {
        self.rotation * p + self.translation
    }

    /// Projects a world point; `None` when it is not in front of the camera.
    pub fn project(&self, p: &Point3<f64>) -> Option<P2> {
        let c = self.to_camera(p);
        (c.z > 0.0).then(|| {
            P2::new(
                self.focal * c.x / c.z + self.principal.x,
                self.focal * c.y / c.z + self.principal.y,
            )
        })
    }

    pub fn center(&self) -> Point3<f64> {
        Point3::from(-(self.rotation.inverse() * self.translation))
    }

    /// World-space direction of the ray through `pixel`, scaled so that its
    /// camera-frame z component is 1: a hit at parameter `s` has depth `s`.
    pub fn ray_direction(&self, pixel: &P2) -> Vector3<f64> {
        let d = Vector3::new(
            (pixel.x - self.principal.x) / self.focal,
            (pixel.y - self.principal.y) / self.focal,
            1.0,
        );
        self.rotation.inverse() * d
    }

    pub fn axis_angle(&self) -> [f64; 3] {
        let v = self.rotation.scaled_axis();
        [v.x, v.y, v.z]
    }
}

/// Camera pose parameters as stored in files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: [f64; 3],
    pub translation: [f64; 3],
}

impl Pose {
    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::new(Vector3::from(self.rotation))
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::from(self.translation)
    }
}
