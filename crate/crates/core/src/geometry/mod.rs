//! Camera model, 3D primitives, line fitting and rotations.
//!
//! Everything here is plain value types and pure functions. Points are in the
//! camera frame (x right, y down, z forward) in meters unless noted.

mod camera;
mod ransac;
mod rotation;
mod vec3;

pub use camera::{backproject, project, CameraIntrinsics, PixelPoint};
pub use ransac::{fit_line_ransac, LineFit, RansacParams, EXHAUSTIVE_MAX_POINTS};
pub use rotation::Rotation3;
pub use vec3::Vec3;

use crate::error::{Error, Result};

/// A half-line `origin + t * direction` with a unit direction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    /// Builds a ray, normalizing `direction`.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self> {
        if !origin.is_finite() || !direction.is_finite() {
            return Err(Error::NonFinite("ray"));
        }
        let n = direction.norm();
        if n < 1e-12 {
            return Err(Error::DegenerateInput("ray direction has zero length".into()));
        }
        Ok(Ray {
            origin,
            direction: direction / n,
        })
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }

    /// Signed parameter of the orthogonal projection of `p` onto the line.
    pub fn param_of(&self, p: Vec3) -> f64 {
        (p - self.origin).dot(self.direction)
    }

    /// Distance from `p` to the (infinite) supporting line.
    pub fn distance_to_line(&self, p: Vec3) -> f64 {
        let t = self.param_of(p);
        (self.at(t) - p).norm()
    }

    pub fn project_point(&self, p: Vec3) -> Vec3 {
        self.at(self.param_of(p))
    }
}
