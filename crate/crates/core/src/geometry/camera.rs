use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{Error, Result};

/// Pinhole intrinsics without distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        let k = CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("intrinsics"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidIntrinsics("image size must be positive".into()));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(0.0..self.width as f64).contains(&self.cx)
            || !(0.0..self.height as f64).contains(&self.cy)
        {
            return Err(Error::InvalidIntrinsics(format!(
                "principal point ({}, {}) outside {}x{}",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Image diagonal in pixels.
    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }
}

/// Continuous pixel coordinates; integer values are pixel centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        PixelPoint { u, v }
    }

    pub fn distance(self, o: PixelPoint) -> f64 {
        (self.u - o.u).hypot(self.v - o.v)
    }

    /// True when the point falls on some pixel of a `width`×`height` image,
    /// i.e. `u ∈ [-0.5, width - 0.5)` and likewise for `v`.
    pub fn inside(self, width: u32, height: u32) -> bool {
        self.u >= -0.5
            && self.u < width as f64 - 0.5
            && self.v >= -0.5
            && self.v < height as f64 - 0.5
    }

    /// Index `(col, row)` of the pixel containing this point, if inside.
    pub fn nearest_pixel(self, width: u32, height: u32) -> Option<(u32, u32)> {
        if !self.inside(width, height) {
            return None;
        }
        let col = (self.u.round() as i64).clamp(0, width as i64 - 1);
        let row = (self.v.round() as i64).clamp(0, height as i64 - 1);
        Some((col as u32, row as u32))
    }
}

impl From<[f64; 2]> for PixelPoint {
    fn from(a: [f64; 2]) -> Self {
        PixelPoint::new(a[0], a[1])
    }
}

impl From<PixelPoint> for [f64; 2] {
    fn from(p: PixelPoint) -> Self {
        [p.u, p.v]
    }
}

pub fn project(point: Vec3, k: &CameraIntrinsics) -> Result<PixelPoint> {
    if !point.is_finite() {
        return Err(Error::NonFinite("projected point"));
    }
    if point.z <= 0.0 {
        return Err(Error::NonPositiveDepth(point.z));
    }
    Ok(PixelPoint::new(
        k.fx * point.x / point.z + k.cx,
        k.fy * point.y / point.z + k.cy,
    ))
}

pub fn backproject(pixel: PixelPoint, depth: f64, k: &CameraIntrinsics) -> Result<Vec3> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(Error::NonPositiveDepth(depth));
    }
    Ok(Vec3::new(
        (pixel.u - k.cx) * depth / k.fx,
        (pixel.v - k.cy) * depth / k.fy,
        depth,
    ))
}
