//! Target localization from a pointing gesture.
//!
//! Hand keypoints are snapped to the observed depth, a ray is fitted through
//! the index finger, and the first depth-map point within `epsilon` of that
//! ray beyond the hand becomes the target. A square crop around its
//! projection is the region handed to retrieval and transfer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    backproject, fit_line_ransac, project, CameraIntrinsics, PixelPoint, RansacParams, Ray, Vec3,
};
use crate::gesture::{landmarks, HandKeypoints, NUM_JOINTS};

/// Upper bound (exclusive) on a valid depth value, meters.
pub const MAX_DEPTH: f64 = 100.0;

/// Dense depth grid with its intrinsics. Cells with a non-positive or NaN
/// depth are invalid and never produce points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthScene {
    intrinsics: CameraIntrinsics,
    depth: Vec<f64>,
}

impl DepthScene {
    /// Row-major `depth` of `intrinsics.width × intrinsics.height` cells.
    pub fn new(intrinsics: CameraIntrinsics, depth: Vec<f64>) -> Result<Self> {
        intrinsics.validate()?;
        let expected = intrinsics.width as usize * intrinsics.height as usize;
        if depth.len() != expected {
            return Err(Error::InvalidScene(format!(
                "depth grid has {} cells, intrinsics imply {}x{} = {expected}",
                depth.len(),
                intrinsics.width,
                intrinsics.height
            )));
        }
        if let Some((i, d)) = depth
            .iter()
            .enumerate()
            .find(|(_, d)| d.is_infinite() || **d >= MAX_DEPTH)
        {
            return Err(Error::InvalidScene(format!(
                "cell {i} has depth {d}, valid depths lie in (0, {MAX_DEPTH}) m"
            )));
        }
        Ok(DepthScene { intrinsics, depth })
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.intrinsics
    }

    pub fn width(&self) -> u32 {
        self.intrinsics.width
    }

    pub fn height(&self) -> u32 {
        self.intrinsics.height
    }

    pub fn depth_grid(&self) -> &[f64] {
        &self.depth
    }

    /// Depth of cell `(col, row)` if it is in range and valid.
    pub fn depth_at(&self, col: u32, row: u32) -> Option<f64> {
        if col >= self.width() || row >= self.height() {
            return None;
        }
        let d = self.depth[row as usize * self.width() as usize + col as usize];
        (d > 0.0).then_some(d)
    }

    /// Closest valid cell to `pixel` whose center lies within `radius` pixels,
    /// ties resolved in row-major order.
    pub fn nearest_valid(&self, pixel: PixelPoint, radius: f64) -> Option<(u32, u32, f64)> {
        if !pixel.u.is_finite() || !pixel.v.is_finite() {
            return None;
        }
        let r = radius.ceil() as i64;
        let (cu, cv) = (pixel.u.round() as i64, pixel.v.round() as i64);
        let mut best: Option<(f64, u32, u32, f64)> = None;
        for row in (cv - r).max(0)..=(cv + r).min(self.height() as i64 - 1) {
            for col in (cu - r).max(0)..=(cu + r).min(self.width() as i64 - 1) {
                let dist = (col as f64 - pixel.u).hypot(row as f64 - pixel.v);
                if dist > radius {
                    continue;
                }
                let Some(d) = self.depth_at(col as u32, row as u32) else {
                    continue;
                };
                if best.map_or(true, |b| dist < b.0) {
                    best = Some((dist, col as u32, row as u32, d));
                }
            }
        }
        best.map(|(_, c, r, d)| (c, r, d))
    }

    /// Back-projected point of every valid cell in row-major order.
    pub fn points(&self) -> impl Iterator<Item = ((u32, u32), Vec3)> + '_ {
        let w = self.width();
        self.depth.iter().enumerate().filter_map(move |(i, &d)| {
            if !(d > 0.0) {
                return None;
            }
            let (col, row) = (i as u32 % w, i as u32 / w);
            let p = backproject(PixelPoint::new(col as f64, row as f64), d, &self.intrinsics)
                .expect("valid cell has positive depth");
            Some(((col, row), p))
        })
    }
}

/// Axis-aligned pixel rectangle, top-left inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropRect {
    pub u0: u32,
    pub v0: u32,
    pub w: u32,
    pub h: u32,
}

impl CropRect {
    pub fn full(width: u32, height: u32) -> Self {
        CropRect {
            u0: 0,
            v0: 0,
            w: width,
            h: height,
        }
    }

    /// Whether a continuous pixel coordinate falls on a pixel of the rect.
    pub fn contains(&self, p: PixelPoint) -> bool {
        p.u >= self.u0 as f64 - 0.5
            && p.u < (self.u0 + self.w) as f64 - 0.5
            && p.v >= self.v0 as f64 - 0.5
            && p.v < (self.v0 + self.h) as f64 - 0.5
    }
}

/// Square crop of side `size` around the rounded `center`, shifted (never
/// shrunk) to lie inside the image.
pub fn crop_region(center: PixelPoint, size: u32, width: u32, height: u32) -> Result<CropRect> {
    if size == 0 {
        return Err(Error::Config("crop size must be positive".into()));
    }
    if size > width.min(height) {
        return Err(Error::SizeExceedsImage {
            size,
            width,
            height,
        });
    }
    if !center.u.is_finite() || !center.v.is_finite() {
        return Err(Error::NonFinite("crop center"));
    }
    let half = (size / 2) as i64;
    let place = |c: f64, extent: u32| -> u32 {
        let start = c.round() as i64 - half;
        start.clamp(0, (extent - size) as i64) as u32
    };
    Ok(CropRect {
        u0: place(center.u, width),
        v0: place(center.v, height),
        w: size,
        h: size,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedHand {
    pub keypoints: HandKeypoints,
    /// `true` where the joint took its depth from the scene.
    pub refined: [bool; NUM_JOINTS],
}

/// Replaces each joint's depth by the scene depth at its projection.
///
/// The pixel position is kept and the joint is re-lifted along its viewing
/// ray. Joints that project outside the image, or that have no valid depth
/// within `search_radius` pixels, keep their raw value and are flagged.
pub fn refine_keypoints(
    raw: &HandKeypoints,
    scene: &DepthScene,
    search_radius: f64,
) -> Result<RefinedHand> {
    let k = scene.intrinsics();
    let mut joints = *raw.joints();
    let mut refined = [false; NUM_JOINTS];
    let mut any_in_frame = false;
    for (joint, flag) in joints.iter_mut().zip(refined.iter_mut()) {
        let px = project(*joint, k)?;
        if !px.inside(scene.width(), scene.height()) {
            continue;
        }
        any_in_frame = true;
        if let Some((_, _, d)) = scene.nearest_valid(px, search_radius) {
            *joint = backproject(px, d, k)?;
            *flag = true;
        }
    }
    if !any_in_frame {
        return Err(Error::AllOutOfFrame);
    }
    Ok(RefinedHand {
        keypoints: HandKeypoints::new(joints, raw.chirality())?,
        refined,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointingRay {
    /// Starts at the wrist projected onto the fitted finger line.
    pub ray: Ray,
    /// Inlier flags for index MCP, PIP, DIP and tip.
    pub inliers: [bool; 4],
    pub inlier_count: usize,
    /// Ray parameter of the farthest inlier finger point.
    pub tip_t: f64,
}

/// Minimum extent of the index finger points, meters.
pub const MIN_FINGER_EXTENT: f64 = 1e-3;

pub fn estimate_pointing_ray(hand: &HandKeypoints, params: &RansacParams) -> Result<PointingRay> {
    let finger: Vec<Vec3> = landmarks::INDEX_FINGER.iter().map(|&i| hand.joint(i)).collect();
    let extent = finger
        .iter()
        .enumerate()
        .flat_map(|(i, a)| finger[i + 1..].iter().map(move |b| a.distance(*b)))
        .fold(0.0, f64::max);
    if extent < MIN_FINGER_EXTENT {
        return Err(Error::DegenerateGesture(format!(
            "index finger keypoints span only {extent:.2e} m"
        )));
    }
    let fit = fit_line_ransac(&finger, params)?;
    let wrist = hand.joint(landmarks::WRIST);
    // orient away from the wrist towards the inlier centroid, so a corrupted
    // tip cannot flip the ray
    let mut direction = fit.ray.direction;
    if direction.dot(fit.ray.origin - wrist) < 0.0 {
        direction = -direction;
    }
    let ray = Ray::new(Ray::new(fit.ray.origin, direction)?.project_point(wrist), direction)?;
    let mut inliers = [false; 4];
    inliers.copy_from_slice(&fit.inliers);
    let tip_t = finger
        .iter()
        .zip(inliers)
        .filter(|(_, inl)| *inl)
        .map(|(p, _)| ray.param_of(*p))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(PointingRay {
        tip_t,
        ray,
        inliers,
        inlier_count: fit.inlier_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayHit {
    pub point: Vec3,
    pub pixel: PixelPoint,
    /// Source depth cell `(col, row)`.
    pub cell: (u32, u32),
    pub t: f64,
}

/// First scene point within `epsilon` of the ray with ray parameter above
/// `min_t`.
///
/// Candidates are the back-projections of all valid cells; the one with the
/// smallest `t` wins and equal `t` keeps the earliest row-major cell.
pub fn intersect_ray_depth(
    ray: &Ray,
    scene: &DepthScene,
    epsilon: f64,
    min_t: f64,
) -> Result<RayHit> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut best: Option<((u32, u32), Vec3, f64)> = None;
    for (cell, p) in scene.points() {
        let t = ray.param_of(p);
        if !(t > min_t) {
            continue;
        }
        if (ray.at(t) - p).norm() >= epsilon {
            continue;
        }
        if best.map_or(true, |b| t < b.2) {
            best = Some((cell, p, t));
        }
    }
    let (cell, point, t) = best.ok_or(Error::NoIntersection)?;
    Ok(RayHit {
        point,
        pixel: project(point, scene.intrinsics())?,
        cell,
        t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointingParams {
    pub ransac: RansacParams,
    /// Ray–point distance bound, meters.
    pub epsilon: f64,
    /// Extra distance past the fingertip before hits count, meters.
    pub self_exclusion: f64,
    /// Nearest-valid-depth search radius for keypoint refinement, pixels.
    pub refine_radius: f64,
    pub crop_size: u32,
}

impl Default for PointingParams {
    fn default() -> Self {
        PointingParams {
            ransac: RansacParams::default(),
            epsilon: 0.01,
            self_exclusion: 0.05,
            refine_radius: 5.0,
            crop_size: 224,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointingResult {
    pub ray: Ray,
    pub target3d: Vec3,
    pub target2d: PixelPoint,
    pub crop: CropRect,
    pub inlier_count: usize,
    pub refined_joints: usize,
}

/// Full localization: refine, fit, intersect, crop.
///
/// The hand itself is excluded by only accepting hits beyond the fingertip
/// plus `self_exclusion`.
pub fn locate_target(
    pointing: &HandKeypoints,
    scene: &DepthScene,
    params: &PointingParams,
) -> Result<PointingResult> {
    let refined = refine_keypoints(pointing, scene, params.refine_radius)?;
    let pr = estimate_pointing_ray(&refined.keypoints, &params.ransac)?;
    let min_t = pr.tip_t.max(0.0) + params.self_exclusion;
    let hit = intersect_ray_depth(&pr.ray, scene, params.epsilon, min_t)?;
    let crop = crop_region(hit.pixel, params.crop_size, scene.width(), scene.height())?;
    Ok(PointingResult {
        ray: pr.ray,
        target3d: hit.point,
        target2d: hit.pixel,
        crop,
        inlier_count: pr.inlier_count,
        refined_joints: refined.refined.iter().filter(|&&r| r).count(),
    })
}
