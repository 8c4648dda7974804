//! Grasp poses, candidate scoring and the generator-free fallback grasp.
//!
//! Candidates from an external grasp generator are scored as
//!
//! ```text
//! effective_i = a_i · s_i − λ ‖I − R_hᵀ R_i‖_F
//! ```
//!
//! where `a_i` is a Gaussian weight on the distance between the projected
//! grasp center and the transferred contact (or 1 when attention is off).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{backproject, project, CameraIntrinsics, PixelPoint, Rotation3, Vec3};
use crate::pointing::DepthScene;

/// Gripper command; `Open` is the pre-grasp state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum GripperWidth {
    Closed = 0,
    Open = 1,
}

impl From<GripperWidth> for u8 {
    fn from(w: GripperWidth) -> u8 {
        w as u8
    }
}

impl TryFrom<u8> for GripperWidth {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(GripperWidth::Closed),
            1 => Ok(GripperWidth::Open),
            _ => Err(format!("gripper width must be 0 or 1, got {v}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspPose {
    pub t: Vec3,
    pub r: Rotation3,
    pub w: GripperWidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspCandidate {
    pub pose: GraspPose,
    pub score: f64,
}

impl GraspCandidate {
    pub fn new(pose: GraspPose, score: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::ScoreOutOfRange(score));
        }
        Ok(GraspCandidate { pose, score })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionMode {
    Off,
    Weight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    pub lambda: f64,
    /// Gaussian attention width, pixels.
    pub sigma: f64,
    pub attention: AttentionMode,
}

impl Default for SelectionParams {
    fn default() -> Self {
        SelectionParams {
            lambda: 0.1,
            sigma: 30.0,
            attention: AttentionMode::Weight,
        }
    }
}

impl SelectionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParams(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParams(format!("sigma must be > 0, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// `‖I − R_hᵀ R_i‖_F`, equal to `2√2 |sin(θ/2)|` for relative angle `θ`.
pub fn frobenius_deviation(r_h: &Rotation3, r_i: &Rotation3) -> f64 {
    let m = r_h.transpose() * *r_i;
    let rows = m.rows();
    let mut acc = 0.0;
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let d = if i == j { 1.0 - v } else { -v };
            acc += d * d;
        }
    }
    acc.sqrt()
}

pub fn gaussian_attention_weight(
    candidate: &GraspCandidate,
    contact: PixelPoint,
    k: &CameraIntrinsics,
    sigma: f64,
) -> Result<f64> {
    let p = project(candidate.pose.t, k)?;
    let d2 = (p.u - contact.u).powi(2) + (p.v - contact.v).powi(2);
    Ok((-d2 / (2.0 * sigma * sigma)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub score: f64,
    pub attention: f64,
    pub deviation: f64,
    pub effective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub index: usize,
    pub candidate: GraspCandidate,
    pub breakdown: Vec<ScoreBreakdown>,
}

/// Arg-max of the effective score; ties keep the lowest index.
pub fn select_grasp(
    candidates: &[GraspCandidate],
    r_h: &Rotation3,
    contact: PixelPoint,
    k: &CameraIntrinsics,
    params: &SelectionParams,
) -> Result<Selection> {
    params.validate()?;
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let breakdown = candidates
        .iter()
        .map(|c| {
            let attention = match params.attention {
                AttentionMode::Off => 1.0,
                AttentionMode::Weight => gaussian_attention_weight(c, contact, k, params.sigma)?,
            };
            let deviation = frobenius_deviation(r_h, &c.pose.r);
            Ok(ScoreBreakdown {
                score: c.score,
                attention,
                deviation,
                effective: c.score * attention - params.lambda * deviation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut index = 0;
    for (i, b) in breakdown.iter().enumerate().skip(1) {
        if b.effective > breakdown[index].effective {
            index = i;
        }
    }
    Ok(Selection {
        index,
        candidate: candidates[index],
        breakdown,
    })
}

/// Search radius for valid depth around the contact, pixels.
pub const DIRECT_DEPTH_RADIUS: f64 = 5.0;

/// Grasp built from the contact point and hand rotation alone: the contact is
/// lifted to 3D with the observed depth and backed off along the gripper's
/// approach axis (third column of `r_h`) by `standoff` meters.
pub fn direct_grasp(
    contact: PixelPoint,
    scene: &DepthScene,
    r_h: &Rotation3,
    standoff: f64,
) -> Result<GraspPose> {
    let no_depth = || Error::NoValidDepth {
        u: contact.u,
        v: contact.v,
    };
    if !contact.inside(scene.width(), scene.height()) {
        return Err(no_depth());
    }
    let (_, _, depth) = scene
        .nearest_valid(contact, DIRECT_DEPTH_RADIUS)
        .ok_or_else(no_depth)?;
    let p = backproject(contact, depth, scene.intrinsics())?;
    Ok(GraspPose {
        t: p - r_h.column(2) * standoff,
        r: *r_h,
        w: GripperWidth::Open,
    })
}

/// One candidate per line:
/// `{"t":[x,y,z],"q":[w,x,y,z],"score":s}` with optional `"width":0|1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub t: [f64; 3],
    pub q: [f64; 4],
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<GripperWidth>,
}

pub const QUATERNION_TOL: f64 = 1e-3;

impl CandidateRecord {
    pub fn to_candidate(&self) -> Result<GraspCandidate> {
        let t = Vec3::from(self.t);
        if !t.is_finite() || self.q.iter().any(|v| !v.is_finite()) || !self.score.is_finite() {
            return Err(Error::NonFinite("grasp candidate"));
        }
        let n = self.q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (n - 1.0).abs() > QUATERNION_TOL {
            return Err(Error::NonUnitQuaternion(n));
        }
        let [w, x, y, z] = self.q.map(|v| v / n);
        let r = Rotation3::from_unit_quaternion(w, x, y, z)?;
        GraspCandidate::new(
            GraspPose {
                t,
                r,
                w: self.width.unwrap_or(GripperWidth::Open),
            },
            self.score,
        )
    }

    pub fn from_candidate(c: &GraspCandidate) -> Self {
        CandidateRecord {
            t: c.pose.t.to_array(),
            q: rotation_to_quaternion(&c.pose.r),
            score: c.score,
            width: Some(c.pose.w),
        }
    }
}

/// Unit quaternion `(w, x, y, z)` with `w ≥ 0`.
pub fn rotation_to_quaternion(r: &Rotation3) -> [f64; 4] {
    let m = r.rows();
    let tr = r.trace();
    let q = if tr > 0.0 {
        let s = (tr + 1.0).sqrt() * 2.0;
        [0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s]
    } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
        let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
        [(m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s]
    } else if m[1][1] > m[2][2] {
        let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
        [(m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s]
    } else {
        let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
        [(m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s]
    };
    if q[0] < 0.0 {
        q.map(|v| -v)
    } else {
        q
    }
}

pub fn parse_candidates(text: &str) -> Result<Vec<GraspCandidate>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: CandidateRecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(format!("candidate line {}", i + 1), e))?;
        out.push(rec.to_candidate()?);
    }
    Ok(out)
}

pub fn load_candidates(path: &Path) -> Result<Vec<GraspCandidate>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_candidates(&text)
}

pub fn write_candidates(path: &Path, candidates: &[GraspCandidate]) -> Result<()> {
    let mut text = String::new();
    for c in candidates {
        text.push_str(&serde_json::to_string(&CandidateRecord::from_candidate(c)).unwrap());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
