//! Hand keypoint schema, canonical gesture frame and gesture similarity.
//!
//! A hand is 21 joints in the usual skeleton order (wrist, then four joints
//! per finger from thumb to pinky). Canonicalization pins the wrist at the
//! origin, aligns the wrist→index-MCP direction with +x, puts the pinky MCP in
//! the xy-plane on the +y side, and divides by the wrist→index-MCP length.
//! Two gestures that differ only by a similarity transform then compare equal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub const NUM_JOINTS: usize = 21;

/// Named indices into the 21-joint layout.
pub mod landmarks {
    pub const WRIST: usize = 0;
    pub const THUMB_CMC: usize = 1;
    pub const THUMB_MCP: usize = 2;
    pub const THUMB_IP: usize = 3;
    pub const THUMB_TIP: usize = 4;
    pub const INDEX_MCP: usize = 5;
    pub const INDEX_PIP: usize = 6;
    pub const INDEX_DIP: usize = 7;
    pub const INDEX_TIP: usize = 8;
    pub const MIDDLE_MCP: usize = 9;
    pub const MIDDLE_PIP: usize = 10;
    pub const MIDDLE_DIP: usize = 11;
    pub const MIDDLE_TIP: usize = 12;
    pub const RING_MCP: usize = 13;
    pub const RING_PIP: usize = 14;
    pub const RING_DIP: usize = 15;
    pub const RING_TIP: usize = 16;
    pub const PINKY_MCP: usize = 17;
    pub const PINKY_PIP: usize = 18;
    pub const PINKY_DIP: usize = 19;
    pub const PINKY_TIP: usize = 20;

    /// Index finger, proximal to distal.
    pub const INDEX_FINGER: [usize; 4] = [INDEX_MCP, INDEX_PIP, INDEX_DIP, INDEX_TIP];
}

use landmarks::{INDEX_MCP, PINKY_MCP, WRIST};

/// Additive regularizer in both axis normalizations of the canonical frame.
pub const NORMALIZE_EPS: f64 = 1e-8;
/// Minimum cross-product norm of the reference landmarks.
pub const MIN_REFERENCE_CROSS: f64 = 1e-8;
/// Minimum wrist→index-MCP length, meters.
pub const MIN_INDEX_LENGTH: f64 = 1e-3;
/// Sanity bound on the extent of a metric hand, meters.
pub const MAX_HAND_SPAN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Chirality {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
}

impl std::fmt::Display for Chirality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Chirality::Left => "L",
            Chirality::Right => "R",
        })
    }
}

impl std::str::FromStr for Chirality {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" | "l" | "left" | "Left" => Ok(Chirality::Left),
            "R" | "r" | "right" | "Right" => Ok(Chirality::Right),
            other => Err(Error::parse("chirality", format!("unknown tag {other:?}"))),
        }
    }
}

/// A raw 21-joint observation in the camera frame.
///
/// Only finiteness is enforced on construction. The metric plausibility bound
/// ([`HandKeypoints::span`] below [`MAX_HAND_SPAN`]) is checked where hands
/// enter the memory bank, since scaled synthetic hands legitimately exceed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHand", into = "RawHand")]
pub struct HandKeypoints {
    joints: [Vec3; NUM_JOINTS],
    chirality: Chirality,
}

#[derive(Serialize, Deserialize)]
struct RawHand {
    chirality: Chirality,
    joints: Vec<Vec3>,
}

impl TryFrom<RawHand> for HandKeypoints {
    type Error = Error;
    fn try_from(r: RawHand) -> Result<Self> {
        HandKeypoints::from_slice(&r.joints, r.chirality)
    }
}

impl From<HandKeypoints> for RawHand {
    fn from(h: HandKeypoints) -> Self {
        RawHand {
            chirality: h.chirality,
            joints: h.joints.to_vec(),
        }
    }
}

impl HandKeypoints {
    pub fn new(joints: [Vec3; NUM_JOINTS], chirality: Chirality) -> Result<Self> {
        if joints.iter().any(|j| !j.is_finite()) {
            return Err(Error::NonFinite("hand joints"));
        }
        Ok(HandKeypoints { joints, chirality })
    }

    pub fn from_slice(joints: &[Vec3], chirality: Chirality) -> Result<Self> {
        let arr: [Vec3; NUM_JOINTS] = joints.try_into().map_err(|_| Error::DimensionMismatch {
            expected: NUM_JOINTS,
            got: joints.len(),
        })?;
        Self::new(arr, chirality)
    }

    pub fn joints(&self) -> &[Vec3; NUM_JOINTS] {
        &self.joints
    }

    pub fn joint(&self, idx: usize) -> Vec3 {
        self.joints[idx]
    }

    pub fn chirality(&self) -> Chirality {
        self.chirality
    }

    /// Largest pairwise joint distance.
    pub fn span(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.joints.iter().enumerate() {
            for b in &self.joints[i + 1..] {
                best = best.max(a.distance(*b));
            }
        }
        best
    }

    /// Applies `f` to every joint.
    pub fn map_joints(&self, mut f: impl FnMut(Vec3) -> Vec3) -> Result<Self> {
        let mut joints = self.joints;
        for j in &mut joints {
            *j = f(*j);
        }
        Self::new(joints, self.chirality)
    }
}

/// A hand expressed in the canonical frame; dimensionless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalGesture {
    pub joints: [Vec3; NUM_JOINTS],
    pub chirality: Chirality,
}

impl CanonicalGesture {
    /// Row-major 63-vector (xyz per joint).
    pub fn flatten(&self) -> [f64; 3 * NUM_JOINTS] {
        let mut out = [0.0; 3 * NUM_JOINTS];
        for (i, j) in self.joints.iter().enumerate() {
            out[3 * i] = j.x;
            out[3 * i + 1] = j.y;
            out[3 * i + 2] = j.z;
        }
        out
    }

    /// Reinterprets the canonical joints as a (dimensionless) observation.
    pub fn to_keypoints(&self) -> HandKeypoints {
        HandKeypoints {
            joints: self.joints,
            chirality: self.chirality,
        }
    }

    /// Largest per-coordinate difference to `other`.
    pub fn max_abs_diff(&self, other: &CanonicalGesture) -> f64 {
        self.flatten()
            .iter()
            .zip(other.flatten().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Maps a hand into the canonical frame.
pub fn canonicalize(g: &HandKeypoints) -> Result<CanonicalGesture> {
    let wrist = g.joint(WRIST);
    let lx = g.joint(INDEX_MCP) - wrist;
    let to_pinky = g.joint(PINKY_MCP) - wrist;
    let lx_norm = lx.norm();
    if lx_norm < MIN_INDEX_LENGTH {
        return Err(Error::DegenerateHand(format!(
            "wrist to index-MCP distance {lx_norm:.3e} m is below {MIN_INDEX_LENGTH} m"
        )));
    }
    let vz = lx.cross(to_pinky);
    let vz_norm = vz.norm();
    if vz_norm <= MIN_REFERENCE_CROSS {
        return Err(Error::DegenerateHand(
            "wrist, index MCP and pinky MCP are collinear".into(),
        ));
    }
    let z = vz / (vz_norm + NORMALIZE_EPS);
    let x = lx / (lx_norm + NORMALIZE_EPS);
    let y = z.cross(x);

    let mut joints = [Vec3::ZERO; NUM_JOINTS];
    for (out, j) in joints.iter_mut().zip(g.joints.iter()) {
        let p = *j - wrist;
        *out = Vec3::new(x.dot(p), y.dot(p), z.dot(p)) / lx_norm;
    }
    Ok(CanonicalGesture {
        joints,
        chirality: g.chirality,
    })
}

/// Cosine similarity of two equal-length vectors, clamped to `[-1, 1]`.
///
/// Bit-identical inputs give exactly `1.0`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na.sqrt() < 1e-12 || nb.sqrt() < 1e-12 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (na * nb).sqrt()).clamp(-1.0, 1.0))
}

/// Cosine of the flattened canonical joints. Chirality is not checked here;
/// retrieval filters by it.
pub fn gesture_similarity(a: &CanonicalGesture, b: &CanonicalGesture) -> Result<f64> {
    cosine(&a.flatten(), &b.flatten())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::HAND_TEMPLATE;

    fn hand(joints: [Vec3; NUM_JOINTS]) -> HandKeypoints {
        HandKeypoints::new(joints, Chirality::Right).unwrap()
    }

    #[test]
    fn canonical_hand_is_fixed_point() {
        let g = hand(HAND_TEMPLATE);
        let c = canonicalize(&g).unwrap();
        for (a, b) in c.joints.iter().zip(HAND_TEMPLATE.iter()) {
            assert!((*a - *b).norm() < 1e-6);
        }
    }

    #[test]
    fn hand_computed_frame() {
        let mut joints = [Vec3::new(0.03, -0.01, 0.02); NUM_JOINTS];
        joints[WRIST] = Vec3::ZERO;
        joints[INDEX_MCP] = Vec3::new(0.0, 0.1, 0.0);
        joints[PINKY_MCP] = Vec3::new(0.05, 0.02, 0.0);
        let c = canonicalize(&hand(joints)).unwrap();
        assert!((c.joints[INDEX_MCP] - Vec3::X).norm() < 1e-6);
        // x̄ = +y, v_z = (0,0.1,0)×(0.05,0.02,0) = (0,0,-0.005) → z̄ = -z, ȳ = z̄×x̄ = +x
        // pinky (0.05, 0.02, 0) → (0.02, 0.05, 0) / 0.1; the 1e-8 regularizer
        // on ‖v_z‖ = 0.005 costs about 2e-6 relative
        let p = c.joints[PINKY_MCP];
        assert!((p - Vec3::new(0.2, 0.5, 0.0)).norm() < 1e-5, "{p:?}");
        assert_eq!(c.joints[WRIST], Vec3::ZERO);
    }

    #[test]
    fn collinear_references_rejected() {
        let mut joints = HAND_TEMPLATE;
        joints[PINKY_MCP] = Vec3::new(2.0, 0.0, 0.0);
        assert!(matches!(canonicalize(&hand(joints)), Err(Error::DegenerateHand(_))));
        let mut joints = HAND_TEMPLATE;
        joints[INDEX_MCP] = Vec3::new(1e-4, 0.0, 0.0);
        assert!(matches!(canonicalize(&hand(joints)), Err(Error::DegenerateHand(_))));
    }

    #[test]
    fn similarity_examples() {
        let c = canonicalize(&hand(HAND_TEMPLATE)).unwrap();
        assert_eq!(gesture_similarity(&c, &c).unwrap(), 1.0);

        let mut a = [0.0; 63];
        let mut b = [0.0; 63];
        a[0] = 1.0;
        a[5] = 2.0;
        b[1] = -3.0;
        b[62] = 0.5;
        assert!(cosine(&a, &b).unwrap().abs() < 1e-12);
        assert!(matches!(cosine(&a, &[0.0; 63]), Err(Error::ZeroVector)));
    }

    #[test]
    fn wrong_joint_count() {
        let err = HandKeypoints::from_slice(&[Vec3::ZERO; 20], Chirality::Left).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 21, got: 20 }));
    }

    #[test]
    fn json_shape() {
        let g = hand(HAND_TEMPLATE);
        let v: serde_json::Value = serde_json::to_value(&g).unwrap();
        assert_eq!(v["chirality"], "R");
        assert_eq!(v["joints"].as_array().unwrap().len(), 21);
        let back: HandKeypoints = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);
    }
}
