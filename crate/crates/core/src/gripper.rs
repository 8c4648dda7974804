//! Grasp-gesture → gripper orientation.
//!
//! The gripper frame comes from three landmarks: thumb MCP, index MCP and
//! index tip. `x` runs from the thumb MCP to the index MCP (the closing
//! direction between the fingers), `z` is the normal of the plane through the
//! three points, and `y = z × x`. The returned matrix has columns `x, y, z`.
//!
//! The normal's sign follows the cross product
//! `(k_inp − k_thu) × (k_inf − k_thu)` for both hands. Mirrored (left) hands
//! therefore get a `z` on the opposite side of the palm; callers that care
//! can negate `y` and `z` together and remain in SO(3).

use crate::error::{Error, Result};
use crate::geometry::{Rotation3, Vec3};
use crate::gesture::{landmarks, HandKeypoints};

const MIN_CROSS: f64 = 1e-10;

pub fn hand_to_gripper_rotation(g: &HandKeypoints) -> Result<Rotation3> {
    rotation_from_landmarks(
        g.joint(landmarks::THUMB_MCP),
        g.joint(landmarks::INDEX_MCP),
        g.joint(landmarks::INDEX_TIP),
    )
}

/// Same construction from explicit thumb-MCP, index-MCP and index-tip points.
pub fn rotation_from_landmarks(thumb: Vec3, index_mcp: Vec3, index_tip: Vec3) -> Result<Rotation3> {
    let a = index_mcp - thumb;
    let b = index_tip - thumb;
    let n = a.cross(b);
    if n.norm() <= MIN_CROSS {
        return Err(Error::DegenerateTriangle);
    }
    let x = a.normalized().ok_or(Error::DegenerateTriangle)?;
    let z = n.normalized().ok_or(Error::DegenerateTriangle)?;
    let y = z.cross(x);
    Rotation3::from_columns(x, y, z)
}
