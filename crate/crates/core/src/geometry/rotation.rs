use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{Error, Result};

/// Tolerance used by the checked constructors.
const ORTHONORMAL_TOL: f64 = 1e-6;

/// An element of SO(3), stored row-major.
///
/// Construction through [`Rotation3::from_rows`] / [`Rotation3::from_columns`]
/// rejects matrices whose `‖RᵀR − I‖_F` exceeds `1e-6` or whose determinant is
/// not close to `+1`. Serialized as a nested `[[f64; 3]; 3]` (rows).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct Rotation3 {
    m: [[f64; 3]; 3],
}

impl Rotation3 {
    pub const IDENTITY: Rotation3 = Rotation3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn from_rows(m: [[f64; 3]; 3]) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("rotation"));
        }
        let r = Rotation3 { m };
        let orthonormality = r.orthonormality_error();
        let det = r.determinant();
        if orthonormality > ORTHONORMAL_TOL || (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::NotARotation { orthonormality, det });
        }
        Ok(r)
    }

    pub fn from_columns(x: Vec3, y: Vec3, z: Vec3) -> Result<Self> {
        Self::from_rows([[x.x, y.x, z.x], [x.y, y.y, z.y], [x.z, y.z, z.z]])
    }

    /// Rotation of `angle` radians about `axis` (Rodrigues). The axis need
    /// not be unit length but must be non-zero.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self> {
        let a = axis
            .normalized()
            .ok_or_else(|| Error::DegenerateInput("zero rotation axis".into()))?;
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Ok(Rotation3 {
            m: [
                [t * a.x * a.x + c, t * a.x * a.y - s * a.z, t * a.x * a.z + s * a.y],
                [t * a.x * a.y + s * a.z, t * a.y * a.y + c, t * a.y * a.z - s * a.x],
                [t * a.x * a.z - s * a.y, t * a.y * a.z + s * a.x, t * a.z * a.z + c],
            ],
        })
    }

    /// Rotation from a quaternion `(w, x, y, z)` that is already unit length.
    pub fn from_unit_quaternion(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_rows([
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ])
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        self.m
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::from(self.m[i])
    }

    pub fn column(&self, j: usize) -> Vec3 {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn transpose(&self) -> Rotation3 {
        let m = &self.m;
        Rotation3 {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn determinant(&self) -> f64 {
        self.row(0).dot(self.row(1).cross(self.row(2)))
    }

    /// `‖RᵀR − I‖_F`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let g = self.column(i).dot(self.column(j)) - if i == j { 1.0 } else { 0.0 };
                acc += g * g;
            }
        }
        acc.sqrt()
    }

    /// Relative rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        ((self.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }
}

impl Mul for Rotation3 {
    type Output = Rotation3;
    fn mul(self, o: Rotation3) -> Rotation3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.row(i).dot(o.column(j));
            }
        }
        Rotation3 { m }
    }
}

impl Mul<Vec3> for Rotation3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        self.mul_vec(v)
    }
}

impl TryFrom<[[f64; 3]; 3]> for Rotation3 {
    type Error = Error;
    fn try_from(m: [[f64; 3]; 3]) -> Result<Self> {
        Rotation3::from_rows(m)
    }
}

impl From<Rotation3> for [[f64; 3]; 3] {
    fn from(r: Rotation3) -> Self {
        r.m
    }
}
