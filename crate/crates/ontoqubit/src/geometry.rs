//! Bloch-sphere primitives: unit vectors, spherical coordinates, rotations
//! and the Born probability used as the universal oracle by every other
//! module.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerance for geometric identities (orthogonality, round trips).
pub const GEOM_TOL: f64 = 1e-12;

/// Inputs within this distance of unit norm are renormalized; anything
/// further off is rejected. Keeps modeling error separate from float noise.
pub const NORM_SLACK: f64 = 1e-9;

/// Unit 3-vector representing a pure qubit state or a rank-1 projective event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    vx: f64,
    vy: f64,
    vz: f64,
}

impl BlochVector {
    /// Build a unit vector. Inputs within `NORM_SLACK` of unit norm are
    /// renormalized, anything further off is rejected.
    pub fn new(vx: f64, vy: f64, vz: f64) -> Result<Self> {
        let norm = (vx * vx + vy * vy + vz * vz).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_SLACK {
            return Err(Error::NonUnitVector { norm });
        }
        Ok(Self {
            vx: vx / norm,
            vy: vy / norm,
            vz: vz / norm,
        })
    }

    pub fn x_axis() -> Self {
        Self { vx: 1.0, vy: 0.0, vz: 0.0 }
    }

    pub fn y_axis() -> Self {
        Self { vx: 0.0, vy: 1.0, vz: 0.0 }
    }

    pub fn z_axis() -> Self {
        Self { vx: 0.0, vy: 0.0, vz: 1.0 }
    }

    pub fn vx(&self) -> f64 {
        self.vx
    }

    pub fn vy(&self) -> f64 {
        self.vy
    }

    pub fn vz(&self) -> f64 {
        self.vz
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.vx * other.vx + self.vy * other.vy + self.vz * other.vz
    }

    /// Angular distance to another unit vector, in radians. Computed
    /// from the cross product so tiny angles keep full precision.
    pub fn angle_to(&self, other: &Self) -> f64 {
        let cx = self.vy * other.vz - self.vz * other.vy;
        let cy = self.vz * other.vx - self.vx * other.vz;
        let cz = self.vx * other.vy - self.vy * other.vx;
        (cx * cx + cy * cy + cz * cz).sqrt().atan2(self.dot(other))
    }
}

impl std::ops::Neg for BlochVector {
    type Output = BlochVector;

    fn neg(self) -> BlochVector {
        BlochVector {
            vx: -self.vx,
            vy: -self.vy,
            vz: -self.vz,
        }
    }
}

/// Zenith/azimuth pair with `theta` in `[0, pi]` and `phi` in `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalAngles {
    theta: f64,
    phi: f64,
}

impl SphericalAngles {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::OutOfRange {
                name: "theta",
                value: theta,
                lo: 0.0,
                hi: std::f64::consts::PI,
            });
        }
        if !(0.0..std::f64::consts::TAU).contains(&phi) {
            return Err(Error::OutOfRange {
                name: "phi",
                value: phi,
                lo: 0.0,
                hi: std::f64::consts::TAU,
            });
        }
        // Pole convention: phi is canonically 0 at theta in {0, pi}.
        let phi = if theta == 0.0 || theta == std::f64::consts::PI {
            0.0
        } else {
            phi
        };
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Proper rotation (element of SO(3)), stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3 {
    m: [[f64; 3]; 3],
}

impl Rotation3 {
    /// Validate orthogonality and unit determinant before accepting a matrix.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        // R^T R = I within GEOM_TOL
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += m[k][i] * m[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                if (acc - expect).abs() > GEOM_TOL {
                    return Err(Error::Invalid(format!(
                        "matrix is not orthogonal: (R^T R)[{i}][{j}] = {acc}"
                    )));
                }
            }
        }
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        if (det - 1.0).abs() > GEOM_TOL {
            return Err(Error::Invalid(format!("det R = {det}, expected +1")));
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    /// Apply the rotation to a unit vector.
    pub fn apply(&self, v: &BlochVector) -> BlochVector {
        let (x, y, z) = (v.vx(), v.vy(), v.vz());
        let m = &self.m;
        BlochVector::new(
            m[0][0] * x + m[0][1] * y + m[0][2] * z,
            m[1][0] * x + m[1][1] * y + m[1][2] * z,
            m[2][0] * x + m[2][1] * y + m[2][2] * z,
        )
        .expect("rotation preserves unit norm")
    }

    /// Apply the inverse (transpose) rotation.
    pub fn apply_transpose(&self, v: &BlochVector) -> BlochVector {
        let (x, y, z) = (v.vx(), v.vy(), v.vz());
        let m = &self.m;
        BlochVector::new(
            m[0][0] * x + m[1][0] * y + m[2][0] * z,
            m[0][1] * x + m[1][1] * y + m[2][1] * z,
            m[0][2] * x + m[1][2] * y + m[2][2] * z,
        )
        .expect("rotation preserves unit norm")
    }
}

/// Born probability `(1 + w.v)/2` for event `w` given state `v`.
pub fn born_probability(w: &BlochVector, v: &BlochVector) -> f64 {
    0.5 * (1.0 + w.dot(v))
}

/// Zenith/azimuth angles of a unit vector. Poles map to `phi = 0`.
pub fn to_spherical(v: &BlochVector) -> SphericalAngles {
    // atan2 of (horizontal norm, vz) stays well-conditioned at the poles,
    // where acos(vz) loses about half the significant digits.
    let theta = v.vx().hypot(v.vy()).atan2(v.vz());
    let mut phi = v.vy().atan2(v.vx());
    if phi < 0.0 {
        phi += std::f64::consts::TAU;
    }
    if phi >= std::f64::consts::TAU {
        phi = 0.0;
    }
    if v.vx() == 0.0 && v.vy() == 0.0 {
        phi = 0.0;
    }
    SphericalAngles { theta, phi }
}

/// Unit vector `(sin t cos p, sin t sin p, cos t)` from spherical angles.
pub fn from_spherical(a: &SphericalAngles) -> BlochVector {
    let (st, ct) = a.theta.sin_cos();
    let (sp, cp) = a.phi.sin_cos();
    BlochVector::new(st * cp, st * sp, ct).expect("angles produce a unit vector")
}

/// Rotation carrying unit vector `a` onto unit vector `b`.
///
/// For antipodal inputs a fixed perpendicular axis is used, so the result
/// is deterministic.
pub fn rotation_taking(a: &BlochVector, b: &BlochVector) -> Rotation3 {
    let c = a.dot(b);
    // axis = a x b
    let kx = a.vy() * b.vz() - a.vz() * b.vy();
    let ky = a.vz() * b.vx() - a.vx() * b.vz();
    let kz = a.vx() * b.vy() - a.vy() * b.vx();
    let s = (kx * kx + ky * ky + kz * kz).sqrt();

    if s < 1e-14 {
        if c > 0.0 {
            return Rotation3::identity();
        }
        // a = -b: rotate by pi about a fixed axis perpendicular to a.
        let (px, py, pz) = if a.vx().abs() < 0.9 {
            (1.0, 0.0, 0.0)
        } else {
            (0.0, 1.0, 0.0)
        };
        // perpendicular component of the fixed axis
        let d = px * a.vx() + py * a.vy() + pz * a.vz();
        let (ux, uy, uz) = (px - d * a.vx(), py - d * a.vy(), pz - d * a.vz());
        let n = (ux * ux + uy * uy + uz * uz).sqrt();
        let (ux, uy, uz) = (ux / n, uy / n, uz / n);
        // R = 2 u u^T - I
        let m = [
            [2.0 * ux * ux - 1.0, 2.0 * ux * uy, 2.0 * ux * uz],
            [2.0 * uy * ux, 2.0 * uy * uy - 1.0, 2.0 * uy * uz],
            [2.0 * uz * ux, 2.0 * uz * uy, 2.0 * uz * uz - 1.0],
        ];
        return Rotation3::new(m).expect("reflection composition is a rotation");
    }

    let (ux, uy, uz) = (kx / s, ky / s, kz / s);
    axis_angle(ux, uy, uz, s.atan2(c))
}

/// Rodrigues rotation by `angle` about the unit axis `(ux, uy, uz)`.
pub fn axis_angle(ux: f64, uy: f64, uz: f64, angle: f64) -> Rotation3 {
    let (sn, cs) = angle.sin_cos();
    let t = 1.0 - cs;
    let m = [
        [
            cs + ux * ux * t,
            ux * uy * t - uz * sn,
            ux * uz * t + uy * sn,
        ],
        [
            uy * ux * t + uz * sn,
            cs + uy * uy * t,
            uy * uz * t - ux * sn,
        ],
        [
            uz * ux * t - uy * sn,
            uz * uy * t + ux * sn,
            cs + uz * uz * t,
        ],
    ];
    Rotation3::new(m).expect("axis-angle matrix is a rotation")
}
