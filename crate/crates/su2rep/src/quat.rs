//! Quaternion arithmetic for SU(2) realized as the unit sphere in ℝ⁴.
//! Inverses are taken as conjugates, which agrees with the group inverse
//! only on the unit sphere; this keeps every word polynomial in the
//! coordinates and lets norm defects enter as explicit equations.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub const ONE: Quat = Quat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };
pub const I: Quat = Quat { w: 0.0, x: 1.0, y: 0.0, z: 0.0 };
pub const J: Quat = Quat { w: 0.0, x: 0.0, y: 1.0, z: 0.0 };
pub const K: Quat = Quat { w: 0.0, x: 0.0, y: 0.0, z: 1.0 };
/// Standard basis of the quaternions as a real four-space.
pub const BASIS: [Quat; 4] = [ONE, I, J, K];

impl Quat {
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quat { w, x, y, z }
    }

    /// Pure-imaginary quaternion with the given vector part.
    pub fn pure(v: [f64; 3]) -> Self {
        Quat { w: 0.0, x: v[0], y: v[1], z: v[2] }
    }

    pub fn mul(self, o: Quat) -> Quat {
        Quat {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    pub fn conj(self) -> Quat {
        Quat { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn add(self, o: Quat) -> Quat {
        Quat { w: self.w + o.w, x: self.x + o.x, y: self.y + o.y, z: self.z + o.z }
    }

    pub fn scale(self, k: f64) -> Quat {
        Quat { w: k * self.w, x: k * self.x, y: k * self.y, z: k * self.z }
    }

    pub fn norm_sq(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalize(self) -> Quat {
        self.scale(1.0 / self.norm())
    }

    pub fn im(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn im_norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Trace of the corresponding SU(2) matrix.
    pub fn trace(self) -> f64 {
        2.0 * self.w
    }

    pub fn dist(self, o: Quat) -> f64 {
        ((self.w - o.w).powi(2)
            + (self.x - o.x).powi(2)
            + (self.y - o.y).powi(2)
            + (self.z - o.z).powi(2))
        .sqrt()
    }

    /// Exponential of the pure-imaginary quaternion with vector part `v`.
    pub fn exp(v: [f64; 3]) -> Quat {
        let t = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let s = if t < 1e-12 { 1.0 - t * t / 6.0 } else { t.sin() / t };
        Quat { w: t.cos(), x: s * v[0], y: s * v[1], z: s * v[2] }
    }

    /// Unit quaternion rotating by `angle` around the (nonzero) axis.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Quat {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let h = angle / 2.0;
        let s = h.sin() / n;
        Quat { w: h.cos(), x: s * axis[0], y: s * axis[1], z: s * axis[2] }
    }

    /// Adjoint action on the imaginary part: `v -> Im(q ṽ q̄)` for unit `q`.
    pub fn ad(self) -> Matrix3<f64> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix3::new(
            w * w + x * x - y * y - z * z,
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            w * w - x * x + y * y - z * z,
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            w * w - x * x - y * y + z * z,
        )
    }

    /// Integer power on the unit sphere; negative exponents conjugate.
    pub fn powi(self, e: i64) -> Quat {
        let base = if e < 0 { self.conj() } else { self };
        let mut acc = ONE;
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(base);
        }
        acc
    }
}
