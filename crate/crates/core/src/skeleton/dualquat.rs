//! Quaternions, unit dual quaternions and rigid transforms.

use std::ops::{Add, Mul, Neg};

use serde::{Deserialize, Serialize};

use crate::linalg::{Mat3, Vec3};
use crate::real::Real;

/// Quaternion `w + xi + yj + zk`, serialized as `[w, x, y, z]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 4]", into = "[T; 4]", bound(serialize = "T: Copy + Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Quat<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T> From<[T; 4]> for Quat<T> {
    fn from([w, x, y, z]: [T; 4]) -> Self {
        Self { w, x, y, z }
    }
}

impl<T> From<Quat<T>> for [T; 4] {
    fn from(q: Quat<T>) -> Self {
        [q.w, q.x, q.y, q.z]
    }
}

impl<T: Real> Quat<T> {
    pub fn new(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::zero())
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn pure(v: Vec3<T>) -> Self {
        Self::new(T::zero(), v.x, v.y, v.z)
    }

    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Self {
        let (s, c) = (angle * T::half()).sin_cos();
        let a = axis.normalize() * s;
        Self::new(c, a.x, a.y, a.z)
    }

    #[inline]
    pub fn vector(self) -> Vec3<T> {
        Vec3::new(self.x, self.y, self.z)
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn normalize(self) -> Self {
        self * (T::one() / self.norm())
    }

    /// Rotates `v` by this unit quaternion.
    pub fn rotate(self, v: Vec3<T>) -> Vec3<T> {
        let q = self.vector();
        let t = q.cross(v) * T::two();
        v + t * self.w + q.cross(t)
    }

    pub fn to_mat3(self) -> Mat3<T> {
        let Self { w, x, y, z } = self;
        let two = T::two();
        let o = T::one();
        Mat3 {
            rows: [
                [o - two * (y * y + z * z), two * (x * y - w * z), two * (x * z + w * y)],
                [two * (x * y + w * z), o - two * (x * x + z * z), two * (y * z - w * x)],
                [two * (x * z - w * y), two * (y * z + w * x), o - two * (x * x + y * y)],
            ],
        }
    }
}

impl<T: Real> Mul for Quat<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

impl<T: Real> Mul<T> for Quat<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Add for Quat<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Neg for Quat<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.w, -self.x, -self.y, -self.z)
    }
}

/// Unit dual quaternion `real + ε·dual` encoding a rigid transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Copy + Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct DualQuat<T> {
    pub real: Quat<T>,
    pub dual: Quat<T>,
}

impl<T: Real> DualQuat<T> {
    pub fn identity() -> Self {
        Self { real: Quat::identity(), dual: Quat::zero() }
    }

    /// Rotation followed by translation: `x ↦ r·x + t`.
    pub fn from_rotation_translation(r: Quat<T>, t: Vec3<T>) -> Self {
        Self { real: r, dual: Quat::pure(t) * r * T::half() }
    }

    pub fn from_translation(t: Vec3<T>) -> Self {
        Self::from_rotation_translation(Quat::identity(), t)
    }

    pub fn rotation(self) -> Quat<T> {
        self.real
    }

    pub fn translation(self) -> Vec3<T> {
        (self.dual * self.real.conj()).vector() * T::two()
    }

    /// Inverse of a unit dual quaternion.
    pub fn inverse(self) -> Self {
        Self { real: self.real.conj(), dual: self.dual.conj() }
    }

    pub fn transform_point(self, p: Vec3<T>) -> Vec3<T> {
        self.real.rotate(p) + self.translation()
    }

    /// Re-normalizes so `‖real‖ = 1` and `⟨real, dual⟩ = 0`.
    pub fn normalize(self) -> Self {
        let n = self.real.norm();
        let r = self.real * (T::one() / n);
        let d = self.dual * (T::one() / n);
        Self { real: r, dual: d + r * (-r.dot(d)) }
    }

    pub fn to_rigid(self) -> Rigid<T> {
        Rigid { rotation: self.real.to_mat3(), translation: self.translation() }
    }
}

impl<T: Real> Mul for DualQuat<T> {
    type Output = Self;
    /// Composition: `(a * b)(x) = a(b(x))`.
    fn mul(self, o: Self) -> Self {
        Self {
            real: self.real * o.real,
            dual: self.real * o.dual + self.dual * o.real,
        }
    }
}

/// Rigid transform `x ↦ R·x + t` in matrix form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rigid<T> {
    pub rotation: Mat3<T>,
    pub translation: Vec3<T>,
}

impl<T: Real> Rigid<T> {
    pub fn identity() -> Self {
        Self { rotation: Mat3::identity(), translation: Vec3::zero() }
    }

    pub fn apply(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation * p + self.translation
    }

    /// `self ∘ o`.
    pub fn compose(&self, o: &Self) -> Self {
        Self {
            rotation: self.rotation * o.rotation,
            translation: self.rotation * o.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt * self.translation) }
    }

    /// Row-major homogeneous 4×4 matrix.
    pub fn to_mat4(&self) -> [[T; 4]; 4] {
        let r = &self.rotation.rows;
        let t = self.translation;
        let (z, o) = (T::zero(), T::one());
        [
            [r[0][0], r[0][1], r[0][2], t.x],
            [r[1][0], r[1][1], r[1][2], t.y],
            [r[2][0], r[2][1], r[2][2], t.z],
            [z, z, z, o],
        ]
    }
}
