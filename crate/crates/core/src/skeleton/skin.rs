use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::mesh::WeightRow;
use crate::real::Real;

use super::dualquat::{DualQuat, Quat};

/// Blended real parts shorter than this are treated as antipodal cancellation.
pub const MIN_BLEND_NORM: f64 = 1e-12;

/// Dual-quaternion linear blend of the transforms in `row`, normalized.
///
/// Every contribution is sign-aligned with the highest-weight joint so that
/// `q` and `-q` (the same rigid motion) blend identically.
pub fn blend<T: Real>(row: &WeightRow<T>, dqs: &[DualQuat<T>]) -> Option<DualQuat<T>> {
    let pivot = row
        .iter()
        .fold(None::<(usize, T)>, |best, &(j, w)| match best {
            Some((_, bw)) if bw >= w => best,
            _ => Some((j, w)),
        })?
        .0;
    let pivot_real = dqs[pivot].real;
    let mut real = Quat::zero();
    let mut dual = Quat::zero();
    for &(j, w) in row {
        let q = dqs[j];
        let s = if q.real.dot(pivot_real) < T::zero() { -w } else { w };
        real = real + q.real * s;
        dual = dual + q.dual * s;
    }
    let n = real.norm();
    if !(n >= T::lit(MIN_BLEND_NORM)) {
        return None;
    }
    let inv = T::one() / n;
    Some(DualQuat { real: real * inv, dual: dual * inv })
}

/// Applies a blended (unit-real) dual quaternion to a point.
#[inline]
pub fn apply_blended<T: Real>(q: &DualQuat<T>, p: Vec3<T>) -> Vec3<T> {
    let (w, r) = (q.real.w, q.real.vector());
    let (dw, d) = (q.dual.w, q.dual.vector());
    let two = T::two();
    p + r.cross(r.cross(p) + p * w) * two + (d * w - r * dw + r.cross(d)) * two
}

/// Dual-quaternion skinning of `rest` with per-vertex joint weights.
pub fn dq_skin<T: Real>(rest: &[Vec3<T>], weights: &[WeightRow<T>], dqs: &[DualQuat<T>]) -> Result<Vec<Vec3<T>>> {
    if weights.len() != rest.len() {
        return Err(Error::dim("skin weight rows", rest.len(), weights.len()));
    }
    if let Some((v, _)) = weights
        .iter()
        .enumerate()
        .find(|(_, row)| row.iter().any(|&(j, _)| j >= dqs.len()))
    {
        return Err(Error::InvalidArgument(format!(
            "vertex {v} references a joint outside 0..{}",
            dqs.len()
        )));
    }
    rest.par_iter()
        .zip(weights.par_iter())
        .enumerate()
        .map(|(v, (&p, row))| match blend(row, dqs) {
            Some(q) => Ok(apply_blended(&q, p)),
            None => Err(Error::AntipodalBlend { vertex: v }),
        })
        .collect()
}
