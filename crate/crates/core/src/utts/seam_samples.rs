//! Paired texture-space samples on both sides of UV seams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::mesh::SeamEdgeList;
use crate::real::Real;

use super::mapping::UttsPoint;

/// UV offset from the seam into each chart.
pub const DEFAULT_SEAM_EPSILON: f64 = 0.01;
/// Height interval for seam samples, in normalized-height units around the
/// surface (`d̂ = 0.5 + h`).
pub const DEFAULT_SEAM_HEIGHT_RANGE: (f64, f64) = (-0.05, 0.05);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeamSamplePair<T> {
    pub seam: usize,
    pub alpha: T,
    pub h: T,
    pub a: UttsPoint<T>,
    pub b: UttsPoint<T>,
}

/// Draws `count` pairs. Each pair picks a seam edge, a shared position
/// `α ∈ [0, 1]` along it and a shared height `h`, then steps `ε` into each
/// chart along that side's inward UV normal:
/// `x̄ = p_start + α r + ε n + h`.
pub fn seam_sample_pairs<T: Real>(
    seams: &SeamEdgeList<T>,
    count: usize,
    epsilon: T,
    h_range: (T, T),
    d_max: T,
    seed: u64,
) -> Result<Vec<SeamSamplePair<T>>> {
    if seams.is_empty() {
        return Err(Error::Empty("seam edge list"));
    }
    if epsilon < T::zero() {
        return Err(Error::InvalidArgument("seam offset must be non-negative".into()));
    }
    let (lo, hi) = h_range;
    if !(lo <= hi) || lo < -T::half() || hi > T::half() {
        return Err(Error::InvalidArgument(format!("seam height range [{lo}, {hi}] outside [-0.5, 0.5]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clamp = |u: Vec2<T>| Vec2::new(u.x.max(T::zero()).min(T::one()), u.y.max(T::zero()).min(T::one()));
    Ok((0..count)
        .map(|_| {
            let j = rng.gen_range(0..seams.len());
            let alpha = T::lit(rng.gen::<f64>());
            let h = if lo == hi { lo } else { lo + (hi - lo) * T::lit(rng.gen::<f64>()) };
            let s = &seams[j];
            let d_hat = T::half() + h;
            let ua = clamp(s.start_a + s.dir_a * alpha + s.normal_a * epsilon);
            let ub = clamp(s.start_b + s.dir_b * alpha + s.normal_b * epsilon);
            SeamSamplePair {
                seam: j,
                alpha,
                h,
                a: UttsPoint::from_normalized(ua, d_hat, d_max),
                b: UttsPoint::from_normalized(ub, d_hat, d_max),
            }
        })
        .collect())
}
