use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{Aabb, Vec3};

use super::camera::Ray;
use super::raster::DepthMap;

/// Samples per foreground ray during optimization.
pub const TRAINING_SAMPLES: usize = 64;
/// Samples per foreground ray for interactive rendering.
pub const INTERACTIVE_SAMPLES: usize = 20;
/// Rays per optimization batch.
pub const RAY_BATCH: usize = 4096;

/// Ray samples stored ray after ray, so consecutive points are coherent.
#[derive(Clone, Debug, PartialEq)]
pub struct RaySampleBatch {
    pub rays: Vec<Ray>,
    pub pixels: Vec<(usize, usize)>,
    /// `t` of ray `r` is `t[offsets[r]..offsets[r + 1]]`.
    pub offsets: Vec<usize>,
    pub t: Vec<f64>,
}

impl RaySampleBatch {
    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }

    pub fn sample_count(&self) -> usize {
        self.t.len()
    }

    pub fn depths(&self, r: usize) -> &[f64] {
        &self.t[self.offsets[r]..self.offsets[r + 1]]
    }

    pub fn range(&self, r: usize) -> std::ops::Range<usize> {
        self.offsets[r]..self.offsets[r + 1]
    }

    pub fn is_foreground(&self, r: usize) -> bool {
        self.offsets[r + 1] > self.offsets[r]
    }

    /// All sample points, ray-major.
    pub fn points(&self) -> Vec<Vec3<f64>> {
        let mut out = Vec::with_capacity(self.t.len());
        for (r, ray) in self.rays.iter().enumerate() {
            out.extend(self.depths(r).iter().map(|&t| ray.at(t)));
        }
        out
    }

    fn from_intervals(
        rays: &[Ray],
        pixels: &[(usize, usize)],
        intervals: impl Iterator<Item = Option<(f64, f64)>>,
        n_samples: usize,
        jitter: Option<u64>,
    ) -> Self {
        let mut rng = jitter.map(ChaCha8Rng::seed_from_u64);
        let mut offsets = vec![0];
        let mut t = Vec::new();
        for iv in intervals {
            if let Some((lo, hi)) = iv {
                place(lo, hi, n_samples, rng.as_mut(), &mut t);
            }
            offsets.push(t.len());
        }
        Self { rays: rays.to_vec(), pixels: pixels.to_vec(), offsets, t }
    }
}

/// `n` depths in `[lo, hi]`: evenly spaced including both ends, or one per
/// stratum when jittered. A single sample sits at the midpoint.
fn place(lo: f64, hi: f64, n: usize, rng: Option<&mut ChaCha8Rng>, out: &mut Vec<f64>) {
    if n == 1 {
        out.push(0.5 * (lo + hi));
        return;
    }
    match rng {
        None => {
            let step = (hi - lo) / (n - 1) as f64;
            out.extend((0..n).map(|k| if k + 1 == n { hi } else { lo + step * k as f64 }));
        }
        Some(rng) => {
            let step = (hi - lo) / n as f64;
            out.extend((0..n).map(|k| lo + step * (k as f64 + rng.gen::<f64>())));
        }
    }
}

fn check_rays(rays: &[Ray], pixels: &[(usize, usize)], n_samples: usize) -> Result<()> {
    if rays.len() != pixels.len() {
        return Err(Error::dim("rays per pixel", pixels.len(), rays.len()));
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    Ok(())
}

/// Keeps only rays that hit the rasterized template and spreads `n_samples`
/// over `[t_hit − d_max, t_hit + d_max]` (clipped to `t > 0`).
pub fn filter_samples(
    rays: &[Ray],
    pixels: &[(usize, usize)],
    depth: &DepthMap,
    d_max: f64,
    n_samples: usize,
    jitter: Option<u64>,
) -> Result<RaySampleBatch> {
    check_rays(rays, pixels, n_samples)?;
    let intervals = pixels.iter().map(|&(i, j)| {
        let t_hit = depth.depth[j * depth.width + i];
        t_hit.is_finite().then(|| ((t_hit - d_max).max(f64::EPSILON * t_hit), t_hit + d_max))
    });
    Ok(RaySampleBatch::from_intervals(rays, pixels, intervals, n_samples, jitter))
}

/// Unfiltered sampling: the ray segment inside `bounds` grown by `d_max`.
pub fn bounded_samples(
    rays: &[Ray],
    pixels: &[(usize, usize)],
    bounds: &Aabb<f64>,
    d_max: f64,
    n_samples: usize,
    jitter: Option<u64>,
) -> Result<RaySampleBatch> {
    check_rays(rays, pixels, n_samples)?;
    let b = bounds.inflate(d_max);
    let intervals = rays.iter().map(|r| b.ray_interval(r.origin, r.dir).filter(|(lo, hi)| hi > lo));
    Ok(RaySampleBatch::from_intervals(rays, pixels, intervals, n_samples, jitter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives;
    use crate::render::camera::{all_pixels, generate_rays, Camera};
    use crate::render::raster::rasterize_depth;

    fn setup(n: usize) -> (Camera, Vec<(usize, usize)>, Vec<Ray>, DepthMap) {
        let m = primitives::icosphere::<f64>(0.5, 3);
        let c = Camera::look_at(Vec3::new(0.0, 0.0, -3.0), Vec3::zero(), -Vec3::unit_y(), 0.6, n, n);
        let px = all_pixels(&c);
        let rays = generate_rays(&c, &px).unwrap();
        let d = rasterize_depth(&m, m.vertices(), &c).unwrap();
        (c, px, rays, d)
    }

    #[test]
    fn background_rays_get_no_samples() {
        let (_, px, rays, d) = setup(24);
        let b = filter_samples(&rays, &px, &d, 0.05, TRAINING_SAMPLES, None).unwrap();
        assert!(!b.is_foreground(0));
        assert!(b.depths(0).is_empty());
        let fg = (0..b.len()).filter(|&r| b.is_foreground(r)).count();
        assert_eq!(fg, d.foreground_pixels().len());
        assert_eq!(b.sample_count(), fg * TRAINING_SAMPLES);
    }

    #[test]
    fn profiles() {
        assert_eq!(TRAINING_SAMPLES, 64);
        assert_eq!(INTERACTIVE_SAMPLES, 20);
    }

    #[test]
    fn band_is_centered_on_the_hit() {
        let (_, px, rays, d) = setup(24);
        for jitter in [None, Some(7)] {
            let b = filter_samples(&rays, &px, &d, 0.05, INTERACTIVE_SAMPLES, jitter).unwrap();
            for r in (0..b.len()).filter(|&r| b.is_foreground(r)) {
                let (i, j) = b.pixels[r];
                let hit = d.depth[j * 24 + i];
                let t = b.depths(r);
                assert_eq!(t.len(), INTERACTIVE_SAMPLES);
                assert!(t.windows(2).all(|w| w[1] > w[0]));
                assert!(t[0] >= hit - 0.05 && t[t.len() - 1] <= hit + 0.05);
                if jitter.is_none() {
                    assert!((t[0] - (hit - 0.05)).abs() < 1e-12 && (t[t.len() - 1] - (hit + 0.05)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn bounded_fallback_brackets_the_surface() {
        let (_, px, rays, d) = setup(16);
        let bounds = Aabb::from_points(&[Vec3::splat(-0.5), Vec3::splat(0.5)]);
        let b = bounded_samples(&rays, &px, &bounds, 0.05, 8, None).unwrap();
        for r in 0..b.len() {
            let (i, j) = b.pixels[r];
            let hit = d.depth[j * 16 + i];
            if hit.is_finite() {
                let t = b.depths(r);
                assert!(t[0] < hit && hit < t[t.len() - 1]);
            }
        }
    }

    #[test]
    fn mismatched_inputs() {
        let (_, px, rays, d) = setup(8);
        assert!(filter_samples(&rays[1..], &px, &d, 0.05, 4, None).is_err());
        assert!(filter_samples(&rays, &px, &d, 0.05, 0, None).is_err());
    }
}
