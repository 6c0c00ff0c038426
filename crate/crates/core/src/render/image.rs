use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SdfField;
use crate::linalg::Vec3;
use crate::mesh::TriangleMesh;
use crate::utts::{build_index, map_batch, MappingResult};

use super::camera::{generate_rays, Camera};
use super::raster::{rasterize_depth, DepthMap};
use super::samples::{filter_samples, RaySampleBatch};
use super::volume::{interval_alpha, volume_integrate, Integrated};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderSettings {
    /// Sharpness `z` of the logistic density.
    pub sharpness: f64,
    /// Half-width of the sampling band and of the texture-space shell (m).
    pub d_max: f64,
    pub samples_per_ray: usize,
    /// Seed for stratified jitter; `None` keeps samples evenly spaced.
    pub jitter: Option<u64>,
    /// Color of fields without an appearance decoder.
    pub flat_color: [f64; 3],
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            sharpness: 200.0,
            d_max: 0.04,
            samples_per_ray: super::samples::INTERACTIVE_SAMPLES,
            jitter: None,
            flat_color: [1.0; 3],
        }
    }
}

impl RenderSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.sharpness > 0.0 && self.sharpness.is_finite()) {
            return Err(Error::InvalidArgument(format!("sharpness must be positive, got {}", self.sharpness)));
        }
        if !(self.d_max > 0.0 && self.d_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("d_max must be positive, got {}", self.d_max)));
        }
        if self.samples_per_ray < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 samples per ray, got {}", self.samples_per_ray)));
        }
        Ok(())
    }
}

/// Posed template, the field to render and the viewpoint.
#[derive(Clone, Copy, Debug)]
pub struct Scene<'a> {
    pub mesh: &'a TriangleMesh<f64>,
    pub positions: &'a [Vec3<f64>],
    pub field: &'a SdfField,
    pub camera: &'a Camera,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub raster: Duration,
    pub filter: Duration,
    pub map: Duration,
    pub field: Duration,
    pub integrate: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.raster + self.filter + self.map + self.field + self.integrate
    }
}

#[derive(Clone, Debug)]
pub struct RenderOutput {
    pub width: usize,
    pub height: usize,
    /// Row-major, not composited over any background.
    pub color: Vec<[f64; 3]>,
    pub opacity: Vec<f64>,
    /// Expected ray depth; `+∞` where nothing was accumulated.
    pub depth: Vec<f64>,
    pub raster: DepthMap,
    pub samples: usize,
    pub out_of_range: usize,
    pub timings: StageTimings,
}

/// Depth-filtered volume rendering of an SDF field.
///
/// Samples beyond the field's texture-space shell contribute no opacity: the
/// interval between samples `i` and `i + 1` is transparent unless both are in
/// range. Interval colors are taken at the front sample and interval depths
/// at the midpoint.
pub fn render_image(scene: &Scene, settings: &RenderSettings) -> Result<RenderOutput> {
    settings.validate()?;
    let mut timings = StageTimings::default();
    let clock = Instant::now();
    let raster = rasterize_depth(scene.mesh, scene.positions, scene.camera)?;
    timings.raster = clock.elapsed();

    let clock = Instant::now();
    let pixels = raster.foreground_pixels();
    let rays = generate_rays(scene.camera, &pixels)?;
    let batch = filter_samples(&rays, &pixels, &raster, settings.d_max, settings.samples_per_ray, settings.jitter)?;
    let points = batch.points();
    timings.filter = clock.elapsed();

    let clock = Instant::now();
    let (index, shell) = match scene.field {
        SdfField::Decoded(d) => (d.index.clone(), d.d_max),
        _ => (Arc::new(build_index(scene.mesh, scene.positions)?), settings.d_max),
    };
    let maps = map_batch(&index, &points, shell);
    timings.map = clock.elapsed();

    let clock = Instant::now();
    let values = evaluate_samples(scene.field, &points, &maps)?;
    timings.field = clock.elapsed();

    let clock = Instant::now();
    let per_ray = integrate_rays(scene, settings, &batch, &points, &values)?;
    let (w, h) = (scene.camera.width, scene.camera.height);
    let mut out = RenderOutput {
        width: w,
        height: h,
        color: vec![[0.0; 3]; w * h],
        opacity: vec![0.0; w * h],
        depth: vec![f64::INFINITY; w * h],
        raster,
        samples: points.len(),
        out_of_range: maps.iter().filter(|m| m.out_of_range).count(),
        timings,
    };
    for (&(i, j), r) in batch.pixels.iter().zip(per_ray) {
        let k = j * w + i;
        out.color[k] = r.color;
        out.opacity[k] = r.opacity;
        out.depth[k] = r.depth.unwrap_or(f64::INFINITY);
    }
    out.timings.integrate = clock.elapsed();
    Ok(out)
}

/// SDF value and shape code per sample; `None` out of range.
fn evaluate_samples(
    field: &SdfField,
    points: &[Vec3<f64>],
    maps: &[MappingResult<f64>],
) -> Result<Vec<Option<(f64, Vec<f64>)>>> {
    points
        .par_iter()
        .zip(maps)
        .map(|(&x, m)| {
            if m.out_of_range {
                return Ok(None);
            }
            Ok(Some(match field {
                SdfField::Decoded(d) => {
                    let mut v = d.decode(m.coords.coords())?;
                    let s = v.remove(0);
                    (s, v)
                }
                _ => (field.value(x)?, Vec::new()),
            }))
        })
        .collect()
}

fn integrate_rays(
    scene: &Scene,
    settings: &RenderSettings,
    batch: &RaySampleBatch,
    points: &[Vec3<f64>],
    values: &[Option<(f64, Vec<f64>)>],
) -> Result<Vec<Integrated>> {
    (0..batch.len())
        .into_par_iter()
        .map(|r| {
            let range = batch.range(r);
            let t = batch.depths(r);
            let n = t.len().saturating_sub(1);
            let (mut alphas, mut colors, mut mids) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
            for i in 0..n {
                let (a, b) = (&values[range.start + i], &values[range.start + i + 1]);
                let alpha = match (a, b) {
                    (Some((s0, _)), Some((s1, _))) => interval_alpha(*s0, *s1, settings.sharpness),
                    _ => 0.0,
                };
                let color = match (alpha > 0.0, a, scene.field) {
                    (true, Some((s, code)), SdfField::Decoded(d)) if d.appearance.is_some() => {
                        let x = points[range.start + i];
                        let normal = scene.field.gradient(x)?.try_normalize().unwrap_or_else(Vec3::zero);
                        d.color(code, *s, normal, batch.rays[r].dir)?.unwrap_or(settings.flat_color)
                    }
                    _ => settings.flat_color,
                };
                alphas.push(alpha);
                colors.push(color);
                mids.push(0.5 * (t[i] + t[i + 1]));
            }
            Ok(volume_integrate(&alphas, &colors, &mids))
        })
        .collect()
}

/// Intersection over union of two masks thresholded at 0.5.
pub fn mask_iou(a: &[f64], b: &[f64]) -> f64 {
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x >= 0.5, y >= 0.5);
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}
