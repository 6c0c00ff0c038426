//! How often samples near the surface map ambiguously (edge/vertex case).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::mesh::{face_geometry, TriangleMesh};
use crate::real::Real;

use super::index::ClosestPointIndex;
use super::mapping::{map_batch, ElementClass};

/// Element-class fractions of one sample set at one `d_max`.
///
/// Class fractions are taken over in-range samples; `out_of_range_frac` over
/// all samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CollisionStats {
    pub d_max: f64,
    pub samples: usize,
    pub in_range: usize,
    pub face_frac: f64,
    pub edge_frac: f64,
    pub vertex_frac: f64,
    pub out_of_range_frac: f64,
}

impl CollisionStats {
    /// Fraction of in-range samples that are collision-prone.
    pub fn collision_ratio(&self) -> f64 {
        self.edge_frac + self.vertex_frac
    }
}

pub fn collision_ratio<T: Real>(index: &ClosestPointIndex<T>, samples: &[Vec3<T>], d_max: T) -> Result<CollisionStats> {
    if samples.is_empty() {
        return Err(Error::Empty("collision samples"));
    }
    let results = map_batch(index, samples, d_max);
    let mut counts = [0usize; 3];
    let mut out = 0usize;
    for r in &results {
        if r.out_of_range {
            out += 1;
            continue;
        }
        counts[match r.element().class() {
            ElementClass::Face => 0,
            ElementClass::Edge => 1,
            ElementClass::Vertex => 2,
        }] += 1;
    }
    let in_range = samples.len() - out;
    let frac = |c: usize| if in_range == 0 { 0.0 } else { c as f64 / in_range as f64 };
    Ok(CollisionStats {
        d_max: d_max.to_f64_lossy(),
        samples: samples.len(),
        in_range,
        face_frac: frac(counts[0]),
        edge_frac: frac(counts[1]),
        vertex_frac: frac(counts[2]),
        out_of_range_frac: out as f64 / samples.len() as f64,
    })
}

/// Surface points with fixed relative heights in `[-1, 1]`; scaling the
/// heights by `d_max` spreads samples over the band `|d| ≤ d_max`, the region
/// ray samples are drawn from.
#[derive(Clone, Debug)]
pub struct BandSamples<T> {
    pub points: Vec<Vec3<T>>,
    pub normals: Vec<Vec3<T>>,
    pub offsets: Vec<T>,
}

impl<T: Real> BandSamples<T> {
    /// `count` area-uniform surface points with uniform relative heights.
    pub fn generate(mesh: &TriangleMesh<T>, positions: &[Vec3<T>], count: usize, seed: u64) -> Result<Self> {
        let geo = face_geometry(mesh, positions)?;
        let mut cdf = Vec::with_capacity(geo.areas.len());
        let mut acc = 0.0;
        for a in &geo.areas {
            acc += a.to_f64_lossy();
            cdf.push(acc);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Self { points: Vec::with_capacity(count), normals: Vec::with_capacity(count), offsets: Vec::with_capacity(count) };
        for _ in 0..count {
            let r = rng.gen::<f64>() * acc;
            let f = cdf.partition_point(|&c| c < r).min(cdf.len() - 1);
            let (mut u, mut v) = (rng.gen::<f64>(), rng.gen::<f64>());
            if u + v > 1.0 {
                (u, v) = (1.0 - u, 1.0 - v);
            }
            let [a, b, c] = mesh.faces()[f].map(|i| positions[i]);
            s.points.push(a + (b - a) * T::lit(u) + (c - a) * T::lit(v));
            s.normals.push(geo.normals[f]);
            s.offsets.push(T::lit(rng.gen_range(-1.0..=1.0)));
        }
        Ok(s)
    }

    pub fn at(&self, d_max: T) -> Vec<Vec3<T>> {
        self.points
            .iter()
            .zip(&self.normals)
            .zip(&self.offsets)
            .map(|((&p, &n), &h)| p + n * (h * d_max))
            .collect()
    }
}

/// Collision statistics of one band sample set across several heights.
pub fn collision_study<T: Real>(index: &ClosestPointIndex<T>, band: &BandSamples<T>, d_maxes: &[T]) -> Result<Vec<CollisionStats>> {
    d_maxes.iter().map(|&d| collision_ratio(index, &band.at(d), d)).collect()
}

/// CSV with columns `d_max,face_frac,edge_frac,vertex_frac,out_of_range_frac`.
pub fn collision_csv(stats: &[CollisionStats]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(["d_max", "face_frac", "edge_frac", "vertex_frac", "out_of_range_frac"]).map_err(io)?;
    for s in stats {
        w.write_record([s.d_max, s.face_frac, s.edge_frac, s.vertex_frac, s.out_of_range_frac].map(|v| v.to_string()))
            .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
