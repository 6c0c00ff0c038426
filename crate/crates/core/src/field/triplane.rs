use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

/// Three `R × R × C` feature grids sampled at `(u_x, u_y)`, `(u_x, d̂)` and
/// `(u_y, d̂)`.
///
/// Storage is `[3, R, R, C]`: plane, then row (second plane coordinate), then
/// column (first plane coordinate), then channel. Grid nodes sit at
/// `i / (R − 1)`, so the corners of the unit square are lattice points.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTriplane {
    resolution: usize,
    channels: usize,
    data: Vec<f64>,
}

/// Bilinear taps of one plane: flat node index (`plane·R² + row·R + col`)
/// and weight.
pub type PlaneTaps<S> = [(usize, S); 4];

impl FeatureTriplane {
    pub fn new(resolution: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if resolution < 2 || channels == 0 {
            return Err(Error::InvalidArgument(format!(
                "tri-plane needs resolution >= 2 and channels >= 1, got {resolution} and {channels}"
            )));
        }
        let n = 3 * resolution * resolution * channels;
        if data.len() != n {
            return Err(Error::dim("tri-plane values", n, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("tri-plane values must be finite".into()));
        }
        Ok(Self { resolution, channels, data })
    }

    /// Fills node `(plane, a, b, channel)` with `f`, where `a`, `b` are the
    /// node's plane coordinates in `[0, 1]`.
    pub fn from_fn(resolution: usize, channels: usize, f: impl Fn(usize, f64, f64, usize) -> f64) -> Result<Self> {
        let r = resolution.max(2);
        let step = 1.0 / (r - 1) as f64;
        let mut data = Vec::with_capacity(3 * r * r * channels);
        for plane in 0..3 {
            for row in 0..r {
                for col in 0..r {
                    for c in 0..channels {
                        data.push(f(plane, col as f64 * step, row as f64 * step, c));
                    }
                }
            }
        }
        Self::new(resolution, channels, data)
    }

    /// Uniform values in `[-scale, scale]`.
    pub fn random(resolution: usize, channels: usize, scale: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 3 * resolution * resolution * channels;
        Self::new(resolution, channels, (0..n).map(|_| rng.gen_range(-scale..=scale)).collect())
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        match *t.dims() {
            [3, r, r2, c] if r == r2 => Self::new(r, c, t.to_f64()),
            _ => Err(Error::Tensor(format!("tri-plane must be [3, R, R, C], got {:?}", t.dims()))),
        }
    }

    pub fn to_tensor(&self) -> Result<Tensor> {
        Tensor::from_f64(vec![3, self.resolution, self.resolution, self.channels], &self.data)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_tensor(&Tensor::load(path)?)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Length of a sampled feature, `3C`.
    pub fn feature_dim(&self) -> usize {
        3 * self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Value at a node; `node` as in [`PlaneTaps`].
    pub fn node_value(&self, node: usize, channel: usize) -> f64 {
        self.data[node * self.channels + channel]
    }

    /// Bilinear taps for the three planes at texture-space point `pt`.
    pub fn taps<S: Real>(&self, pt: [S; 3]) -> Result<[PlaneTaps<S>; 3]> {
        if !pt.iter().all(|&v| v >= S::zero() && v <= S::one()) {
            let p: Vec<f64> = pt.iter().map(|v| v.to_f64_lossy()).collect();
            return Err(Error::OutOfDomain(format!("{p:?}")));
        }
        let [ux, uy, h] = pt;
        Ok([self.plane_taps(0, ux, uy), self.plane_taps(1, ux, h), self.plane_taps(2, uy, h)])
    }

    fn plane_taps<S: Real>(&self, plane: usize, a: S, b: S) -> PlaneTaps<S> {
        let r = self.resolution;
        let span = S::from_usize_lossy(r - 1);
        let cell = |t: S| {
            let f = t * span;
            let i = (f.to_f64_lossy().floor() as usize).min(r - 2);
            (i, f - S::from_usize_lossy(i))
        };
        let (i, ta) = cell(a);
        let (j, tb) = cell(b);
        let base = plane * r * r + j * r + i;
        let one = S::one();
        [
            (base, (one - ta) * (one - tb)),
            (base + 1, ta * (one - tb)),
            (base + r, (one - ta) * tb),
            (base + r + 1, ta * tb),
        ]
    }

    /// Concatenated feature `[P_x(u_x, u_y), P_y(u_x, d̂), P_z(u_y, d̂)]`.
    pub fn sample<S: Real>(&self, pt: [S; 3]) -> Result<Vec<S>> {
        let taps = self.taps(pt)?;
        let c = self.channels;
        let mut out = vec![S::zero(); 3 * c];
        for (plane, taps) in taps.iter().enumerate() {
            for &(node, w) in taps {
                let vals = &self.data[node * c..(node + 1) * c];
                for (o, &v) in out[plane * c..(plane + 1) * c].iter_mut().zip(vals) {
                    *o += w * S::lit(v);
                }
            }
        }
        Ok(out)
    }

    /// Adds `∂⟨g, sample(pt)⟩/∂values` into `out` (same layout as
    /// [`Self::data`]).
    pub fn accumulate_grad<S: Real>(&self, pt: [S; 3], g: &[S], out: &mut [S]) -> Result<()> {
        let c = self.channels;
        if g.len() != 3 * c {
            return Err(Error::dim("feature gradient", 3 * c, g.len()));
        }
        if out.len() != self.data.len() {
            return Err(Error::dim("tri-plane gradient", self.data.len(), out.len()));
        }
        for (plane, taps) in self.taps(pt)?.iter().enumerate() {
            for &(node, w) in taps {
                for k in 0..c {
                    out[node * c + k] += w * g[plane * c + k];
                }
            }
        }
        Ok(())
    }
}
