use std::sync::Arc;

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::real::{sigmoid, Real};
use crate::primitives;
use crate::utts::{build_index, closest_point, sign_height, ClosestPointIndex, MappingResult};

use super::encoding::{encoded_dim, positional_encoding, POSITION_FREQUENCIES};
use super::mlp::{Activation, MlpWeights};
use super::triplane::FeatureTriplane;

/// Step (m) of the central-difference gradient.
pub const FD_STEP: f64 = 1e-4;

/// Tri-plane features decoded by a shallow network into an SDF value and a
/// shape code, queried through the texture-space mapping of a posed
/// template.
#[derive(Clone, Debug)]
pub struct DecodedField {
    pub triplane: FeatureTriplane,
    /// `[F, g_f, p(x̄)] → [s, q…]`.
    pub geometry: MlpWeights,
    /// `[q, s, n, p(d), t_f] → rgb` before the output sigmoid.
    pub appearance: Option<MlpWeights>,
    /// Global motion code `g_f`.
    pub motion_code: Vec<f64>,
    /// Texture feature `t_f` fed to the color decoder.
    pub texture_code: Vec<f64>,
    pub position_frequencies: usize,
    pub direction_frequencies: usize,
    pub index: Arc<ClosestPointIndex<f64>>,
    pub d_max: f64,
}

impl DecodedField {
    pub fn validate(&self) -> Result<()> {
        let geo_in = self.triplane.feature_dim() + self.motion_code.len() + encoded_dim(3, self.position_frequencies);
        if self.geometry.in_dim() != geo_in {
            return Err(Error::dim("geometry decoder input", geo_in, self.geometry.in_dim()));
        }
        if let Some(app) = &self.appearance {
            let app_in = self.geometry.out_dim() + 3 + encoded_dim(3, self.direction_frequencies) + self.texture_code.len();
            if app.in_dim() != app_in {
                return Err(Error::dim("color decoder input", app_in, app.in_dim()));
            }
            if app.out_dim() != 3 {
                return Err(Error::dim("color decoder output", 3, app.out_dim()));
            }
        }
        if !(self.d_max > 0.0) {
            return Err(Error::InvalidArgument(format!("d_max must be positive, got {}", self.d_max)));
        }
        Ok(())
    }

    /// Length of the shape code `q`.
    pub fn code_dim(&self) -> usize {
        self.geometry.out_dim() - 1
    }

    pub fn geometry_input<S: Real>(&self, pt: [S; 3]) -> Result<Vec<S>> {
        let mut input = self.triplane.sample(pt)?;
        input.extend(self.motion_code.iter().map(|&g| S::lit(g)));
        input.extend(positional_encoding(&pt, self.position_frequencies));
        Ok(input)
    }

    /// `[s, q…]` at a texture-space point.
    pub fn decode<S: Real>(&self, pt: [S; 3]) -> Result<Vec<S>> {
        self.geometry.forward(&self.geometry_input(pt)?)
    }

    pub fn sdf_utts<S: Real>(&self, pt: [S; 3]) -> Result<S> {
        Ok(self.decode(pt)?[0])
    }

    /// Maps a global point; fails beyond `d_max`.
    pub fn locate(&self, x: Vec3<f64>) -> Result<MappingResult<f64>> {
        let m = sign_height(x, closest_point(&self.index, x), self.d_max);
        if m.out_of_range {
            return Err(Error::OutOfDomain(format!("{x:?} is {} from the template, d_max {}", m.coords.d, self.d_max)));
        }
        Ok(m)
    }

    /// SDF at `x` through the mapping `m`, with the closest element held
    /// fixed so `x` may carry derivatives.
    pub fn value_at<S: Real>(&self, m: &MappingResult<f64>, x: Vec3<S>) -> Result<S> {
        self.sdf_utts(m.coords_at(&self.index, x, S::lit(self.d_max)))
    }

    /// Adds `scale · ∂s/∂(tri-plane values)` at `pt` into `out` and returns `s`.
    pub fn accumulate_sdf_grad<S: Real>(&self, pt: [S; 3], scale: S, out: &mut [S]) -> Result<S> {
        let input = self.geometry_input(pt)?;
        let mut g = vec![S::zero(); self.geometry.out_dim()];
        g[0] = scale;
        let (out_v, grad_in) = self.geometry.vjp(&input, &g)?;
        self.triplane.accumulate_grad(pt, &grad_in[..self.triplane.feature_dim()], out)?;
        Ok(out_v[0])
    }

    /// RGB in `[0, 1]`; `normal` is the SDF gradient, `view` the ray direction.
    pub fn color(&self, code: &[f64], s: f64, normal: Vec3<f64>, view: Vec3<f64>) -> Result<Option<[f64; 3]>> {
        let Some(app) = &self.appearance else {
            return Ok(None);
        };
        let mut input = code.to_vec();
        input.push(s);
        input.extend(normal.to_array());
        input.extend(positional_encoding(&view.to_array(), self.direction_frequencies));
        input.extend_from_slice(&self.texture_code);
        let rgb = app.forward(&input)?;
        Ok(Some([sigmoid(rgb[0]), sigmoid(rgb[1]), sigmoid(rgb[2])]))
    }
}

/// Signed distance from a closest-point index, signed by pseudo-normals.
#[derive(Clone, Debug)]
pub struct MeshSdf {
    pub index: ClosestPointIndex<f64>,
}

/// Pluggable signed-distance evaluator (negative inside).
#[derive(Clone, Debug)]
pub enum SdfField {
    Sphere { center: Vec3<f64>, radius: f64 },
    /// Segment `a → b` swept by a ball.
    Capsule { a: Vec3<f64>, b: Vec3<f64>, radius: f64 },
    /// `s = n·x + offset` with unit `n`.
    Plane { normal: Vec3<f64>, offset: f64 },
    Constant { value: f64 },
    /// `factor · inner`; not a distance field unless `factor = 1`.
    Scaled { factor: f64, inner: Box<SdfField> },
    Mesh(Arc<MeshSdf>),
    Decoded(Arc<DecodedField>),
}

/// SDF value plus the shape code of decoded fields.
#[derive(Clone, Debug, PartialEq)]
pub struct SdfSample {
    pub s: f64,
    pub code: Vec<f64>,
}

impl SdfField {
    pub fn mesh(index: ClosestPointIndex<f64>) -> Self {
        SdfField::Mesh(Arc::new(MeshSdf { index }))
    }

    pub fn decoded(field: DecodedField) -> Result<Self> {
        field.validate()?;
        Ok(SdfField::Decoded(Arc::new(field)))
    }

    pub fn eval(&self, x: Vec3<f64>) -> Result<SdfSample> {
        match self {
            SdfField::Decoded(d) => {
                let m = d.locate(x)?;
                let mut out = d.decode(m.coords.coords())?;
                let s = out.remove(0);
                Ok(SdfSample { s, code: out })
            }
            _ => Ok(SdfSample { s: self.value(x)?, code: Vec::new() }),
        }
    }

    /// Value on any scalar type, so dual numbers give exact derivatives.
    /// Mesh and decoded fields locate the closest element at the primal
    /// point and hold it fixed.
    pub fn value<S: Real>(&self, x: Vec3<S>) -> Result<S> {
        Ok(match self {
            SdfField::Sphere { center, radius } => (x - center.cast()).norm() - S::lit(*radius),
            SdfField::Capsule { a, b, radius } => {
                let (a, b) = (a.cast::<S>(), b.cast::<S>());
                let e = b - a;
                let t = (e.dot(x - a) / e.norm_squared()).max(S::zero()).min(S::one());
                (x - (a + e * t)).norm() - S::lit(*radius)
            }
            SdfField::Plane { normal, offset } => normal.cast::<S>().dot(x) + S::lit(*offset),
            SdfField::Constant { value } => S::lit(*value),
            SdfField::Scaled { factor, inner } => inner.value(x)? * S::lit(*factor),
            SdfField::Mesh(m) => {
                let p = primal(x);
                let r = sign_height(p, closest_point(&m.index, p), f64::INFINITY);
                r.uv_height_at(&m.index, x).1
            }
            SdfField::Decoded(d) => d.value_at(&d.locate(primal(x))?, x)?,
        })
    }

    /// `∇s`: closed form for analytic fields, forward-mode derivatives
    /// through the mapping otherwise.
    pub fn gradient(&self, x: Vec3<f64>) -> Result<Vec3<f64>> {
        match self {
            SdfField::Sphere { center, .. } => Ok((x - *center).try_normalize().unwrap_or_else(Vec3::unit_x)),
            SdfField::Capsule { a, b, .. } => {
                let e = *b - *a;
                let t = (e.dot(x - *a) / e.norm_squared()).clamp(0.0, 1.0);
                Ok((x - (*a + e * t)).try_normalize().unwrap_or_else(|| any_perpendicular(e)))
            }
            SdfField::Plane { normal, .. } => Ok(*normal),
            SdfField::Constant { .. } => Ok(Vec3::zero()),
            SdfField::Scaled { factor, inner } => Ok(inner.gradient(x)? * *factor),
            SdfField::Mesh(_) | SdfField::Decoded(_) => self.gradient_dual(x),
        }
    }

    /// Gradient from three forward-mode evaluations.
    pub fn gradient_dual(&self, x: Vec3<f64>) -> Result<Vec3<f64>> {
        let mut g = Vec3::zero();
        for k in 0..3 {
            let mut xd = x.cast::<Dual<f64>>();
            xd[k].eps = 1.0;
            g[k] = self.value(xd)?.eps;
        }
        Ok(g)
    }

    /// Central differences with step `h`; every probe must be evaluable.
    pub fn gradient_fd(&self, x: Vec3<f64>, h: f64) -> Result<Vec3<f64>> {
        let mut g = Vec3::zero();
        for k in 0..3 {
            let mut hi = x;
            let mut lo = x;
            hi[k] += h;
            lo[k] -= h;
            g[k] = (self.eval(hi)?.s - self.eval(lo)?.s) / (2.0 * h);
        }
        Ok(g)
    }
}

fn primal<S: Real>(x: Vec3<S>) -> Vec3<f64> {
    Vec3::new(x.x.to_f64_lossy(), x.y.to_f64_lossy(), x.z.to_f64_lossy())
}

fn any_perpendicular(e: Vec3<f64>) -> Vec3<f64> {
    let t = if e.x.abs() < 0.9 { Vec3::unit_x() } else { Vec3::unit_y() };
    e.cross(t).normalize()
}

/// Small randomized decoded field over the unit icosphere (level 2,
/// `d_max = 0.1`), used by gradient checks and demos.
pub fn random_decoded_field(seed: u64) -> DecodedField {
    let mesh = primitives::icosphere::<f64>(1.0, 2);
    let index = Arc::new(build_index(&mesh, mesh.vertices()).expect("fixture is valid"));
    let triplane = FeatureTriplane::random(8, 4, 0.5, seed).expect("fixture is valid");
    let in_dim = 12 + 2 + 39;
    let mut geometry = MlpWeights::random(&[in_dim, 16, 16, 4], &[Activation::Softplus, Activation::Softplus, Activation::None], 1.0, seed + 1).expect("fixture is valid");
    // Decaying spectrum: encoding frequency k enters with weight 4^-k,
    // so central differences at FD_STEP resolve the field.
    let first = &mut geometry.layers_mut()[0];
    for row in first.weights.chunks_exact_mut(in_dim) {
        for (col, w) in row.iter_mut().enumerate().skip(14 + 3) {
            *w *= 0.25f64.powi(((col - 17) / 6) as i32 + 1);
        }
    }
    let appearance = MlpWeights::random(&[3 + 1 + 3 + 27 + 2, 8, 3], &[Activation::Relu, Activation::None], 1.0, seed + 2).expect("fixture is valid");
    DecodedField {
        triplane,
        geometry,
        appearance: Some(appearance),
        motion_code: vec![0.3, -0.2],
        texture_code: vec![0.1, 0.4],
        position_frequencies: POSITION_FREQUENCIES,
        direction_frequencies: 4,
        index,
        d_max: 0.1,
    }
}
