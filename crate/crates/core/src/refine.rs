//! Template refinement against a frozen SDF: normal embossing and gradient
//! descent on the vertex positions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SdfField;
use crate::linalg::Vec3;
use crate::losses::{sdf_vertex_loss, weights, LossReport, SurfaceRegularizer, STAGE2_WEIGHTS};
use crate::mesh::{subdivide_once, vertex_normals, TriangleMesh};
use crate::utts::{map_batch, ClosestPointIndex};

/// Shell half-widths (m) used while refining, coarse to fine.
pub const DEFAULT_D_MAX_SCHEDULE: [f64; 2] = [0.04, 0.02];
/// Step halvings allowed per descent iteration.
pub const MAX_HALVINGS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub emboss_iterations: usize,
    pub optimize_iterations: usize,
    /// Largest vertex displacement (m) of a full descent step.
    pub step: f64,
    /// `(sdf, reg, zero, normal, area)`.
    pub weights: [f64; 5],
    pub subdivide: bool,
    pub d_max_schedule: Vec<f64>,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            emboss_iterations: 2,
            optimize_iterations: 200,
            step: 1e-3,
            weights: STAGE2_WEIGHTS.map(|(_, w)| w),
            subdivide: false,
            d_max_schedule: DEFAULT_D_MAX_SCHEDULE.to_vec(),
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.emboss_iterations == 0 && self.optimize_iterations == 0 {
            return bad("at least one refinement iteration is required".into());
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return bad(format!("loss weights must be finite and non-negative, got {:?}", self.weights));
        }
        if self.d_max_schedule.iter().any(|d| !(*d > 0.0)) {
            return bad(format!("d_max schedule entries must be positive, got {:?}", self.d_max_schedule));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Embossed {
    /// The input mesh, or its subdivision.
    pub mesh: TriangleMesh<f64>,
    pub positions: Vec<Vec3<f64>>,
    /// Vertices that left the field's domain; they keep their last valid
    /// position.
    pub frozen: Vec<usize>,
}

/// Moves every vertex against its pseudo-normal by its SDF value,
/// `v ← v − s(v)·n̂(v)`, for the configured number of passes. This descends
/// the field for either sign of `s`.
pub fn emboss_mesh(
    mesh: &TriangleMesh<f64>,
    positions: &[Vec3<f64>],
    field: &SdfField,
    config: &RefineConfig,
) -> Result<Embossed> {
    config.validate()?;
    let mesh = if config.subdivide { subdivide_once(mesh, positions)? } else { mesh.with_vertices(positions.to_vec())? };
    let mut x = mesh.vertices().to_vec();
    let mut frozen = vec![false; x.len()];
    for _ in 0..config.emboss_iterations {
        let normals = vertex_normals(&mesh, &x)?;
        let moved: Vec<Option<Vec3<f64>>> = x
            .par_iter()
            .zip(&normals)
            .zip(&frozen)
            .map(|((&v, &n), &fz)| {
                if fz {
                    return Ok(None);
                }
                let s = match field.eval(v) {
                    Ok(sample) => sample.s,
                    Err(Error::OutOfDomain(_)) => return Ok(None),
                    Err(e) => return Err(e),
                };
                let next = v - n * s;
                // A step that leaves the domain is not taken.
                match field.eval(next) {
                    Ok(_) => Ok(Some(next)),
                    Err(Error::OutOfDomain(_)) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;
        for (i, m) in moved.into_iter().enumerate() {
            match m {
                Some(p) => x[i] = p,
                None => frozen[i] = true,
            }
        }
    }
    let frozen = frozen.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect();
    Ok(Embossed { mesh, positions: x, frozen })
}

#[derive(Clone, Debug)]
pub struct Optimized {
    pub positions: Vec<Vec3<f64>>,
    /// One report per accepted iterate, starting with the initial state.
    pub trace: Vec<LossReport>,
    pub converged: bool,
}

/// Weighted stage-two objective and a descent direction.
struct Objective<'a> {
    field: &'a SdfField,
    regularizer: SurfaceRegularizer,
    weights: [f64; 5],
    /// Vertices with `|s|` at most this far from the zero set sit on the
    /// kink of `|s|`.
    kink: f64,
}

impl Objective<'_> {
    fn evaluate(&self, x: &[Vec3<f64>]) -> Result<(LossReport, Vec<Vec3<f64>>)> {
        let sdf = sdf_vertex_loss(self.field, x)?;
        let s = self.regularizer.evaluate(x)?;
        let mut report = LossReport::new(weights(&STAGE2_WEIGHTS));
        for (k, &(name, _)) in STAGE2_WEIGHTS.iter().enumerate() {
            report.weights.insert(name.to_string(), self.weights[k]);
        }
        report.insert("sdf", sdf.value);
        report.insert("reg", s.reg);
        report.insert("zero", s.zero);
        report.insert("normal", s.normal);
        report.insert("area", s.area);
        let w = self.weights;
        let scale = w[0] / x.len() as f64;
        let direction = (0..x.len())
            .map(|i| {
                let smooth = s.grad_reg[i] * w[1] + s.grad_zero[i] * w[2] + s.grad_normal[i] * w[3] + s.grad_area[i] * w[4];
                let n = sdf.field_gradients[i];
                if sdf.values[i].abs() > self.kink || scale == 0.0 {
                    return smooth + sdf.gradient[i] * w[0];
                }
                // Minimum-norm element of the subdifferential
                // `smooth + c·scale·∇s`, `c ∈ [−1, 1]`, so a step does not
                // overshoot the zero set.
                let nn = n.dot(n);
                let c = if nn > 0.0 { (-smooth.dot(n) / (scale * nn)).clamp(-1.0, 1.0) } else { 0.0 };
                smooth + n * (c * scale)
            })
            .collect();
        Ok((report, direction))
    }
}

/// Descent on vertex positions with the field and mapping frozen.
///
/// Each step moves the vertex with the largest descent direction by
/// `config.step` and the rest proportionally. The direction is the
/// gradient, except at vertices within one step of the zero set where the
/// minimum-norm subgradient of `|s|` is used. A step that raises the
/// weighted loss is halved, at most [`MAX_HALVINGS`] times. If every trial
/// still raises it the current point is a stationary point of the nonsmooth
/// objective (typically the kink of the regularizer at its reference) and
/// the run stops as converged. A non-finite loss fails with the trace so
/// far. Stops early once the direction vanishes.
pub fn optimize_template(
    mesh: &TriangleMesh<f64>,
    positions: &[Vec3<f64>],
    field: &SdfField,
    config: &RefineConfig,
) -> Result<Optimized> {
    config.validate()?;
    mesh.check_positions(positions)?;
    let objective = Objective {
        field,
        regularizer: SurfaceRegularizer::new(mesh, positions)?,
        weights: config.weights,
        kink: config.step,
    };
    let mut x = positions.to_vec();
    let (mut report, mut dir) = objective.evaluate(&x)?;
    let mut trace = vec![report.clone()];
    for iteration in 0..config.optimize_iterations {
        let d_max = dir.iter().map(|g| g.norm()).fold(0.0, f64::max);
        if d_max <= 1e-14 {
            return Ok(Optimized { positions: x, trace, converged: true });
        }
        let current = report.total();
        if !current.is_finite() {
            return Err(Error::Diverged { iteration, trace: trace.iter().map(|r| r.total()).collect() });
        }
        let mut step = config.step / d_max;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<Vec3<f64>> = x.iter().zip(&dir).map(|(&p, &g)| p - g * step).collect();
            // A trial that leaves the field's domain counts as an increase.
            match objective.evaluate(&trial) {
                Ok((r, g)) if r.total() <= current => {
                    accepted = Some((trial, r, g));
                    break;
                }
                Ok(_) | Err(Error::OutOfRange(_)) | Err(Error::DegenerateFaces(_)) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some((trial, r, g)) = accepted else {
            return Ok(Optimized { positions: x, trace, converged: true });
        };
        x = trial;
        report = r;
        dir = g;
        trace.push(report.clone());
    }
    Ok(Optimized { positions: x, trace, converged: false })
}

/// Vertices farther than `d_max` from the template behind `index`.
pub fn stranded_vertices(index: &ClosestPointIndex<f64>, positions: &[Vec3<f64>], d_max: f64) -> Vec<usize> {
    map_batch(index, positions, d_max)
        .iter()
        .enumerate()
        .filter(|(_, m)| m.out_of_range)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives;
    use crate::utts::build_index;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sphere(r: f64) -> SdfField {
        SdfField::Sphere { center: Vec3::zero(), radius: r }
    }

    #[test]
    fn own_mesh_sdf_is_a_fixed_point() {
        let m = primitives::icosphere::<f64>(1.0, 2);
        let field = SdfField::mesh(build_index(&m, m.vertices()).unwrap());
        let e = emboss_mesh(&m, m.vertices(), &field, &RefineConfig::default()).unwrap();
        assert_eq!(e.positions, m.vertices());
        assert!(e.frozen.is_empty());
    }

    #[test]
    fn emboss_reaches_a_larger_sphere() {
        let m = primitives::icosphere::<f64>(1.0, 2);
        let e = emboss_mesh(&m, m.vertices(), &sphere(1.1), &RefineConfig::default()).unwrap();
        for p in &e.positions {
            assert!((p.norm() - 1.1).abs() <= 1e-3, "{}", p.norm());
        }
        assert_eq!(e.mesh.faces(), m.faces());
    }

    #[test]
    fn subdivision_quadruples_faces() {
        let m = primitives::icosphere::<f64>(1.0, 2);
        assert_eq!(m.face_count(), 320);
        let cfg = RefineConfig { subdivide: true, ..Default::default() };
        let e = emboss_mesh(&m, m.vertices(), &sphere(1.0), &cfg).unwrap();
        assert_eq!(e.mesh.face_count(), 1280);
        assert_eq!(e.positions.len(), e.mesh.vertex_count());
    }

    #[test]
    fn schedule_never_strands_vertices() {
        let m = primitives::icosphere::<f64>(1.0, 3);
        let index = build_index(&m, m.vertices()).unwrap();
        for r in [0.99, 1.01, 1.015] {
            let e = emboss_mesh(&m, m.vertices(), &sphere(r), &RefineConfig::default()).unwrap();
            for &d in &DEFAULT_D_MAX_SCHEDULE {
                assert!(stranded_vertices(&index, &e.positions, d).is_empty());
            }
        }
    }

    #[test]
    fn decoded_field_freezes_vertices_leaving_the_shell() {
        let field = SdfField::decoded(crate::field::random_decoded(4)).unwrap();
        let m = primitives::icosphere::<f64>(1.0, 2);
        let mut x = m.vertices().to_vec();
        x[0] = x[0] * 1.5;
        let e = emboss_mesh(&m, &x, &field, &RefineConfig::default()).unwrap();
        assert!(e.frozen.contains(&0));
        assert_eq!(e.positions[0], x[0]);
    }

    #[test]
    fn optimum_is_immediately_converged() {
        let m = primitives::icosphere::<f64>(1.0, 2);
        // Only terms that vanish at the start are active.
        let cfg = RefineConfig { weights: [1.0, 0.15, 0.0, 0.0, 0.0], ..Default::default() };
        let snapped: Vec<Vec3<f64>> = m.vertices().iter().map(|v| *v / v.norm()).collect();
        let field = SdfField::mesh(build_index(&m, &snapped).unwrap());
        let o = optimize_template(&m, &snapped, &field, &cfg).unwrap();
        assert!(o.converged);
        assert_eq!(o.positions, snapped);
        assert_eq!(o.trace.len(), 1);
    }

    #[test]
    fn noisy_sphere_descends() {
        let m = primitives::icosphere::<f64>(1.0, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noisy: Vec<Vec3<f64>> = m.vertices().iter().map(|&v| v * (1.0 + rng.gen_range(-0.02..0.02))).collect();
        let cfg = RefineConfig { optimize_iterations: 10, ..Default::default() };
        let o = optimize_template(&m, &noisy, &sphere(1.0), &cfg).unwrap();
        let sdf: Vec<f64> = o.trace.iter().map(|r| r.get("sdf").unwrap()).collect();
        assert_eq!(sdf.len(), 11);
        assert!(sdf.windows(2).all(|w| w[1] < w[0]), "{sdf:?}");
        let totals: Vec<f64> = o.trace.iter().map(|r| r.total()).collect();
        assert!(totals.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn flat_start_keeps_normals() {
        let m = primitives::grid::<f64>(6, 6, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x: Vec<Vec3<f64>> = m.vertices().iter().map(|&v| v + Vec3::new(0.0, 0.0, rng.gen_range(-0.01..0.01))).collect();
        let field = SdfField::Plane { normal: Vec3::unit_z(), offset: 0.0 };
        let cfg = RefineConfig { optimize_iterations: 40, weights: [1.0, 0.15, 0.005, 10.0, 5.0], ..Default::default() };
        let o = optimize_template(&m, &x, &field, &cfg).unwrap();
        let before = crate::mesh::face_geometry(&m, &x).unwrap().normals;
        let after = crate::mesh::face_geometry(&m, &o.positions).unwrap().normals;
        assert!(before.iter().zip(&after).all(|(a, b)| a.dot(*b) > 0.0));
    }

    #[test]
    fn embossed_sphere_stalls_at_the_regularizer_kink() {
        let m = primitives::icosphere::<f64>(1.0, 2);
        let f = SdfField::Sphere { center: Vec3::zero(), radius: 1.1 };
        let cfg = RefineConfig::default();
        let e = emboss_mesh(&m, m.vertices(), &f, &cfg).unwrap();
        let o = optimize_template(&e.mesh, &e.positions, &f, &cfg).unwrap();
        assert!(o.converged);
        assert!(o.trace.windows(2).all(|w| w[1].total() <= w[0].total()));
        for p in &o.positions {
            assert!((p.norm() - 1.1).abs() < 1e-3);
        }
    }

    #[test]
    fn default_weights_and_validation() {
        let cfg = RefineConfig::default();
        assert_eq!(cfg.weights, [1.0, 0.15, 0.005, 0.005, 5.0]);
        assert_eq!((cfg.emboss_iterations, cfg.optimize_iterations, cfg.step), (2, 200, 1e-3));
        assert!(RefineConfig { step: 0.0, ..Default::default() }.validate().is_err());
        assert!(RefineConfig { d_max_schedule: vec![0.04, 0.0], ..Default::default() }.validate().is_err());
    }
}
