use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::field::{random_decoded_field, DecodedField, FeatureTriplane, SdfField};
use crate::linalg::Vec3;
use crate::mesh::{extract_seams, vertex_normals};
use crate::primitives;
use crate::utts::seam_sample_pairs;

use super::check::{check_gradients, GradientCheck, GRADIENT_CHECK_STEP};
use super::field::{eikonal_triplane_gradient, sdf_vertex_loss, seam_loss};
use super::image::{image_losses, Frame, ImageLosses};
use super::surface::{SurfaceLosses, SurfaceRegularizer};

#[derive(Clone, Debug, Serialize)]
pub struct SuiteEntry {
    pub name: String,
    /// Number of parameters probed.
    pub params: usize,
    pub max_rel_err: f64,
    pub worst: usize,
    pub passed: bool,
}

impl SuiteEntry {
    fn new(name: &str, params: usize, c: GradientCheck) -> Self {
        Self { name: name.into(), params, max_rel_err: c.max_rel_err, worst: c.worst, passed: c.passes() }
    }
}

fn flat(v: &[Vec3<f64>]) -> Vec<f64> {
    v.iter().flat_map(|p| p.to_array()).collect()
}

fn unflat(p: &[f64]) -> Vec<Vec3<f64>> {
    p.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
}

fn with_values(field: &DecodedField, values: &[f64]) -> Result<DecodedField> {
    let mut f = field.clone();
    f.triplane = FeatureTriplane::new(f.triplane.resolution(), f.triplane.channels(), values.to_vec())?;
    Ok(f)
}

/// Central-difference verification of every loss gradient on small
/// randomized fixtures (at most 162 vertices, 66-pixel images).
pub fn gradient_suite(seed: u64) -> Result<Vec<SuiteEntry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    // Image terms with respect to predicted color and opacity.
    let (w, h) = (11, 6);
    let n = w * h;
    let frame = |rng: &mut ChaCha8Rng| {
        let color = (0..n).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        let alpha = (0..n).map(|_| rng.gen()).collect();
        Frame::new(w, h, color, alpha)
    };
    let (pred, gt) = (frame(&mut rng)?, frame(&mut rng)?);
    let params: Vec<f64> = pred.color.iter().flatten().copied().chain(pred.alpha.iter().copied()).collect();
    let unpack = |p: &[f64]| {
        let color = p[..3 * n].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Frame::new(w, h, color, p[3 * n..].to_vec())
    };
    let color_grad = |g: &[[f64; 3]]| g.iter().flatten().copied().chain(std::iter::repeat(0.0).take(n)).collect();
    type ImagePick = fn(&ImageLosses) -> f64;
    let terms: [(&str, ImagePick); 3] = [("col", |l| l.col), ("mask", |l| l.mask), ("lappyr", |l| l.lappyr)];
    for (name, pick) in terms {
        let loss = |p: &[f64]| {
            let l = image_losses(&unpack(p)?, &gt)?;
            let g: Vec<f64> = match name {
                "col" => color_grad(&l.grad_col),
                "lappyr" => color_grad(&l.grad_lappyr),
                _ => std::iter::repeat(0.0).take(3 * n).chain(l.grad_mask.iter().copied()).collect(),
            };
            Ok((pick(&l), g))
        };
        out.push(SuiteEntry::new(name, params.len(), check_gradients(loss, &params, GRADIENT_CHECK_STEP)?));
    }

    // Field terms with respect to the tri-plane features.
    let field = random_decoded_field(seed);
    let shell: Vec<Vec3<f64>> = (0..12)
        .map(|_| {
            let dir = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
            dir * (1.0 + rng.gen_range(-0.5..0.5) * field.d_max)
        })
        .collect();
    let loss = |p: &[f64]| eikonal_triplane_gradient(&with_values(&field, p)?, &shell);
    let c = check_gradients(loss, field.triplane.data(), GRADIENT_CHECK_STEP)?;
    out.push(SuiteEntry::new("eik", field.triplane.data().len(), c));

    let charts = primitives::two_chart_sphere::<f64>(1.0, 2);
    let pairs = seam_sample_pairs(&extract_seams(&charts)?, 40, 0.01, (-0.05, 0.05), field.d_max, seed)?;
    let loss = |p: &[f64]| seam_loss(&with_values(&field, p)?, &pairs);
    let c = check_gradients(loss, field.triplane.data(), GRADIENT_CHECK_STEP)?;
    out.push(SuiteEntry::new("seam", field.triplane.data().len(), c));

    // Vertex terms with respect to positions.
    let capsule = SdfField::Capsule { a: Vec3::new(0.0, -0.3, 0.0), b: Vec3::new(0.1, 0.4, 0.2), radius: 0.5 };
    let small = primitives::icosphere::<f64>(0.7, 1);
    let loss = |p: &[f64]| {
        let r = sdf_vertex_loss(&capsule, &unflat(p))?;
        Ok((r.value, flat(&r.gradient)))
    };
    let x = flat(small.vertices());
    out.push(SuiteEntry::new("sdf", x.len(), check_gradients(loss, &x, GRADIENT_CHECK_STEP)?));

    // Off-surface vertices stay in their closest vertex's region under the
    // probe steps, so the mapping is smooth there.
    let tmpl = primitives::icosphere::<f64>(1.0, 2);
    let normals = vertex_normals(&tmpl, tmpl.vertices())?;
    let pts: Vec<Vec3<f64>> = tmpl.vertices().iter().zip(&normals).take(20).map(|(&v, &n)| v + n * 0.03).collect();
    let decoded = SdfField::decoded(field.clone())?;
    let loss = |p: &[f64]| {
        let r = sdf_vertex_loss(&decoded, &unflat(p))?;
        Ok((r.value, flat(&r.gradient)))
    };
    let x = flat(&pts);
    out.push(SuiteEntry::new("sdf_decoded", x.len(), check_gradients(loss, &x, GRADIENT_CHECK_STEP)?));

    let mesh = primitives::icosphere::<f64>(1.0, 1);
    let mut jitter = |amount: f64| -> Vec<Vec3<f64>> {
        mesh.vertices()
            .iter()
            .map(|&p| p + Vec3::new(rng.gen_range(-amount..amount), rng.gen_range(-amount..amount), rng.gen_range(-amount..amount)))
            .collect()
    };
    let (before, after) = (jitter(0.05), jitter(0.08));
    let reg = SurfaceRegularizer::new(&mesh, &before)?;
    type SurfacePick = fn(&SurfaceLosses) -> (f64, &Vec<Vec3<f64>>);
    let picks: [(&str, SurfacePick); 4] = [
        ("reg", |s| (s.reg, &s.grad_reg)),
        ("zero", |s| (s.zero, &s.grad_zero)),
        ("normal", |s| (s.normal, &s.grad_normal)),
        ("area", |s| (s.area, &s.grad_area)),
    ];
    let x = flat(&after);
    for (name, pick) in picks {
        let loss = |p: &[f64]| {
            let s = reg.evaluate(&unflat(p))?;
            let (v, g) = pick(&s);
            Ok((v, flat(g)))
        };
        out.push(SuiteEntry::new(name, x.len(), check_gradients(loss, &x, GRADIENT_CHECK_STEP)?));
    }
    Ok(out)
}
