use rayon::prelude::*;

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::field::{DecodedField, SdfField};
use crate::linalg::Vec3;
use crate::real::pairwise_sum;
use crate::utts::SeamSamplePair;

#[derive(Clone, Debug, PartialEq)]
pub struct EikonalLoss {
    /// Mean `(‖∇s‖ − 1)²`.
    pub value: f64,
    /// `∇s` per sample.
    pub gradients: Vec<Vec3<f64>>,
}

/// Eikonal penalty over `samples`; any sample outside the field's domain is
/// an error.
pub fn eikonal_loss(field: &SdfField, samples: &[Vec3<f64>]) -> Result<EikonalLoss> {
    if samples.is_empty() {
        return Err(Error::Empty("eikonal samples"));
    }
    let gradients: Vec<Vec3<f64>> = samples.par_iter().map(|&x| field.gradient(x)).collect::<Result<_>>()?;
    let terms: Vec<f64> = gradients.iter().map(|g| (g.norm() - 1.0).powi(2)).collect();
    Ok(EikonalLoss { value: pairwise_sum(&terms) / samples.len() as f64, gradients })
}

/// Eikonal penalty of a decoded field and its gradient with respect to the
/// tri-plane values (layout of [`crate::field::FeatureTriplane::data`]).
///
/// `∂E/∂P = 2 (‖G‖ − 1) / ‖G‖ · G·∇ₓ(∂s/∂P)` with `G = ∇s`; the directional
/// derivative comes from one forward-mode pass along `G` through the
/// parameter gradient, with each sample's closest element held fixed.
pub fn eikonal_triplane_gradient(field: &DecodedField, samples: &[Vec3<f64>]) -> Result<(f64, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::Empty("eikonal samples"));
    }
    let n = samples.len() as f64;
    let len = field.triplane.data().len();
    let d_max = Dual::constant(field.d_max);
    let chunk = samples.len().div_ceil(4 * rayon::current_num_threads()).max(16);
    let partial: Vec<(Vec<f64>, Vec<f64>)> = samples
        .par_chunks(chunk)
        .map(|chunk| {
            let mut acc = vec![Dual::constant(0.0); len];
            let mut terms = Vec::with_capacity(chunk.len());
            for &x in chunk {
                let m = field.locate(x)?;
                let mut g = Vec3::zero();
                for k in 0..3 {
                    let mut xd = x.cast::<Dual<f64>>();
                    xd[k].eps = 1.0;
                    g[k] = field.value_at(&m, xd)?.eps;
                }
                let norm = g.norm();
                terms.push((norm - 1.0).powi(2));
                if norm == 0.0 {
                    continue;
                }
                let xd = Vec3::new(Dual::new(x.x, g.x), Dual::new(x.y, g.y), Dual::new(x.z, g.z));
                let pt = m.coords_at(&field.index, xd, d_max);
                field.accumulate_sdf_grad(pt, Dual::constant(2.0 * (norm - 1.0) / norm / n), &mut acc)?;
            }
            Ok((terms, acc.into_iter().map(|d| d.eps).collect()))
        })
        .collect::<Result<_>>()?;
    let mut grad = vec![0.0; len];
    let mut terms = Vec::with_capacity(samples.len());
    for (t, g) in partial {
        terms.extend(t);
        for (o, v) in grad.iter_mut().zip(g) {
            *o += v;
        }
    }
    Ok((pairwise_sum(&terms) / n, grad))
}

/// Mean `|s(a) − s(b)|` over seam pairs for any texture-space field.
pub fn seam_loss_with(sdf: impl Fn([f64; 3]) -> Result<f64>, pairs: &[SeamSamplePair<f64>]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("seam sample pairs"));
    }
    let terms: Vec<f64> = pairs.iter().map(|p| Ok((sdf(p.a.coords())? - sdf(p.b.coords())?).abs())).collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms) / pairs.len() as f64)
}

/// Seam loss of a decoded field with its gradient with respect to the
/// tri-plane values; network weights stay fixed.
pub fn seam_loss(field: &DecodedField, pairs: &[SeamSamplePair<f64>]) -> Result<(f64, Vec<f64>)> {
    let value = seam_loss_with(|pt| field.sdf_utts(pt), pairs)?;
    let mut grad = vec![0.0; field.triplane.data().len()];
    let inv = 1.0 / pairs.len() as f64;
    for p in pairs {
        let (a, b) = (p.a.coords(), p.b.coords());
        let diff = field.sdf_utts(a)? - field.sdf_utts(b)?;
        if diff == 0.0 {
            continue;
        }
        let w = diff.signum() * inv;
        field.accumulate_sdf_grad(a, w, &mut grad)?;
        field.accumulate_sdf_grad(b, -w, &mut grad)?;
    }
    Ok((value, grad))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdfVertexLoss {
    /// Mean `|s(v_i)|`.
    pub value: f64,
    /// `sign(s_i) ∇s(v_i) / N`, zero where `s_i = 0`.
    pub gradient: Vec<Vec3<f64>>,
    /// Signed `s(v_i)`.
    pub values: Vec<f64>,
    /// `∇s(v_i)`.
    pub field_gradients: Vec<Vec3<f64>>,
}

/// Pulls template vertices onto the field's zero set. Vertices outside a
/// decoded field's shell are reported together.
pub fn sdf_vertex_loss(field: &SdfField, positions: &[Vec3<f64>]) -> Result<SdfVertexLoss> {
    if positions.is_empty() {
        return Err(Error::Empty("vertices"));
    }
    if let SdfField::Decoded(d) = field {
        let out: Vec<usize> = positions
            .par_iter()
            .enumerate()
            .filter(|(_, &x)| d.locate(x).is_err())
            .map(|(i, _)| i)
            .collect();
        if !out.is_empty() {
            return Err(Error::OutOfRange(out));
        }
    }
    let inv = 1.0 / positions.len() as f64;
    let per: Vec<(f64, Vec3<f64>)> =
        positions.par_iter().map(|&x| Ok((field.value(x)?, field.gradient(x)?))).collect::<Result<_>>()?;
    let terms: Vec<f64> = per.iter().map(|p| p.0.abs()).collect();
    let gradient = per.iter().map(|&(s, g)| if s == 0.0 { Vec3::zero() } else { g * (s.signum() * inv) }).collect();
    let (values, field_gradients) = per.into_iter().unzip();
    Ok(SdfVertexLoss { value: pairwise_sum(&terms) * inv, gradient, values, field_gradients })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{random_decoded, FeatureTriplane};
    use crate::losses::check::{check_gradients, GRADIENT_CHECK_STEP};
    use crate::mesh::vertex_normals;
    use crate::primitives;
    use crate::mesh::extract_seams;
    use crate::utts::seam_sample_pairs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shell_points(field: &DecodedField, n: usize, seed: u64) -> Vec<Vec3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let dir = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
                dir * (1.0 + rng.gen_range(-0.5..0.5) * field.d_max)
            })
            .collect()
    }

    fn with_values(field: &DecodedField, values: &[f64]) -> DecodedField {
        let mut f = field.clone();
        f.triplane = FeatureTriplane::new(f.triplane.resolution(), f.triplane.channels(), values.to_vec()).unwrap();
        f
    }

    #[test]
    fn plane_and_scaled_sphere() {
        let pts = [Vec3::new(0.3, 2.0, -1.0), Vec3::new(-4.0, 0.1, 0.5)];
        let plane = SdfField::Plane { normal: Vec3::unit_z(), offset: 0.2 };
        assert_eq!(eikonal_loss(&plane, &pts).unwrap().value, 0.0);
        let sphere = SdfField::Sphere { center: Vec3::zero(), radius: 1.0 };
        let scaled = SdfField::Scaled { factor: 2.0, inner: Box::new(sphere) };
        assert!((eikonal_loss(&scaled, &pts).unwrap().value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn decoded_eikonal_recomputed_from_gradients() {
        let field = random_decoded(3);
        let pts = shell_points(&field, 30, 1);
        let sdf = SdfField::decoded(field.clone()).unwrap();
        let loss = eikonal_loss(&sdf, &pts).unwrap();
        let manual: f64 =
            pts.iter().map(|&x| (sdf.gradient_dual(x).unwrap().norm() - 1.0).powi(2)).sum::<f64>() / pts.len() as f64;
        assert!((loss.value - manual).abs() < 1e-12);
        let (v, _) = eikonal_triplane_gradient(&field, &pts).unwrap();
        assert!((v - loss.value).abs() < 1e-12);
    }

    #[test]
    fn out_of_domain_sample() {
        let sdf = SdfField::decoded(random_decoded(3)).unwrap();
        assert!(matches!(eikonal_loss(&sdf, &[Vec3::splat(3.0)]), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn eikonal_triplane_gradient_matches_fd() {
        let field = random_decoded(5);
        let pts = shell_points(&field, 12, 2);
        let loss = |p: &[f64]| eikonal_triplane_gradient(&with_values(&field, p), &pts);
        let c = check_gradients(loss, field.triplane.data(), GRADIENT_CHECK_STEP).unwrap();
        assert!(c.passes(), "{c:?}");
    }

    fn seam_pairs() -> Vec<SeamSamplePair<f64>> {
        let m = primitives::two_chart_sphere::<f64>(1.0, 2);
        let seams = extract_seams(&m).unwrap();
        seam_sample_pairs(&seams, 40, 0.01, (-0.05, 0.05), 0.1, 9).unwrap()
    }

    #[test]
    fn seam_loss_fixed_points() {
        let pairs = seam_pairs();
        assert_eq!(seam_loss_with(|_| Ok(0.25), &pairs).unwrap(), 0.0);
        assert_eq!(seam_loss_with(|p| Ok(p[2] * p[2] - 0.3), &pairs).unwrap(), 0.0);
        let expect = pairs.iter().map(|p| (p.a.u.x - p.b.u.x).abs()).sum::<f64>() / pairs.len() as f64;
        assert!((seam_loss_with(|p| Ok(p[0]), &pairs).unwrap() - expect).abs() < 1e-15);
        assert!(expect > 0.0);
        assert!(matches!(seam_loss_with(|p| Ok(p[0]), &[]), Err(Error::Empty(_))));
    }

    #[test]
    fn seam_gradient_matches_fd() {
        let field = random_decoded(7);
        let pairs = seam_pairs();
        let loss = |p: &[f64]| seam_loss(&with_values(&field, p), &pairs);
        let c = check_gradients(loss, field.triplane.data(), GRADIENT_CHECK_STEP).unwrap();
        assert!(c.passes(), "{c:?}");
    }

    #[test]
    fn sdf_vertex_loss_on_sphere() {
        let sphere = SdfField::Sphere { center: Vec3::zero(), radius: 1.0 };
        let m = primitives::icosphere::<f64>(1.0, 2);
        assert!(sdf_vertex_loss(&sphere, m.vertices()).unwrap().value < 1e-15);
        let big: Vec<Vec3<f64>> = m.vertices().iter().map(|&v| v * 1.2).collect();
        assert!((sdf_vertex_loss(&sphere, &big).unwrap().value - 0.2).abs() < 1e-12);
    }

    #[test]
    fn sdf_vertex_gradient_matches_fd() {
        let flat = |v: &[Vec3<f64>]| v.iter().flat_map(|p| p.to_array()).collect::<Vec<f64>>();
        let unflat = |p: &[f64]| p.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect::<Vec<_>>();
        let capsule = SdfField::Capsule { a: Vec3::new(0.0, -0.3, 0.0), b: Vec3::new(0.1, 0.4, 0.2), radius: 0.5 };
        let m = primitives::icosphere::<f64>(0.7, 1);
        let loss = |p: &[f64]| {
            let r = sdf_vertex_loss(&capsule, &unflat(p))?;
            Ok((r.value, flat(&r.gradient)))
        };
        assert!(check_gradients(loss, &flat(m.vertices()), GRADIENT_CHECK_STEP).unwrap().passes());

        // Decoded field: vertices pushed off the template along their normals
        // stay in their vertex's region under the probe steps.
        let field = random_decoded(11);
        let tmpl = primitives::icosphere::<f64>(1.0, 2);
        let n = vertex_normals(&tmpl, tmpl.vertices()).unwrap();
        let pts: Vec<Vec3<f64>> = tmpl.vertices().iter().zip(&n).take(20).map(|(&v, &n)| v + n * 0.03).collect();
        let sdf = SdfField::decoded(field).unwrap();
        let loss = |p: &[f64]| {
            let r = sdf_vertex_loss(&sdf, &unflat(p))?;
            Ok((r.value, flat(&r.gradient)))
        };
        let c = check_gradients(loss, &flat(&pts), GRADIENT_CHECK_STEP).unwrap();
        assert!(c.passes(), "{c:?}");
    }

    #[test]
    fn out_of_range_vertices_are_listed() {
        let sdf = SdfField::decoded(random_decoded(1)).unwrap();
        let pts = vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.0, 1.02, 0.0), Vec3::zero()];
        match sdf_vertex_loss(&sdf, &pts) {
            Err(Error::OutOfRange(v)) => assert_eq!(v, vec![1, 3]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constant_decoded_field_has_zero_seam_loss() {
        let mut field = random_decoded(2);
        for l in field.geometry.layers_mut() {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        let (v, g) = seam_loss(&field, &seam_pairs()).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }
}
