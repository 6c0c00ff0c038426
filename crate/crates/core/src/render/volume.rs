use crate::real::softplus;

/// `ln Φ(s)` with `Φ(s) = 1 / (1 + e^{−z s})`.
#[inline]
fn ln_phi(zs: f64) -> f64 {
    -softplus(-zs)
}

/// Opacity of the interval between consecutive SDF samples,
/// `max((Φ(s_i) − Φ(s_{i+1})) / Φ(s_i), 0)`, evaluated as
/// `−expm1(ln Φ(s_{i+1}) − ln Φ(s_i))` so it stays accurate deep inside or
/// outside the surface. Returns `n − 1` values.
pub fn sdf_to_alpha(s: &[f64], z: f64) -> Vec<f64> {
    s.windows(2).map(|w| interval_alpha(w[0], w[1], z)).collect()
}

#[inline]
pub fn interval_alpha(s0: f64, s1: f64, z: f64) -> f64 {
    let a = -(ln_phi(z * s1) - ln_phi(z * s0)).exp_m1();
    if a > 0.0 {
        a.min(1.0)
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integrated {
    pub color: [f64; 3],
    pub opacity: f64,
    /// `Σ T α t / opacity`; `None` for a transparent ray.
    pub depth: Option<f64>,
}

/// Front-to-back compositing, `c = Σ T_i α_i c_i` with
/// `T_i = Π_{j<i} (1 − α_j)`.
pub fn volume_integrate(alphas: &[f64], colors: &[[f64; 3]], depths: &[f64]) -> Integrated {
    assert!(alphas.len() == colors.len() && alphas.len() == depths.len(), "volume_integrate: length mismatch");
    let mut color = [0.0; 3];
    let (mut opacity, mut depth, mut transmittance) = (0.0, 0.0, 1.0);
    for ((&a, c), &t) in alphas.iter().zip(colors).zip(depths) {
        let w = transmittance * a;
        for k in 0..3 {
            color[k] += w * c[k];
        }
        opacity += w;
        depth += w * t;
        transmittance *= 1.0 - a;
    }
    Integrated { color, opacity, depth: (opacity > 0.0).then(|| depth / opacity) }
}

/// Weights `T_i α_i` of [`volume_integrate`].
pub fn sample_weights(alphas: &[f64]) -> Vec<f64> {
    let mut transmittance = 1.0;
    alphas
        .iter()
        .map(|&a| {
            let w = transmittance * a;
            transmittance *= 1.0 - a;
            w
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn phi(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn constant_sdf_is_transparent() {
        assert_eq!(sdf_to_alpha(&[0.3, 0.3, 0.3], 50.0), vec![0.0, 0.0]);
    }

    #[test]
    fn crossing_matches_the_direct_ratio() {
        let a = sdf_to_alpha(&[0.1, -0.1], 10.0)[0];
        let direct = (phi(1.0) - phi(-1.0)) / phi(1.0);
        assert!((a - direct).abs() < 1e-15);
        assert!((a - 0.632121).abs() < 5e-7);
    }

    #[test]
    fn exiting_the_surface_is_clamped() {
        assert_eq!(sdf_to_alpha(&[-0.1, 0.1], 10.0), vec![0.0]);
    }

    #[test]
    fn stays_finite_far_from_the_surface() {
        let a = sdf_to_alpha(&[-50.0, -50.1, 50.0, -50.0], 1e4);
        assert!(a.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
        assert_eq!(a[2], 1.0);
    }

    #[test]
    fn empty_and_opaque_rays() {
        let c = [[0.2, 0.4, 0.6], [1.0, 1.0, 1.0]];
        let r = volume_integrate(&[0.0, 0.0], &c, &[1.0, 2.0]);
        assert_eq!((r.color, r.opacity, r.depth), ([0.0; 3], 0.0, None));
        let r = volume_integrate(&[1.0, 0.7], &c, &[1.0, 2.0]);
        assert_eq!((r.color, r.opacity, r.depth), (c[0], 1.0, Some(1.0)));
    }

    #[test]
    fn two_half_alphas() {
        let c = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let r = volume_integrate(&[0.5, 0.5], &c, &[1.0, 3.0]);
        assert_eq!(sample_weights(&[0.5, 0.5]), vec![0.5, 0.25]);
        assert_eq!(r.color, [0.5, 0.25, 0.0]);
        assert_eq!(r.opacity, 0.75);
        assert!((r.depth.unwrap() - (0.5 + 0.75) / 0.75).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn opacity_is_bounded_and_transmittance_decreases(alphas in prop::collection::vec(0.0f64..=1.0, 1..40)) {
            let n = alphas.len();
            let r = volume_integrate(&alphas, &vec![[1.0; 3]; n], &vec![1.0; n]);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&r.opacity));
            let mut t = 1.0;
            for &a in &alphas {
                let next = t * (1.0 - a);
                prop_assert!(next <= t);
                t = next;
            }
        }

        #[test]
        fn alpha_depends_on_z_times_s_only(
            s in prop::collection::vec(-1.0f64..1.0, 2..20),
            z in 1.0f64..500.0,
            k in -6i32..6,
        ) {
            // Power-of-two scaling keeps every product z·s bit-identical.
            let c = 2f64.powi(k);
            let scaled: Vec<f64> = s.iter().map(|v| v * c).collect();
            prop_assert_eq!(sdf_to_alpha(&s, z), sdf_to_alpha(&scaled, z / c));
        }

        #[test]
        fn alpha_in_unit_interval(s in prop::collection::vec(-10.0f64..10.0, 2..20), z in 0.01f64..1e5) {
            for a in sdf_to_alpha(&s, z) {
                prop_assert!((0.0..=1.0).contains(&a));
            }
        }
    }
}
