use crate::real::Real;

/// Frequencies used for texture-space positions.
pub const POSITION_FREQUENCIES: usize = 6;
/// Frequencies used for view directions.
pub const DIRECTION_FREQUENCIES: usize = 4;

/// Output length of [`positional_encoding`] for an `n`-vector.
pub fn encoded_dim(n: usize, frequencies: usize) -> usize {
    n * (1 + 2 * frequencies)
}

/// `[x, sin(2⁰πx), cos(2⁰πx), …, sin(2^{L−1}πx), cos(2^{L−1}πx)]`, each
/// block applied component-wise to the whole vector.
pub fn positional_encoding<S: Real>(x: &[S], frequencies: usize) -> Vec<S> {
    let mut out = Vec::with_capacity(encoded_dim(x.len(), frequencies));
    out.extend_from_slice(x);
    let mut scale = S::pi();
    for _ in 0..frequencies {
        out.extend(x.iter().map(|&v| (v * scale).sin()));
        out.extend(x.iter().map(|&v| (v * scale).cos()));
        scale = scale * S::two();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_input() {
        let e = positional_encoding(&[0.0f64; 3], 5);
        assert!(e[..3].iter().all(|&v| v == 0.0));
        for k in 0..5 {
            let base = 3 + 6 * k;
            assert!(e[base..base + 3].iter().all(|&v| v == 0.0));
            assert!(e[base + 3..base + 6].iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn dimension() {
        assert_eq!(positional_encoding(&[0.1f64, 0.2, 0.3], POSITION_FREQUENCIES).len(), 39);
        assert_eq!(encoded_dim(3, DIRECTION_FREQUENCIES), 27);
    }

    #[test]
    fn two_frequencies_by_hand() {
        let e = positional_encoding(&[1.0f64, 0.0, 0.0], 2);
        let expected = [
            1.0, 0.0, 0.0,
            PI.sin(), 0.0, 0.0,
            PI.cos(), 1.0, 1.0,
            (2.0 * PI).sin(), 0.0, 0.0,
            (2.0 * PI).cos(), 1.0, 1.0,
        ];
        assert_eq!(e.len(), expected.len());
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn periodic_terms_bounded(x in prop::array::uniform3(-50.0..50.0f64), l in 0usize..8) {
            let e = positional_encoding(&x, l);
            prop_assert!(e[3..].iter().all(|v| v.abs() <= 1.0));
        }
    }
}
