use crate::error::{Error, Result};

/// Central-difference step used by the gradient harness.
pub const GRADIENT_CHECK_STEP: f64 = 1e-5;
/// Largest accepted relative gradient error.
pub const GRADIENT_CHECK_TOLERANCE: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientCheck {
    /// `max_k |g_a − g_fd| / max(1, |g_a|)`.
    pub max_rel_err: f64,
    pub worst: usize,
}

impl GradientCheck {
    pub fn passes(&self) -> bool {
        self.max_rel_err <= GRADIENT_CHECK_TOLERANCE
    }
}

/// Compares the analytic gradient returned by `loss` at `params` with
/// central differences of its value, coordinate by coordinate.
pub fn check_gradients<F>(loss: F, params: &[f64], h: f64) -> Result<GradientCheck>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h}")));
    }
    let (_, analytic) = loss(params)?;
    if analytic.len() != params.len() {
        return Err(Error::dim("gradient entries", params.len(), analytic.len()));
    }
    let mut probe = params.to_vec();
    let mut out = GradientCheck { max_rel_err: 0.0, worst: 0 };
    for k in 0..params.len() {
        probe[k] = params[k] + h;
        let hi = loss(&probe)?.0;
        probe[k] = params[k] - h;
        let lo = loss(&probe)?.0;
        probe[k] = params[k];
        let fd = (hi - lo) / (2.0 * h);
        let err = (analytic[k] - fd).abs() / analytic[k].abs().max(1.0);
        if err > out.max_rel_err || err.is_nan() {
            out = GradientCheck { max_rel_err: err, worst: k };
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_loss_is_exact() {
        let w = [0.3, -1.2, 4.0, 0.001];
        let loss = |p: &[f64]| Ok((p.iter().zip(&w).map(|(a, b)| a * b).sum(), w.to_vec()));
        let r = check_gradients(loss, &[1.0, 2.0, -3.0, 0.5], GRADIENT_CHECK_STEP).unwrap();
        assert!(r.max_rel_err <= 1e-10, "{r:?}");
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let loss = |p: &[f64]| Ok((p[0] * p[0] + p[1].sin(), vec![2.0 * p[0], p[1].cos() * 1.01]));
        let r = check_gradients(loss, &[0.7, 0.4], GRADIENT_CHECK_STEP).unwrap();
        assert!(!r.passes());
        assert_eq!(r.worst, 1);
    }

    #[test]
    fn wrong_length_gradient() {
        let loss = |_: &[f64]| Ok((0.0, vec![0.0]));
        assert!(check_gradients(loss, &[1.0, 2.0], 1e-5).is_err());
    }
}
