//! Time derivatives of sampled reduced trajectories by second-order finite
//! differences: central in the interior, three-point one-sided at the ends.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn estimate_derivatives(reduced_states: &DMatrix<f64>, delta: f64) -> Result<DMatrix<f64>> {
    let (r, k) = reduced_states.shape();
    if k < 3 {
        return Err(Error::InvalidArgument(format!(
            "derivative estimation needs at least 3 snapshots, got {k}"
        )));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {delta}"
        )));
    }
    let s = reduced_states;
    let inv2 = 0.5 / delta;
    let mut out = DMatrix::zeros(r, k);
    for i in 0..r {
        out[(i, 0)] = (-3.0 * s[(i, 0)] + 4.0 * s[(i, 1)] - s[(i, 2)]) * inv2;
        for j in 1..k - 1 {
            out[(i, j)] = (s[(i, j + 1)] - s[(i, j - 1)]) * inv2;
        }
        out[(i, k - 1)] = (3.0 * s[(i, k - 1)] - 4.0 * s[(i, k - 2)] + s[(i, k - 3)]) * inv2;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(k: usize, delta: f64, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        DMatrix::from_fn(1, k, |_, j| f(j as f64 * delta))
    }

    #[test]
    fn constants_have_zero_derivative() {
        let d = estimate_derivatives(&DMatrix::from_element(3, 10, 4.2), 0.1).unwrap();
        assert!(d.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn linear_and_quadratic_are_exact() {
        let delta = 0.005;
        let lin = estimate_derivatives(&sample(50, delta, |t| 2.0 - 3.0 * t), delta).unwrap();
        assert!(lin.iter().all(|&v| (v + 3.0).abs() < 1e-10 * 3.0));
        let quad =
            estimate_derivatives(&sample(50, delta, |t| 1.0 + t + 4.0 * t * t), delta).unwrap();
        for j in 0..50 {
            let exact = 1.0 + 8.0 * j as f64 * delta;
            assert!(
                (quad[(0, j)] - exact).abs() < 1e-10 * exact.abs().max(1.0),
                "k={j}"
            );
        }
    }

    #[test]
    fn too_few_snapshots() {
        assert!(estimate_derivatives(&DMatrix::zeros(2, 2), 0.1).is_err());
        assert!(estimate_derivatives(&DMatrix::zeros(2, 5), 0.0).is_err());
    }

    #[test]
    fn linearity() {
        let a = DMatrix::from_fn(2, 7, |i, j| ((i + 1) * j * j) as f64);
        let b = DMatrix::from_fn(2, 7, |i, j| (j as f64).sin() + i as f64);
        let lhs = estimate_derivatives(&(&a * 2.0 - &b * 0.5), 0.3).unwrap();
        let rhs = estimate_derivatives(&a, 0.3).unwrap() * 2.0
            - estimate_derivatives(&b, 0.3).unwrap() * 0.5;
        assert!((lhs - rhs).amax() < 1e-12);
    }
}
