//! Proper orthogonal decomposition: deterministic and randomized SVD, energy
//! bookkeeping, and rank selection.

use std::io::Write;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this many snapshot columns the randomized method is used.
pub const DETERMINISTIC_COLUMN_LIMIT: usize = 2000;

/// Thin singular value decomposition X = left · diag(σ) · rightᵀ.
#[derive(Clone, Debug)]
pub struct Svd {
    pub left: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns (M×k).
    pub right: DMatrix<f64>,
}

impl Svd {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.left.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        scaled * self.right.transpose()
    }

    fn truncate(mut self, k: usize) -> Self {
        let k = k.min(self.singular_values.len());
        self.singular_values.truncate(k);
        self.left = self.left.columns(0, k).into_owned();
        self.right = self.right.columns(0, k).into_owned();
        self
    }
}

fn check_finite(x: &DMatrix<f64>) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("SVD input matrix".into()))
    }
}

/// Dense SVD of a small or moderately sized matrix. Tall inputs are reduced
/// by a Householder QR first so the iterative phase works on an M×M factor.
pub fn deterministic_svd(x: &DMatrix<f64>) -> Result<Svd> {
    check_finite(x)?;
    let (n, m) = x.shape();
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("SVD of an empty matrix".into()));
    }
    if m > n {
        let t = deterministic_svd(&x.transpose())?;
        return Ok(Svd {
            left: t.right,
            singular_values: t.singular_values,
            right: t.left,
        });
    }
    let (q, core) = if n > m {
        let qr = x.clone().qr();
        (Some(qr.q()), qr.r())
    } else {
        (None, x.clone())
    };
    let mut svd = core
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::SolverFailure("SVD iteration did not converge".into()))?;
    svd.sort_by_singular_values();
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let left = match q {
        Some(q) => q * u,
        None => u,
    };
    Ok(Svd {
        left,
        singular_values: svd.singular_values.iter().copied().collect(),
        right: v_t.transpose(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomizedSvdConfig {
    pub target_rank: usize,
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
}

impl Default for RandomizedSvdConfig {
    fn default() -> Self {
        Self {
            target_rank: 50,
            oversample: 10,
            power_iters: 2,
            seed: 0,
        }
    }
}

fn orthonormalize(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

/// Gaussian range-finder SVD returning the leading `target_rank` triplets.
pub fn randomized_svd(
    x: &DMatrix<f64>,
    target_rank: usize,
    oversample: usize,
    power_iters: usize,
    seed: u64,
) -> Result<Svd> {
    check_finite(x)?;
    let (n, m) = x.shape();
    let k = target_rank + oversample;
    if target_rank == 0 || k > n.min(m) {
        return Err(Error::InvalidArgument(format!(
            "randomized SVD needs 1 ≤ r_t and r_t + oversample = {k} ≤ min(N, M) = {}",
            n.min(m)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(m, k, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormalize(x * omega);
    for _ in 0..power_iters {
        let z = orthonormalize(x.tr_mul(&q));
        q = orthonormalize(x * z);
    }
    let b = q.tr_mul(x);
    let small = deterministic_svd(&b)?;
    Ok(Svd {
        left: q * small.left,
        singular_values: small.singular_values,
        right: small.right,
    }
    .truncate(target_rank))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RankSelection {
    /// Smallest rank whose cumulative energy reaches the threshold.
    Energy(f64),
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PodOptions {
    pub rank: RankSelection,
    pub randomized: RandomizedSvdConfig,
    pub deterministic_limit: usize,
}

impl Default for PodOptions {
    fn default() -> Self {
        Self {
            rank: RankSelection::Energy(0.99998),
            randomized: RandomizedSvdConfig::default(),
            deterministic_limit: DETERMINISTIC_COLUMN_LIMIT,
        }
    }
}

/// Orthonormal POD basis V_r together with the spectrum it was cut from.
#[derive(Clone, Debug, PartialEq)]
pub struct PodBasis {
    basis: DMatrix<f64>,
    singular_values: Vec<f64>,
}

impl PodBasis {
    pub fn from_svd(svd: &Svd, r: usize) -> Result<Self> {
        if r == 0 || r > svd.singular_values.len() {
            return Err(Error::InvalidArgument(format!(
                "rank {r} outside 1..={}",
                svd.singular_values.len()
            )));
        }
        Ok(Self {
            basis: svd.left.columns(0, r).into_owned(),
            singular_values: svd.singular_values.clone(),
        })
    }

    /// Assembles a basis from stored parts (archive loading).
    pub fn from_parts(basis: DMatrix<f64>, singular_values: Vec<f64>) -> Result<Self> {
        if basis.ncols() == 0 || basis.ncols() > singular_values.len() {
            return Err(Error::InvalidArgument(format!(
                "basis has {} columns but the spectrum holds {} values",
                basis.ncols(),
                singular_values.len()
            )));
        }
        Ok(Self {
            basis,
            singular_values,
        })
    }

    pub fn compute(x: &DMatrix<f64>, options: &PodOptions) -> Result<Self> {
        let svd = if x.ncols() <= options.deterministic_limit {
            deterministic_svd(x)?
        } else {
            let cfg = options.randomized;
            let max_target = x.nrows().min(x.ncols()).saturating_sub(cfg.oversample);
            randomized_svd(
                x,
                cfg.target_rank.min(max_target),
                cfg.oversample,
                cfg.power_iters,
                cfg.seed,
            )?
        };
        let r = match options.rank {
            RankSelection::Energy(threshold) => choose_rank(&svd.singular_values, threshold)?,
            RankSelection::Fixed(r) => r,
        };
        Self::from_svd(&svd, r)
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn target_rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn state_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn cumulative_energy(&self) -> f64 {
        cumulative_energy(&self.singular_values, self.rank()).expect("rank within spectrum")
    }

    /// V_rᵀ X.
    pub fn project(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.state_dim() {
            return Err(Error::DimensionMismatch(format!(
                "projecting {} rows onto a basis of dimension {}",
                x.nrows(),
                self.state_dim()
            )));
        }
        Ok(self.basis.tr_mul(x))
    }

    /// V_r X̂.
    pub fn lift(&self, reduced: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if reduced.nrows() != self.rank() {
            return Err(Error::DimensionMismatch(format!(
                "lifting {} reduced rows with a rank-{} basis",
                reduced.nrows(),
                self.rank()
            )));
        }
        Ok(&self.basis * reduced)
    }
}

pub fn cumulative_energy(singular_values: &[f64], r: usize) -> Result<f64> {
    if r == 0 || r > singular_values.len() {
        return Err(Error::InvalidArgument(format!(
            "rank {r} outside 1..={}",
            singular_values.len()
        )));
    }
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return Err(Error::Degenerate("spectrum has zero energy".into()));
    }
    let kept: f64 = singular_values[..r].iter().map(|s| s * s).sum();
    Ok(kept / total)
}

/// 1 − cumulative energy, summed from the tail to avoid cancellation.
pub fn residual_energy(singular_values: &[f64], r: usize) -> Result<f64> {
    cumulative_energy(singular_values, r)?;
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    let tail: f64 = singular_values[r..].iter().map(|s| s * s).sum();
    Ok(tail / total)
}

/// ‖X − V_r V_rᵀ X‖²_F / ‖X‖²_F.
pub fn projection_error(x: &DMatrix<f64>, basis: &PodBasis) -> Result<f64> {
    let total = x.norm_squared();
    if total == 0.0 {
        return Err(Error::Degenerate(
            "projection error of a zero matrix".into(),
        ));
    }
    let coeffs = basis.project(x)?;
    let residual = x - basis.basis() * coeffs;
    Ok(residual.norm_squared() / total)
}

pub fn choose_rank(singular_values: &[f64], energy_threshold: f64) -> Result<usize> {
    if !(energy_threshold > 0.0 && energy_threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "energy threshold {energy_threshold} must lie in (0, 1)"
        )));
    }
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return Err(Error::Degenerate("spectrum has zero energy".into()));
    }
    let mut kept = 0.0;
    for (i, s) in singular_values.iter().enumerate() {
        kept += s * s;
        if kept / total >= energy_threshold {
            return Ok(i + 1);
        }
    }
    Err(Error::ThresholdUnreachable {
        threshold: energy_threshold,
        reachable: kept / total,
    })
}

/// CSV with columns `index,sigma,cumulative_energy,residual_energy`.
pub fn write_spectrum_csv<W: Write>(singular_values: &[f64], mut out: W) -> std::io::Result<()> {
    writeln!(out, "index,sigma,cumulative_energy,residual_energy")?;
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    let mut tail: f64 = total;
    for (i, s) in singular_values.iter().enumerate() {
        tail -= s * s;
        let residual = if total > 0.0 {
            tail.max(0.0) / total
        } else {
            0.0
        };
        writeln!(
            out,
            "{},{:.17e},{:.17e},{:.17e}",
            i + 1,
            s,
            1.0 - residual,
            residual
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn random_matrix(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, m, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn diagonal_matrix_spectrum() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let svd = deterministic_svd(&x).unwrap();
        assert!((svd.singular_values[0] - 2.0).abs() < 1e-14);
        assert!((svd.singular_values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_one_outer_product() {
        let u = DVector::from_vec(vec![1.0, 2.0, 2.0]);
        let v = DVector::from_vec(vec![3.0, 4.0]);
        let svd = deterministic_svd(&(&u * v.transpose())).unwrap();
        assert!((svd.singular_values[0] - 15.0).abs() < 1e-12);
        assert!(svd.singular_values[1].abs() < 1e-12);
    }

    #[test]
    fn random_matrix_reconstructs() {
        let x = random_matrix(200, 50, 7);
        let svd = deterministic_svd(&x).unwrap();
        let rel = (svd.reconstruct() - &x).norm() / x.norm();
        assert!(rel < 1e-10, "{rel}");
        let wide = deterministic_svd(&x.transpose()).unwrap();
        assert!((wide.reconstruct() - x.transpose()).norm() / x.norm() < 1e-10);
        for (a, b) in svd.singular_values.iter().zip(&wide.singular_values) {
            assert!((a - b).abs() < 1e-10 * a.max(1.0));
        }
    }

    #[test]
    fn non_finite_input_rejected() {
        let mut x = DMatrix::zeros(3, 2);
        x[(1, 1)] = f64::NAN;
        assert!(matches!(deterministic_svd(&x), Err(Error::NonFinite(_))));
    }

    #[test]
    fn exact_low_rank_has_vanishing_tail() {
        let x = random_matrix(80, 3, 1) * random_matrix(3, 40, 2);
        let svd = randomized_svd(&x, 5, 10, 2, 3).unwrap();
        assert_eq!(svd.singular_values.len(), 5);
        assert!(svd.singular_values[3] <= 1e-10 * svd.singular_values[0]);
        assert!(svd.singular_values[4] <= 1e-10 * svd.singular_values[0]);
    }

    #[test]
    fn randomized_is_deterministic_per_seed() {
        let x = random_matrix(60, 30, 4);
        let a = randomized_svd(&x, 5, 5, 1, 11).unwrap();
        let b = randomized_svd(&x, 5, 5, 1, 11).unwrap();
        assert_eq!(a.singular_values, b.singular_values);
        assert_eq!(a.left, b.left);
    }

    #[test]
    fn randomized_rank_bounds_checked() {
        let x = random_matrix(20, 10, 4);
        assert!(randomized_svd(&x, 5, 10, 2, 0).is_err());
        assert!(randomized_svd(&x, 0, 2, 2, 0).is_err());
    }

    #[test]
    fn energy_arithmetic() {
        assert!((cumulative_energy(&[2.0, 1.0], 1).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(cumulative_energy(&[2.0, 1.0], 2).unwrap(), 1.0);
        assert!(cumulative_energy(&[2.0, 1.0], 3).is_err());
        assert!(cumulative_energy(&[2.0, 1.0], 0).is_err());
    }

    #[test]
    fn choose_rank_examples() {
        let s = [2.0, 1.0, 0.01];
        assert_eq!(choose_rank(&s, 0.79).unwrap(), 1);
        assert_eq!(choose_rank(&s, 0.999).unwrap(), 2);
        assert!(choose_rank(&s, 1.0).is_err());
        assert!(matches!(choose_rank(&[1.0, 0.0], 0.9999999), Ok(1)));
    }

    #[test]
    fn projection_error_extremes() {
        let basis =
            PodBasis::from_parts(DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]), vec![1.0])
                .unwrap();
        let inside = DMatrix::from_row_slice(3, 2, &[1.0, -2.0, 0.0, 0.0, 0.0, 0.0]);
        let outside = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 3.0, 2.0, 0.0]);
        assert_eq!(projection_error(&inside, &basis).unwrap(), 0.0);
        assert_eq!(projection_error(&outside, &basis).unwrap(), 1.0);
        assert!(matches!(
            projection_error(&DMatrix::zeros(3, 2), &basis),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn energy_and_projection_are_monotone() {
        let x = random_matrix(40, 12, 9);
        let svd = deterministic_svd(&x).unwrap();
        let mut prev_cum = 0.0;
        let mut prev_proj = f64::INFINITY;
        for r in 1..=12 {
            let cum = cumulative_energy(&svd.singular_values, r).unwrap();
            let proj = projection_error(&x, &PodBasis::from_svd(&svd, r).unwrap()).unwrap();
            assert!(cum >= prev_cum);
            assert!(proj <= prev_proj + 1e-15);
            assert!((cum + proj - 1.0).abs() < 1e-12);
            prev_cum = cum;
            prev_proj = proj;
        }
    }

    #[test]
    fn spectrum_csv_layout() {
        let mut buf = Vec::new();
        write_spectrum_csv(&[2.0, 1.0], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "index,sigma,cumulative_energy,residual_energy");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,2.0"));
    }
}
