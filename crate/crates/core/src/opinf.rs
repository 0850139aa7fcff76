//! Operator inference: per-parameter Tikhonov-regularized regression for the
//! quadratic reduced operators, and the regularization grid search.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::diff::estimate_derivatives;
use crate::error::{Error, Result};
use crate::features::{build_data_matrix, compact_kron_into, FeatureDims};
use crate::metrics::{relative_state_error, ErrorReport};
use crate::pod::PodBasis;
use crate::rom::{integrate, reconstruct};
use crate::scaling::ScalingTransform;
use crate::signal::InputSignal;
use crate::snapshots::SnapshotSet;

/// Reduced operators (ĉ, Â, Ĥ, B̂) of dŝ/dt = ĉ + Âŝ + Ĥ(ŝ⊗ŝ) + B̂u.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedOperatorSet {
    pub c_hat: DVector<f64>,
    pub a_hat: DMatrix<f64>,
    pub h_hat: DMatrix<f64>,
    pub b_hat: DMatrix<f64>,
    dims: FeatureDims,
}

impl ReducedOperatorSet {
    pub fn new(
        c_hat: DVector<f64>,
        a_hat: DMatrix<f64>,
        h_hat: DMatrix<f64>,
        b_hat: DMatrix<f64>,
    ) -> Result<Self> {
        let dims = FeatureDims::new(c_hat.len(), b_hat.ncols())?;
        let r = dims.r;
        if a_hat.shape() != (r, r) || h_hat.shape() != (r, dims.quadratic()) || b_hat.nrows() != r {
            return Err(Error::DimensionMismatch(format!(
                "operator shapes ĉ {}, Â {:?}, Ĥ {:?}, B̂ {:?} are inconsistent",
                r,
                a_hat.shape(),
                h_hat.shape(),
                b_hat.shape()
            )));
        }
        let ops = Self {
            c_hat,
            a_hat,
            h_hat,
            b_hat,
            dims,
        };
        if !ops.is_finite() {
            return Err(Error::NonFinite("reduced operators".into()));
        }
        Ok(ops)
    }

    pub fn dims(&self) -> FeatureDims {
        self.dims
    }

    pub fn is_finite(&self) -> bool {
        self.c_hat.iter().all(|v| v.is_finite())
            && self.a_hat.iter().all(|v| v.is_finite())
            && self.h_hat.iter().all(|v| v.is_finite())
            && self.b_hat.iter().all(|v| v.is_finite())
    }

    /// Ô = [ĉ Â Ĥ B̂] as an r×d(r,m) matrix.
    pub fn stacked(&self) -> DMatrix<f64> {
        let d = self.dims;
        let mut o = DMatrix::zeros(d.r, d.total());
        o.column_mut(0).copy_from(&self.c_hat);
        o.columns_mut(d.linear_offset(), d.r).copy_from(&self.a_hat);
        o.columns_mut(d.quadratic_offset(), d.quadratic())
            .copy_from(&self.h_hat);
        o.columns_mut(d.input_offset(), d.m).copy_from(&self.b_hat);
        o
    }

    pub fn from_stacked(o: &DMatrix<f64>, dims: FeatureDims) -> Result<Self> {
        if o.shape() != (dims.r, dims.total()) {
            return Err(Error::DimensionMismatch(format!(
                "stacked operator is {:?}, expected ({}, {})",
                o.shape(),
                dims.r,
                dims.total()
            )));
        }
        Self::new(
            o.column(0).into_owned(),
            o.columns(dims.linear_offset(), dims.r).into_owned(),
            o.columns(dims.quadratic_offset(), dims.quadratic())
                .into_owned(),
            o.columns(dims.input_offset(), dims.m).into_owned(),
        )
    }

    /// Scratch buffer for [`Self::rhs_into`].
    pub fn workspace(&self) -> Vec<f64> {
        vec![0.0; self.dims.quadratic()]
    }

    pub fn rhs_into(&self, s: &[f64], u: &[f64], quad: &mut [f64], out: &mut [f64]) {
        compact_kron_into(s, quad);
        let r = self.dims.r;
        for i in 0..r {
            let mut acc = self.c_hat[i];
            for (j, sj) in s.iter().enumerate() {
                acc += self.a_hat[(i, j)] * sj;
            }
            for (j, q) in quad.iter().enumerate() {
                acc += self.h_hat[(i, j)] * q;
            }
            for (j, uj) in u.iter().enumerate() {
                acc += self.b_hat[(i, j)] * uj;
            }
            out[i] = acc;
        }
    }

    pub fn rhs(&self, s: &[f64], u: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dims.r);
        let mut quad = self.workspace();
        self.rhs_into(s, u, &mut quad, out.as_mut_slice());
        out
    }
}

/// Penalty weights: λ1 on (ĉ, Â), λ2 on Ĥ, λ3 on B̂.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl Regularization {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64) -> Result<Self> {
        let reg = Self {
            lambda1,
            lambda2,
            lambda3,
        };
        reg.validate()?;
        Ok(reg)
    }

    pub fn validate(&self) -> Result<()> {
        for l in [self.lambda1, self.lambda2, self.lambda3] {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "regularization weights must be positive and finite, got {self:?}"
                )));
            }
        }
        Ok(())
    }

    /// Diagonal of Λ² for the given feature dimensions.
    pub fn squared_diagonal(&self, dims: FeatureDims) -> Vec<f64> {
        let mut diag = vec![self.lambda1 * self.lambda1; 1 + dims.r];
        diag.extend(std::iter::repeat(self.lambda2 * self.lambda2).take(dims.quadratic()));
        diag.extend(std::iter::repeat(self.lambda3 * self.lambda3).take(dims.m));
        diag
    }
}

/// Candidate λ values per block; every list sorted ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizationGrid {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub lambda3: Vec<f64>,
}

/// `count` values spaced uniformly in log10 between 10^lo and 10^hi.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![10f64.powf(lo)],
        _ => (0..count)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64))
            .collect(),
    }
}

impl RegularizationGrid {
    /// Seven log-spaced values per block over [1e-3, 1e3] × [1e0, 1e6] × [1e-3, 1e3].
    pub fn standard() -> Self {
        Self {
            lambda1: logspace(-3.0, 3.0, 7),
            lambda2: logspace(0.0, 6.0, 7),
            lambda3: logspace(-3.0, 3.0, 7),
        }
    }

    pub fn single(reg: Regularization) -> Self {
        Self {
            lambda1: vec![reg.lambda1],
            lambda2: vec![reg.lambda2],
            lambda3: vec![reg.lambda3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, list) in [
            ("lambda1", &self.lambda1),
            ("lambda2", &self.lambda2),
            ("lambda3", &self.lambda3),
        ] {
            if list.is_empty() {
                return Err(Error::InvalidArgument(format!("{name} grid is empty")));
            }
            if list.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                return Err(Error::InvalidArgument(format!(
                    "{name} grid has non-positive entries"
                )));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "{name} grid is not strictly ascending"
                )));
            }
        }
        Ok(())
    }

    /// All triples in lexicographic order.
    pub fn candidates(&self) -> Vec<Regularization> {
        let mut out =
            Vec::with_capacity(self.lambda1.len() * self.lambda2.len() * self.lambda3.len());
        for &lambda1 in &self.lambda1 {
            for &lambda2 in &self.lambda2 {
                for &lambda3 in &self.lambda3 {
                    out.push(Regularization {
                        lambda1,
                        lambda2,
                        lambda3,
                    });
                }
            }
        }
        out
    }
}

/// DᵀD and Dᵀ Ẋᵀ for one parameter; solving for a new λ only touches the
/// diagonal.
#[derive(Clone, Debug)]
pub struct NormalEquations {
    gram: DMatrix<f64>,
    rhs: DMatrix<f64>,
    dims: FeatureDims,
}

impl NormalEquations {
    pub fn new(data: &DMatrix<f64>, derivatives: &DMatrix<f64>, dims: FeatureDims) -> Result<Self> {
        if data.ncols() != dims.total() || derivatives.nrows() != dims.r {
            return Err(Error::DimensionMismatch(format!(
                "data matrix is {:?} and derivatives {:?} for d(r,m) = {}",
                data.shape(),
                derivatives.shape(),
                dims.total()
            )));
        }
        if data.nrows() != derivatives.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "data matrix has {} rows, derivatives {} columns",
                data.nrows(),
                derivatives.ncols()
            )));
        }
        if data
            .iter()
            .chain(derivatives.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("regression data".into()));
        }
        Ok(Self {
            gram: data.tr_mul(data),
            rhs: data.tr_mul(&derivatives.transpose()),
            dims,
        })
    }

    pub fn dims(&self) -> FeatureDims {
        self.dims
    }

    /// Left-hand side DᵀD + Λ².
    pub fn regularized_gram(&self, reg: &Regularization) -> DMatrix<f64> {
        let mut g = self.gram.clone();
        for (i, l2) in reg.squared_diagonal(self.dims).into_iter().enumerate() {
            g[(i, i)] += l2;
        }
        g
    }

    /// Dᵀ Ẋᵀ.
    pub fn rhs(&self) -> &DMatrix<f64> {
        &self.rhs
    }

    pub fn solve(&self, reg: &Regularization) -> Result<ReducedOperatorSet> {
        reg.validate()?;
        let chol = self.regularized_gram(reg).cholesky().ok_or_else(|| {
            Error::SolverFailure(format!(
                "regularized Gram matrix not positive definite for {reg:?}"
            ))
        })?;
        let o_t = chol.solve(&self.rhs);
        ReducedOperatorSet::from_stacked(&o_t.transpose(), self.dims)
    }
}

/// Minimizes ‖D Ôᵀ − Ẋᵀ‖²_F + ‖Λ Ôᵀ‖²_F through the normal equations.
pub fn solve_regression(
    data: &DMatrix<f64>,
    derivatives: &DMatrix<f64>,
    reg: &Regularization,
) -> Result<ReducedOperatorSet> {
    let r = derivatives.nrows();
    let q = r * (r + 1) / 2;
    let m = data.ncols().checked_sub(1 + r + q).ok_or_else(|| {
        Error::DimensionMismatch(format!(
            "data matrix has {} columns, fewer than 1 + r + r(r+1)/2 = {}",
            data.ncols(),
            1 + r + q
        ))
    })?;
    NormalEquations::new(data, derivatives, FeatureDims::new(r, m)?)?.solve(reg)
}

/// One training parameter's projected data.
pub struct ProjectedTrajectory<'a> {
    pub set: &'a SnapshotSet,
    /// r×K reduced scaled states.
    pub reduced: DMatrix<f64>,
    pub derivatives: DMatrix<f64>,
    pub normal: NormalEquations,
    pub input: Box<dyn InputSignal>,
}

/// Everything the regression and the λ sweep need, built once.
pub struct TrainingProblem<'a> {
    pub basis: &'a PodBasis,
    pub scaling: &'a ScalingTransform,
    pub trajectories: Vec<ProjectedTrajectory<'a>>,
}

impl<'a> TrainingProblem<'a> {
    pub fn new(
        sets: &'a [SnapshotSet],
        basis: &'a PodBasis,
        scaling: &'a ScalingTransform,
    ) -> Result<Self> {
        let trajectories = sets
            .iter()
            .map(|set| {
                let scaled = scaling.apply(&set.states)?;
                let reduced = basis.project(&scaled)?;
                let derivatives = estimate_derivatives(&reduced, set.delta())?;
                let data = build_data_matrix(&reduced, &set.inputs)?;
                let dims = FeatureDims::new(basis.rank(), set.num_inputs())?;
                let normal = NormalEquations::new(&data, &derivatives, dims)?;
                Ok(ProjectedTrajectory {
                    set,
                    reduced,
                    derivatives,
                    normal,
                    input: set.input_signal()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if trajectories.is_empty() {
            return Err(Error::InvalidArgument("no training sets".into()));
        }
        Ok(Self {
            basis,
            scaling,
            trajectories,
        })
    }

    /// One operator set per training parameter, in input order.
    pub fn learn(&self, reg: &Regularization) -> Result<Vec<ReducedOperatorSet>> {
        self.trajectories
            .iter()
            .map(|t| t.normal.solve(reg))
            .collect()
    }

    /// Integrates each operator set over its own training horizon from its
    /// first reduced snapshot and reports the physical-space error.
    pub fn training_errors(&self, ops: &[ReducedOperatorSet]) -> Result<Vec<ErrorReport>> {
        self.trajectories
            .iter()
            .zip(ops)
            .map(|(t, o)| {
                let s0 = t.reduced.column(0).into_owned();
                let sol = integrate(o, &s0, t.input.as_ref(), &t.set.times)?;
                let full = reconstruct(&sol, self.basis, self.scaling)?;
                relative_state_error(&t.set.states, &full, &t.set.layout)
            })
            .collect()
    }

    pub fn evaluate(&self, reg: &Regularization) -> SweepRow {
        let groups = self.trajectories[0].set.layout.groups().len();
        let outcome = self.learn(reg).and_then(|ops| self.training_errors(&ops));
        match outcome {
            Ok(reports) if reports.iter().all(|r| r.average.is_finite()) => {
                let n = reports.len() as f64;
                let per_group = (0..groups)
                    .map(|g| reports.iter().map(|r| r.per_group[g]).sum::<f64>() / n)
                    .collect();
                SweepRow {
                    regularization: *reg,
                    per_group,
                    average: reports.iter().map(|r| r.average).sum::<f64>() / n,
                    diverged: false,
                }
            }
            _ => SweepRow {
                regularization: *reg,
                per_group: vec![f64::INFINITY; groups],
                average: f64::INFINITY,
                diverged: true,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub regularization: Regularization,
    /// Per-group relative error averaged over the training parameters.
    pub per_group: Vec<f64>,
    pub average: f64,
    pub diverged: bool,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub best: Regularization,
    pub best_index: usize,
    pub groups: Vec<String>,
    pub table: Vec<SweepRow>,
}

impl SweepResult {
    /// CSV: `lambda1,lambda2,lambda3,<group>…,average,diverged`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = vec!["lambda1".to_string(), "lambda2".into(), "lambda3".into()];
        header.extend(self.groups.iter().cloned());
        header.push("average".into());
        header.push("diverged".into());
        writeln!(out, "{}", header.join(","))?;
        for row in &self.table {
            let reg = row.regularization;
            let mut fields = vec![
                format!("{:e}", reg.lambda1),
                format!("{:e}", reg.lambda2),
                format!("{:e}", reg.lambda3),
            ];
            fields.extend(row.per_group.iter().map(|e| format!("{e:.17e}")));
            fields.push(format!("{:.17e}", row.average));
            fields.push(row.diverged.to_string());
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Evaluates every λ triple of the grid on the training data and returns the
/// minimizer of the group-averaged relative state error. Divergent
/// candidates score +∞; ties go to the lexicographically smallest triple.
pub fn grid_search(
    problem: &TrainingProblem<'_>,
    grid: &RegularizationGrid,
) -> Result<SweepResult> {
    grid.validate()?;
    let candidates = grid.candidates();
    let table: Vec<SweepRow> = candidates.iter().map(|reg| problem.evaluate(reg)).collect();
    let mut best: Option<usize> = None;
    for (i, row) in table.iter().enumerate() {
        if row.diverged || !row.average.is_finite() {
            continue;
        }
        if best.is_none_or(|b| row.average < table[b].average) {
            best = Some(i);
        }
    }
    let best_index = best.ok_or(Error::AllCandidatesDiverged(table.len()))?;
    Ok(SweepResult {
        best: table[best_index].regularization,
        best_index,
        groups: problem.trajectories[0]
            .set
            .layout
            .groups()
            .iter()
            .map(|g| g.name.clone())
            .collect(),
        table,
    })
}
