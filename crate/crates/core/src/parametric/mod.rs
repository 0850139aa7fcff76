//! Elementwise interpolation of learned operators over the parameter domain
//! and the trained-model container.

mod archive;
mod triangulation;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use archive::{load_model, save_model, ARCHIVE_FORMAT, ARCHIVE_MAGIC, ARCHIVE_VERSION};
pub use triangulation::Triangulation;

use crate::error::{Error, Result};
use crate::opinf::{ReducedOperatorSet, Regularization};
use crate::pod::PodBasis;
use crate::rom::{initial_reduced_state, integrate, reconstruct, RomSolution};
use crate::scaling::ScalingTransform;
use crate::signal::{InputRamp, InputSignal};
use crate::snapshots::{uniform_times, VariableLayout};

/// Training parameters, their operator sets, and the simplices joining them.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorInterpolant {
    train_params: Vec<Vec<f64>>,
    operator_sets: Vec<ReducedOperatorSet>,
    triangulation: Triangulation,
}

pub fn build_interpolant(
    train_params: Vec<Vec<f64>>,
    operator_sets: Vec<ReducedOperatorSet>,
) -> Result<OperatorInterpolant> {
    if train_params.len() != operator_sets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} training parameters but {} operator sets",
            train_params.len(),
            operator_sets.len()
        )));
    }
    let dims = operator_sets
        .first()
        .ok_or_else(|| Error::InvalidArgument("no operator sets".into()))?
        .dims();
    if operator_sets.iter().any(|o| o.dims() != dims) {
        return Err(Error::DimensionMismatch(
            "operator sets have differing (r, m)".into(),
        ));
    }
    let triangulation = Triangulation::new(&train_params)?;
    Ok(OperatorInterpolant {
        train_params,
        operator_sets,
        triangulation,
    })
}

impl OperatorInterpolant {
    pub fn train_params(&self) -> &[Vec<f64>] {
        &self.train_params
    }

    pub fn operator_sets(&self) -> &[ReducedOperatorSet] {
        &self.operator_sets
    }

    pub fn triangulation(&self) -> &Triangulation {
        &self.triangulation
    }

    pub fn parameter_dim(&self) -> usize {
        self.triangulation.dim()
    }

    /// Barycentric combination of the operators at the vertices of the
    /// simplex containing `mu`. Refuses to extrapolate.
    pub fn interpolate(&self, mu: &[f64]) -> Result<ReducedOperatorSet> {
        let (s, weights) = self.triangulation.locate(mu)?;
        let vertices = &self.triangulation.simplices()[s];
        if let Some(pos) = weights.iter().position(|&w| w == 1.0) {
            return Ok(self.operator_sets[vertices[pos]].clone());
        }
        let dims = self.operator_sets[0].dims();
        let mut o = DMatrix::zeros(dims.r, dims.total());
        for (&v, &w) in vertices.iter().zip(&weights) {
            o += self.operator_sets[v].stacked() * w;
        }
        ReducedOperatorSet::from_stacked(&o, dims)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub delta: f64,
    #[serde(rename = "K")]
    pub k: usize,
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        uniform_times(self.t0, self.delta, self.k)
    }
}

/// A trained parametric model: interpolant plus everything needed to turn a
/// reduced trajectory back into physical fields.
#[derive(Clone, Debug, PartialEq)]
pub struct ParametricRom {
    pub interpolant: OperatorInterpolant,
    pub basis: PodBasis,
    pub scaling: ScalingTransform,
    pub layout: VariableLayout,
    pub time_grid: TimeGrid,
    /// Physical full state whose projection starts every prediction unless
    /// overridden.
    pub reference_state: DVector<f64>,
    pub input_ramp: Option<InputRamp>,
    pub regularization: Option<Regularization>,
}

/// One online evaluation.
#[derive(Clone, Debug)]
pub struct Prediction {
    pub parameter: Vec<f64>,
    pub operators: ReducedOperatorSet,
    pub solution: RomSolution,
    /// Interpolation plus integration, reconstruction excluded.
    pub online_seconds: f64,
}

impl ParametricRom {
    pub fn new(
        interpolant: OperatorInterpolant,
        basis: PodBasis,
        scaling: ScalingTransform,
        layout: VariableLayout,
        time_grid: TimeGrid,
        reference_state: DVector<f64>,
    ) -> Result<Self> {
        let r = interpolant.operator_sets[0].dims().r;
        if basis.rank() != r {
            return Err(Error::DimensionMismatch(format!(
                "basis rank {} differs from operator dimension {r}",
                basis.rank()
            )));
        }
        if basis.state_dim() != layout.state_dim() || !scaling.conforms_to(&layout) {
            return Err(Error::DimensionMismatch(
                "basis, scaling and layout disagree on the state dimension".into(),
            ));
        }
        if reference_state.len() != layout.state_dim() {
            return Err(Error::DimensionMismatch(format!(
                "reference state has {} entries, expected {}",
                reference_state.len(),
                layout.state_dim()
            )));
        }
        Ok(Self {
            interpolant,
            basis,
            scaling,
            layout,
            time_grid,
            reference_state,
            input_ramp: None,
            regularization: None,
        })
    }

    pub fn with_input_ramp(mut self, ramp: Option<InputRamp>) -> Self {
        self.input_ramp = ramp;
        self
    }

    pub fn with_regularization(mut self, reg: Option<Regularization>) -> Self {
        self.regularization = reg;
        self
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn num_inputs(&self) -> usize {
        self.interpolant.operator_sets[0].dims().m
    }

    pub fn interpolate_operators(&self, mu: &[f64]) -> Result<ReducedOperatorSet> {
        self.interpolant.interpolate(mu)
    }

    pub fn initial_state(&self, s0_full: Option<&DVector<f64>>) -> Result<DVector<f64>> {
        initial_reduced_state(
            s0_full.unwrap_or(&self.reference_state),
            &self.basis,
            &self.scaling,
        )
    }

    /// Interpolates operators at `mu` and integrates them over the stored
    /// time grid. The input defaults to the stored ramp instantiated at `mu`.
    pub fn predict(
        &self,
        mu: &[f64],
        input: Option<&dyn InputSignal>,
        s0_full: Option<&DVector<f64>>,
    ) -> Result<Prediction> {
        let s0 = self.initial_state(s0_full)?;
        let times = self.time_grid.times();
        let owned;
        let input = match input {
            Some(i) => i,
            None => {
                let ramp = self.input_ramp.as_ref().ok_or_else(|| {
                    Error::Config("model stores no input ramp; supply an input signal".into())
                })?;
                owned = ramp.instantiate(mu)?;
                &owned as &dyn InputSignal
            }
        };
        let start = Instant::now();
        let operators = self.interpolate_operators(mu)?;
        let solution = integrate(&operators, &s0, input, &times)?;
        let online_seconds = start.elapsed().as_secs_f64();
        Ok(Prediction {
            parameter: mu.to_vec(),
            operators,
            solution,
            online_seconds,
        })
    }

    pub fn reconstruct(&self, solution: &RomSolution) -> Result<DMatrix<f64>> {
        reconstruct(solution, &self.basis, &self.scaling)
    }
}

/// Free-function form of [`ParametricRom::interpolate_operators`].
pub fn interpolate_operators(rom: &ParametricRom, mu_star: &[f64]) -> Result<ReducedOperatorSet> {
    rom.interpolate_operators(mu_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureDims;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_params() -> Vec<Vec<f64>> {
        let v = [0.5, 1.0, 1.5];
        v.iter()
            .flat_map(|&q| v.iter().map(move |&p| vec![q, p]))
            .collect()
    }

    fn random_ops(rng: &mut ChaCha8Rng) -> ReducedOperatorSet {
        let dims = FeatureDims::new(2, 1).unwrap();
        let o = DMatrix::from_fn(2, dims.total(), |_, _| rng.random_range(-1.0..1.0));
        ReducedOperatorSet::from_stacked(&o, dims).unwrap()
    }

    #[test]
    fn vertices_reproduce_exactly_and_midpoints_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = grid_params();
        let ops: Vec<_> = params.iter().map(|_| random_ops(&mut rng)).collect();
        let interp = build_interpolant(params.clone(), ops.clone()).unwrap();
        for (p, o) in params.iter().zip(&ops) {
            assert_eq!(&interp.interpolate(p).unwrap(), o);
        }
        // edge between (0.5,0.5) and (0.5,1.0)
        let mid = interp.interpolate(&[0.5, 0.75]).unwrap().stacked();
        let expected = (ops[0].stacked() + ops[1].stacked()) * 0.5;
        assert!((mid - &expected).amax() <= 1e-12 * expected.amax());
    }

    #[test]
    fn interpolated_entries_stay_within_vertex_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = grid_params();
        let ops: Vec<_> = params.iter().map(|_| random_ops(&mut rng)).collect();
        let interp = build_interpolant(params, ops.clone()).unwrap();
        for _ in 0..50 {
            let mu = [rng.random_range(0.5..1.5), rng.random_range(0.5..1.5)];
            let (s, _) = interp.triangulation().locate(&mu).unwrap();
            let verts = &interp.triangulation().simplices()[s];
            let o = interp.interpolate(&mu).unwrap().stacked();
            for (idx, v) in o.iter().enumerate() {
                let vals: Vec<f64> = verts
                    .iter()
                    .map(|&i| ops[i].stacked().as_slice()[idx])
                    .collect();
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert!(*v >= lo - 1e-14 && *v <= hi + 1e-14);
            }
        }
    }

    #[test]
    fn refuses_to_extrapolate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = grid_params();
        let ops: Vec<_> = params.iter().map(|_| random_ops(&mut rng)).collect();
        let interp = build_interpolant(params, ops).unwrap();
        assert!(matches!(
            interp.interpolate(&[0.4, 1.0]),
            Err(Error::OutsideHull(_))
        ));
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ops = vec![random_ops(&mut rng), random_ops(&mut rng)];
        assert!(build_interpolant(vec![vec![0.0, 0.0]], ops.clone()).is_err());
        assert!(matches!(
            build_interpolant(vec![vec![0.0, 0.0], vec![1.0, 1.0]], ops),
            Err(Error::CollinearParameters)
        ));
    }
}
