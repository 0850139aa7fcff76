//! Offline stage: scaling, POD, per-parameter regression, interpolant.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ErrorReport;
use crate::opinf::{grid_search, Regularization, RegularizationGrid, SweepResult, TrainingProblem};
use crate::parametric::{build_interpolant, ParametricRom, TimeGrid, Triangulation};
use crate::pod::{cumulative_energy, residual_energy, PodBasis, PodOptions};
use crate::scaling::fit_scaling;
use crate::snapshots::{assemble_global, SnapshotSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RegularizationChoice {
    Fixed(Regularization),
    Search(RegularizationGrid),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    pub pod: PodOptions,
    pub regularization: RegularizationChoice,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            pod: PodOptions::default(),
            regularization: RegularizationChoice::Search(RegularizationGrid::standard()),
        }
    }
}

/// Wall-clock seconds per offline phase.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrainTimings {
    pub scaling: f64,
    pub pod: f64,
    pub regression: f64,
    pub total: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub rom: ParametricRom,
    pub regularization: Regularization,
    /// Present when λ was chosen by grid search.
    pub sweep: Option<SweepResult>,
    /// Per training parameter, in input order.
    pub training_errors: Vec<ErrorReport>,
    pub cumulative_energy: f64,
    pub residual_energy: f64,
    pub timings: TrainTimings,
}

fn check_sets(sets: &[SnapshotSet]) -> Result<()> {
    let first = sets
        .first()
        .ok_or_else(|| Error::InvalidArgument("no training sets".into()))?;
    let d_p = first.parameter.len();
    if d_p == 0 {
        return Err(Error::InvalidArgument(
            "training sets carry no parameter".into(),
        ));
    }
    for s in sets {
        if s.parameter.len() != d_p {
            return Err(Error::DimensionMismatch(
                "training sets have parameters of differing dimension".into(),
            ));
        }
        if s.times != first.times {
            return Err(Error::NonUniformTimeGrid(
                "training sets do not share one time grid".into(),
            ));
        }
        if s.num_inputs() != first.num_inputs() {
            return Err(Error::DimensionMismatch(
                "training sets have differing input counts".into(),
            ));
        }
    }
    // reject degenerate parameter layouts before any heavy work
    Triangulation::new(&sets.iter().map(|s| s.parameter.clone()).collect::<Vec<_>>())?;
    Ok(())
}

/// Runs the full offline pipeline on the training sets.
pub fn train(sets: &[SnapshotSet], options: &TrainOptions) -> Result<TrainOutcome> {
    check_sets(sets)?;
    let start = Instant::now();
    let mut timings = TrainTimings::default();

    let global = assemble_global(sets)?;
    let scaling = fit_scaling(&global, &global.layout.mean_subtracted())?;
    let mut scaled = global.matrix;
    scaling.apply_in_place(&mut scaled)?;
    timings.scaling = start.elapsed().as_secs_f64();

    let t = Instant::now();
    let basis = PodBasis::compute(&scaled, &options.pod)?;
    drop(scaled);
    timings.pod = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let problem = TrainingProblem::new(sets, &basis, &scaling)?;
    let (regularization, sweep) = match &options.regularization {
        RegularizationChoice::Fixed(reg) => {
            reg.validate()?;
            (*reg, None)
        }
        RegularizationChoice::Search(grid) => {
            let result = grid_search(&problem, grid)?;
            (result.best, Some(result))
        }
    };
    let operators = problem.learn(&regularization)?;
    let training_errors = problem.training_errors(&operators)?;
    drop(problem);
    timings.regression = t.elapsed().as_secs_f64();

    let r = basis.rank();
    let cumulative = cumulative_energy(basis.singular_values(), r)?;
    let residual = residual_energy(basis.singular_values(), r)?;
    let first = &sets[0];
    let ramp = first
        .input_ramp
        .clone()
        .filter(|ramp| sets.iter().all(|s| s.input_ramp.as_ref() == Some(ramp)));
    let time_grid = TimeGrid {
        t0: first.times[0],
        delta: first.delta(),
        k: first.len(),
    };
    let reference_state = first.states.column(0).into_owned();
    let interpolant = build_interpolant(
        sets.iter().map(|s| s.parameter.clone()).collect(),
        operators,
    )?;
    let rom = ParametricRom::new(
        interpolant,
        basis,
        scaling,
        first.layout.clone(),
        time_grid,
        reference_state,
    )?
    .with_input_ramp(ramp)
    .with_regularization(Some(regularization));
    timings.total = start.elapsed().as_secs_f64();

    Ok(TrainOutcome {
        rom,
        regularization,
        sweep,
        training_errors,
        cumulative_energy: cumulative,
        residual_energy: residual,
        timings,
    })
}
