//! Time integration of the reduced quadratic model and reconstruction of
//! physical states.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::opinf::ReducedOperatorSet;
use crate::pod::PodBasis;
use crate::scaling::ScalingTransform;
use crate::signal::InputSignal;
use crate::snapshots::check_uniform;

#[derive(Clone, Debug, PartialEq)]
pub struct RomSolution {
    pub times: Vec<f64>,
    /// r×K reduced trajectory.
    pub reduced_states: DMatrix<f64>,
}

/// Classical fourth-order Runge–Kutta with the grid step, sampled at every
/// grid time.
pub fn integrate(
    ops: &ReducedOperatorSet,
    s0_reduced: &DVector<f64>,
    input: &dyn InputSignal,
    times: &[f64],
) -> Result<RomSolution> {
    let dims = ops.dims();
    if s0_reduced.len() != dims.r {
        return Err(Error::DimensionMismatch(format!(
            "initial state has {} entries, operators have r = {}",
            s0_reduced.len(),
            dims.r
        )));
    }
    if input.len() != dims.m {
        return Err(Error::DimensionMismatch(format!(
            "input signal has {} channels, operators expect m = {}",
            input.len(),
            dims.m
        )));
    }
    check_uniform(times)?;
    let k = times.len();
    let r = dims.r;
    let mut out = DMatrix::zeros(r, k);
    out.column_mut(0).copy_from(s0_reduced);
    if s0_reduced.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { index: 0 });
    }
    if k == 1 {
        return Ok(RomSolution {
            times: times.to_vec(),
            reduced_states: out,
        });
    }

    let mut work = ops.workspace();
    let mut s = s0_reduced.as_slice().to_vec();
    let mut stage = vec![0.0; r];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; r], vec![0.0; r], vec![0.0; r], vec![0.0; r]);
    let (mut u0, mut uh, mut u1) = (vec![0.0; dims.m], vec![0.0; dims.m], vec![0.0; dims.m]);

    for step in 0..k - 1 {
        let t = times[step];
        let h = times[step + 1] - t;
        input.eval(t, &mut u0);
        input.eval(t + 0.5 * h, &mut uh);
        input.eval(t + h, &mut u1);

        ops.rhs_into(&s, &u0, &mut work, &mut k1);
        for i in 0..r {
            stage[i] = s[i] + 0.5 * h * k1[i];
        }
        ops.rhs_into(&stage, &uh, &mut work, &mut k2);
        for i in 0..r {
            stage[i] = s[i] + 0.5 * h * k2[i];
        }
        ops.rhs_into(&stage, &uh, &mut work, &mut k3);
        for i in 0..r {
            stage[i] = s[i] + h * k3[i];
        }
        ops.rhs_into(&stage, &u1, &mut work, &mut k4);
        for i in 0..r {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { index: step + 1 });
        }
        out.column_mut(step + 1).copy_from_slice(&s);
    }
    Ok(RomSolution {
        times: times.to_vec(),
        reduced_states: out,
    })
}

/// invert_scaling(V_r · reduced) in physical units.
pub fn reconstruct(
    solution: &RomSolution,
    basis: &PodBasis,
    scaling: &ScalingTransform,
) -> Result<DMatrix<f64>> {
    let mut full = basis.lift(&solution.reduced_states)?;
    scaling.invert_in_place(&mut full)?;
    Ok(full)
}

/// V_rᵀ · apply_scaling(s0).
pub fn initial_reduced_state(
    s0_full: &DVector<f64>,
    basis: &PodBasis,
    scaling: &ScalingTransform,
) -> Result<DVector<f64>> {
    if s0_full.len() != basis.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial state has {} entries, basis dimension is {}",
            s0_full.len(),
            basis.state_dim()
        )));
    }
    let scaled = scaling.apply_vector(s0_full)?;
    Ok(basis.basis().tr_mul(&scaled))
}
