//! Per-variable centering and max-abs scaling into [−1, 1].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snapshots::{GlobalDataMatrix, VariableLayout};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableScaling {
    pub name: String,
    pub shift: f64,
    pub scale: f64,
    pub mean_subtracted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingTransform {
    n_x: usize,
    variables: Vec<VariableScaling>,
}

pub fn fit_scaling(global: &GlobalDataMatrix, mean_subtract: &[&str]) -> Result<ScalingTransform> {
    let layout = &global.layout;
    let mut flags = vec![false; layout.n_v()];
    for name in mean_subtract {
        flags[layout.variable_index(name)?] = true;
    }
    if global.matrix.ncols() == 0 {
        return Err(Error::InvalidArgument(
            "cannot fit scaling to an empty matrix".into(),
        ));
    }
    let variables = layout
        .variables()
        .iter()
        .enumerate()
        .map(|(v, var)| {
            let block = global.matrix.rows(layout.block(v).start, layout.n_x());
            let shift = if flags[v] { block.mean() } else { 0.0 };
            let max = block.iter().fold(0.0_f64, |m, &x| m.max((x - shift).abs()));
            if !max.is_finite() {
                return Err(Error::NonFinite(format!("variable `{}`", var.name)));
            }
            Ok(VariableScaling {
                name: var.name.clone(),
                shift,
                scale: if max > 0.0 { max } else { 1.0 },
                mean_subtracted: flags[v],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingTransform {
        n_x: layout.n_x(),
        variables,
    })
}

impl ScalingTransform {
    /// Builds a transform from explicit per-variable pairs.
    pub fn from_parts(n_x: usize, variables: Vec<VariableScaling>) -> Result<Self> {
        if let Some(v) = variables
            .iter()
            .find(|v| !(v.scale > 0.0) || !v.shift.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "variable `{}` has shift {} and scale {}; scale must be positive",
                v.name, v.shift, v.scale
            )));
        }
        Ok(Self { n_x, variables })
    }

    pub fn variables(&self) -> &[VariableScaling] {
        &self.variables
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn state_dim(&self) -> usize {
        self.n_x * self.variables.len()
    }

    pub fn conforms_to(&self, layout: &VariableLayout) -> bool {
        layout.n_x() == self.n_x
            && layout.n_v() == self.variables.len()
            && layout
                .variables()
                .iter()
                .zip(&self.variables)
                .all(|(a, b)| a.name == b.name)
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        if rows != self.state_dim() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {rows} rows, scaling expects {}",
                self.state_dim()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, states: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = states.clone();
        self.apply_in_place(&mut out)?;
        Ok(out)
    }

    pub fn apply_in_place(&self, states: &mut DMatrix<f64>) -> Result<()> {
        self.check_rows(states.nrows())?;
        for (v, s) in self.variables.iter().enumerate() {
            let inv = 1.0 / s.scale;
            states
                .rows_mut(v * self.n_x, self.n_x)
                .apply(|x| *x = (*x - s.shift) * inv);
        }
        Ok(())
    }

    pub fn invert(&self, scaled: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = scaled.clone();
        self.invert_in_place(&mut out)?;
        Ok(out)
    }

    pub fn invert_in_place(&self, scaled: &mut DMatrix<f64>) -> Result<()> {
        self.check_rows(scaled.nrows())?;
        for (v, s) in self.variables.iter().enumerate() {
            scaled
                .rows_mut(v * self.n_x, self.n_x)
                .apply(|x| *x = *x * s.scale + s.shift);
        }
        Ok(())
    }

    pub fn apply_vector(&self, state: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_rows(state.len())?;
        let mut out = state.clone();
        for (v, s) in self.variables.iter().enumerate() {
            out.rows_mut(v * self.n_x, self.n_x)
                .apply(|x| *x = (*x - s.shift) / s.scale);
        }
        Ok(out)
    }

    /// The physical state whose scaled image is zero.
    pub fn shift_field(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.state_dim(),
            self.variables
                .iter()
                .flat_map(|s| std::iter::repeat(s.shift).take(self.n_x)),
        )
    }
}

/// Convenience free functions mirroring the transform methods.
pub fn apply_scaling(transform: &ScalingTransform, states: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    transform.apply(states)
}

pub fn invert_scaling(transform: &ScalingTransform, scaled: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    transform.invert(scaled)
}
