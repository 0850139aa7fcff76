//! Quadratic feature lift and regression data matrix.
//!
//! The compact Kronecker product keeps each product x_i x_j (i ≤ j) once, in
//! row-major upper-triangular order: x_1², x_1x_2, …, x_1x_r, x_2², …, x_r².
//! A quadratic operator column for i < j carries the combined coefficient of
//! both symmetric full-Kronecker entries.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Archive tag identifying the ordering above.
pub const ORDERING_TAG: &str = "const|linear|compact-kron-row-major-upper|input";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDims {
    pub r: usize,
    pub m: usize,
}

impl FeatureDims {
    pub fn new(r: usize, m: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidArgument(
                "reduced dimension must be at least 1".into(),
            ));
        }
        Ok(Self { r, m })
    }

    pub fn quadratic(&self) -> usize {
        self.r * (self.r + 1) / 2
    }

    /// d(r, m) = 1 + r + r(r+1)/2 + m.
    pub fn total(&self) -> usize {
        1 + self.r + self.quadratic() + self.m
    }

    pub fn linear_offset(&self) -> usize {
        1
    }

    pub fn quadratic_offset(&self) -> usize {
        1 + self.r
    }

    pub fn input_offset(&self) -> usize {
        1 + self.r + self.quadratic()
    }
}

pub fn compact_kron(x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len() * (x.len() + 1) / 2];
    compact_kron_into(x, &mut out);
    out
}

pub fn compact_kron_into(x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len(), x.len() * (x.len() + 1) / 2);
    let mut p = 0;
    for i in 0..x.len() {
        for j in i..x.len() {
            out[p] = x[i] * x[j];
            p += 1;
        }
    }
}

/// Row k is [1, ŝ_kᵀ, compact_kron(ŝ_k)ᵀ, u_kᵀ].
pub fn build_data_matrix(
    reduced_states: &DMatrix<f64>,
    inputs: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let k = reduced_states.ncols();
    if inputs.ncols() != k {
        return Err(Error::DimensionMismatch(format!(
            "reduced states have {k} columns, inputs {}",
            inputs.ncols()
        )));
    }
    let dims = FeatureDims::new(reduced_states.nrows(), inputs.nrows())?;
    let mut d = DMatrix::zeros(k, dims.total());
    let mut quad = vec![0.0; dims.quadratic()];
    for col in 0..k {
        let s = reduced_states.column(col);
        d[(col, 0)] = 1.0;
        for i in 0..dims.r {
            d[(col, dims.linear_offset() + i)] = s[i];
        }
        compact_kron_into(s.as_slice(), &mut quad);
        for (i, q) in quad.iter().enumerate() {
            d[(col, dims.quadratic_offset() + i)] = *q;
        }
        for i in 0..dims.m {
            d[(col, dims.input_offset() + i)] = inputs[(i, col)];
        }
    }
    Ok(d)
}
