//! Time-dependent input signals u(t; μ).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An input signal evaluated at arbitrary times inside the simulation window.
pub trait InputSignal: Send + Sync {
    /// Number of input channels m.
    fn len(&self) -> usize;

    fn eval(&self, t: f64, out: &mut [f64]);

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Linear ramp template shared by a family of parametrized runs.
///
/// Channel `i` moves from `initial[i]` to `final_base[i]` (multiplied by the
/// parameter component `scale_by[i]`, when set) linearly over `[start, end]`
/// and is held constant outside that window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputRamp {
    pub initial: Vec<f64>,
    pub final_base: Vec<f64>,
    #[serde(default)]
    pub scale_by: Vec<Option<usize>>,
    pub start: f64,
    pub end: f64,
}

impl InputRamp {
    pub fn validate(&self) -> Result<()> {
        let m = self.initial.len();
        if self.final_base.len() != m || (!self.scale_by.is_empty() && self.scale_by.len() != m) {
            return Err(Error::InvalidArgument(format!(
                "input ramp channel counts disagree: initial {}, final {}, scale_by {}",
                m,
                self.final_base.len(),
                self.scale_by.len()
            )));
        }
        if !(self.end > self.start) {
            return Err(Error::InvalidArgument(format!(
                "input ramp window [{}, {}] is empty",
                self.start, self.end
            )));
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.initial.len()
    }

    /// Instantiate the ramp for one parameter vector.
    pub fn instantiate(&self, parameter: &[f64]) -> Result<RampSignal> {
        self.validate()?;
        let final_level = self
            .final_base
            .iter()
            .enumerate()
            .map(|(i, &base)| match self.scale_by.get(i).copied().flatten() {
                Some(p) => parameter.get(p).map(|mu| mu * base).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "input channel {i} scales by parameter component {p}, but the parameter has {} components",
                        parameter.len()
                    ))
                }),
                None => Ok(base),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RampSignal {
            initial: self.initial.clone(),
            final_level,
            start: self.start,
            end: self.end,
        })
    }
}

/// A ramp with resolved endpoint levels.
#[derive(Clone, Debug, PartialEq)]
pub struct RampSignal {
    pub initial: Vec<f64>,
    pub final_level: Vec<f64>,
    pub start: f64,
    pub end: f64,
}

impl RampSignal {
    pub fn fraction(&self, t: f64) -> f64 {
        ((t - self.start) / (self.end - self.start)).clamp(0.0, 1.0)
    }
}

impl InputSignal for RampSignal {
    fn len(&self) -> usize {
        self.initial.len()
    }

    fn eval(&self, t: f64, out: &mut [f64]) {
        let s = self.fraction(t);
        for ((o, a), b) in out.iter_mut().zip(&self.initial).zip(&self.final_level) {
            *o = a + (b - a) * s;
        }
    }
}

/// Piecewise-linear interpolation of sampled inputs on a uniform grid.
#[derive(Clone, Debug)]
pub struct SampledSignal {
    t0: f64,
    delta: f64,
    /// m×K, column-major like every other matrix in the crate.
    samples: nalgebra::DMatrix<f64>,
}

impl SampledSignal {
    pub fn new(t0: f64, delta: f64, samples: nalgebra::DMatrix<f64>) -> Result<Self> {
        if !(delta > 0.0) || samples.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "sampled input needs a positive step and at least one sample".into(),
            ));
        }
        Ok(Self { t0, delta, samples })
    }
}

impl InputSignal for SampledSignal {
    fn len(&self) -> usize {
        self.samples.nrows()
    }

    fn eval(&self, t: f64, out: &mut [f64]) {
        let k_max = self.samples.ncols() - 1;
        let pos = ((t - self.t0) / self.delta).clamp(0.0, k_max as f64);
        let lo = (pos.floor() as usize).min(k_max);
        let hi = (lo + 1).min(k_max);
        let w = pos - lo as f64;
        for (i, o) in out.iter_mut().enumerate() {
            *o = (1.0 - w) * self.samples[(i, lo)] + w * self.samples[(i, hi)];
        }
    }
}

/// The zero-channel signal, for models without inputs.
pub struct NoInput;

impl InputSignal for NoInput {
    fn len(&self) -> usize {
        0
    }

    fn eval(&self, _t: f64, _out: &mut [f64]) {}
}
