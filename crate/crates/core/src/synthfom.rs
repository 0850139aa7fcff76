//! Synthetic parametrized full-order model.
//!
//! A 1-D viscous Burgers velocity `v` transports a passive scalar `θ` on a
//! vertex grid over [0, L]. Boundary forcing enters through relaxation
//! (sponge) layers near each end that pull `v` toward the inflow level a(t)
//! and the outflow level b(t), and `θ` toward a fixed inflow value:
//!
//! ```text
//! v_t = −v v_x + ν v_xx + σ_in(x) (a(t) − v) + σ_out(x) (b(t) − v)
//! θ_t = −v θ_x + κ θ_xx + σ_in(x) (θ_in − θ)
//! ```
//!
//! The semi-discretization (second-order upwind advection, central
//! diffusion, mirrored ghost nodes) is linear-plus-quadratic in the state and
//! linear in the inputs while `v` keeps one sign. The inputs ramp linearly
//! from a common initial level to μ_q·Q and μ_p·P over the horizon.
//!
//! Time stepping is Strang splitting: half a Crank–Nicolson diffusion step,
//! one SSP-RK3 step of advection and relaxation, half a diffusion step.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{InputRamp, InputSignal};
use crate::snapshots::{uniform_times, SnapshotSet, Variable, VariableGroup, VariableLayout};

/// Advective Courant number targeted by the automatic substep count.
const TARGET_CFL: f64 = 0.5;
/// Largest Courant number accepted for a user-fixed substep count.
const MAX_CFL: f64 = 0.9;

pub const VELOCITY: &str = "velocity";
pub const SCALAR: &str = "temperature";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    /// Uniform pre-purge state: v = initial inflow level, θ = hot level.
    PrePurge,
    Zero,
    /// `offset + amplitude · cos(mode π x / L)` for both variables.
    Cosine {
        mode: usize,
        amplitude: f64,
        offset: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_x: usize,
    pub n_v: usize,
    pub length: f64,
    /// ν, diffusion of the velocity field.
    pub viscosity: f64,
    /// κ, diffusion of the scalar.
    pub diffusivity: f64,
    pub mu_q: f64,
    pub mu_p: f64,
    pub inflow_initial: f64,
    /// Final inflow level before scaling by μ_q.
    pub inflow_final: f64,
    pub outflow_initial: f64,
    /// Final outflow level before scaling by μ_p.
    pub outflow_final: f64,
    pub scalar_inflow: f64,
    pub scalar_initial: f64,
    pub sponge_strength: f64,
    /// Gaussian width of the relaxation layers, as a fraction of L.
    pub sponge_width: f64,
    pub advection: bool,
    pub initial: InitialCondition,
    pub delta: f64,
    #[serde(rename = "K")]
    pub k: usize,
    /// Internal steps per output step; chosen from the stability limits
    /// when absent.
    #[serde(default)]
    pub substeps: Option<usize>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_x: 2000,
            n_v: 2,
            length: 1.0,
            viscosity: 0.05,
            diffusivity: 0.02,
            mu_q: 1.0,
            mu_p: 1.0,
            inflow_initial: 0.2,
            inflow_final: 1.0,
            outflow_initial: 0.2,
            outflow_final: 0.6,
            scalar_inflow: 300.0,
            scalar_initial: 400.0,
            sponge_strength: 40.0,
            sponge_width: 0.05,
            advection: true,
            initial: InitialCondition::PrePurge,
            delta: 0.005,
            k: 200,
            substeps: None,
        }
    }
}

impl SynthConfig {
    /// T = δ(K − 1).
    pub fn horizon(&self) -> f64 {
        self.delta * (self.k.saturating_sub(1)) as f64
    }

    pub fn spacing(&self) -> f64 {
        self.length / (self.n_x - 1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_v != 2 {
            return Err(Error::InvalidArgument(format!(
                "the synthetic model has 2 variables, n_v = {} requested",
                self.n_v
            )));
        }
        if self.n_x < 16 {
            return Err(Error::InvalidArgument(format!("n_x = {} < 16", self.n_x)));
        }
        if !(self.viscosity > 0.0) || !(self.diffusivity > 0.0) {
            return Err(Error::InvalidArgument(
                "diffusion coefficients must be positive".into(),
            ));
        }
        if !(self.length > 0.0) || !(self.delta > 0.0) || self.k < 2 {
            return Err(Error::InvalidArgument(
                "need L > 0, δ > 0 and at least two output times".into(),
            ));
        }
        if self.sponge_strength < 0.0 || !(self.sponge_width > 0.0) {
            return Err(Error::InvalidArgument(
                "invalid relaxation layer settings".into(),
            ));
        }
        Ok(())
    }

    pub fn layout(&self) -> VariableLayout {
        VariableLayout::new(
            vec![
                Variable::new(SCALAR, "K").mean_subtracted(),
                Variable::new(VELOCITY, "m/s"),
            ],
            self.n_x,
            vec![
                VariableGroup::new(SCALAR, &[SCALAR]),
                VariableGroup::new(VELOCITY, &[VELOCITY]),
            ],
        )
        .expect("static layout")
    }

    /// Inflow and outflow ramps, scaled by (μ_q, μ_p).
    pub fn input_ramp(&self) -> InputRamp {
        InputRamp {
            initial: vec![self.inflow_initial, self.outflow_initial],
            final_base: vec![self.inflow_final, self.outflow_final],
            scale_by: vec![Some(0), Some(1)],
            start: 0.0,
            end: self.horizon(),
        }
    }

    /// Upper bound on |v| over the run (maximum principle of the model).
    fn speed_bound(&self) -> f64 {
        let mut bound = [
            self.inflow_initial,
            self.inflow_final * self.mu_q,
            self.outflow_initial,
            self.outflow_final * self.mu_p,
        ]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
        bound = bound.max(match &self.initial {
            InitialCondition::PrePurge => self.inflow_initial.abs(),
            InitialCondition::Zero => 0.0,
            InitialCondition::Cosine {
                amplitude, offset, ..
            } => amplitude.abs() + offset.abs(),
        });
        bound
    }

    fn substep_count(&self) -> Result<usize> {
        let h = self.spacing();
        let speed = if self.advection {
            self.speed_bound()
        } else {
            0.0
        };
        let max_relax = self.sponge_strength;
        match self.substeps {
            Some(n) => {
                let dt = self.delta / n as f64;
                if n < 10 || speed * dt / h > MAX_CFL || max_relax * dt > 1.0 {
                    return Err(Error::StabilityLimit(format!(
                        "{n} substeps give dt = {dt:.3e}: Courant number {:.3}, relaxation number {:.3}",
                        speed * dt / h,
                        max_relax * dt
                    )));
                }
                Ok(n)
            }
            None => {
                let mut dt = self.delta / 10.0;
                if speed > 0.0 {
                    dt = dt.min(TARGET_CFL * h / speed);
                }
                if max_relax > 0.0 {
                    dt = dt.min(0.5 / max_relax);
                }
                Ok((self.delta / dt).ceil() as usize)
            }
        }
    }
}

/// Constant-coefficient tridiagonal system (I − αL) for the Neumann
/// Laplacian, pre-factored for the Thomas algorithm.
struct ImplicitDiffusion {
    alpha: f64,
    c_prime: Vec<f64>,
    denom: Vec<f64>,
}

impl ImplicitDiffusion {
    /// α = θ dt D / h², for the step (I − αL) f_new = (I + αL) f.
    fn new(n: usize, alpha: f64) -> Self {
        let diag = 1.0 + 2.0 * alpha;
        let mut c_prime = vec![0.0; n];
        let mut denom = vec![0.0; n];
        for j in 0..n {
            let (lower, upper) = match j {
                0 => (0.0, -2.0 * alpha),
                _ if j == n - 1 => (-2.0 * alpha, 0.0),
                _ => (-alpha, -alpha),
            };
            let d = if j == 0 {
                diag
            } else {
                diag - lower * c_prime[j - 1]
            };
            denom[j] = d;
            c_prime[j] = upper / d;
        }
        Self {
            alpha,
            c_prime,
            denom,
        }
    }

    fn step(&self, f: &mut [f64], rhs: &mut [f64]) {
        let n = f.len();
        let a = self.alpha;
        rhs[0] = f[0] + 2.0 * a * (f[1] - f[0]);
        for j in 1..n - 1 {
            rhs[j] = f[j] + a * (f[j + 1] - 2.0 * f[j] + f[j - 1]);
        }
        rhs[n - 1] = f[n - 1] + 2.0 * a * (f[n - 2] - f[n - 1]);
        // forward sweep
        let mut prev = 0.0;
        for j in 0..n {
            let lower = match j {
                0 => 0.0,
                _ if j == n - 1 => -2.0 * a,
                _ => -a,
            };
            prev = (rhs[j] - lower * prev) / self.denom[j];
            f[j] = prev;
        }
        for j in (0..n - 1).rev() {
            f[j] -= self.c_prime[j] * f[j + 1];
        }
    }
}

/// Mirrored ghost index for a vertex grid with zero-gradient ends.
#[inline]
fn mirror(j: isize, n: usize) -> usize {
    let n = n as isize;
    let k = if j < 0 {
        -j
    } else if j >= n {
        2 * (n - 1) - j
    } else {
        j
    };
    k as usize
}

/// Second-order upwind w · f_x.
#[inline]
fn upwind(w: f64, f: &[f64], j: usize, inv2h: f64) -> f64 {
    let n = f.len();
    let ji = j as isize;
    if w >= 0.0 {
        w * (3.0 * f[j] - 4.0 * f[mirror(ji - 1, n)] + f[mirror(ji - 2, n)]) * inv2h
    } else {
        w * (-f[mirror(ji + 2, n)] + 4.0 * f[mirror(ji + 1, n)] - 3.0 * f[j]) * inv2h
    }
}

struct Explicit<'a> {
    cfg: &'a SynthConfig,
    sigma_in: Vec<f64>,
    sigma_out: Vec<f64>,
    inv2h: f64,
}

impl Explicit<'_> {
    /// Advection and relaxation tendencies for (v, θ).
    fn tendency(&self, v: &[f64], th: &[f64], a: f64, b: f64, dv: &mut [f64], dth: &mut [f64]) {
        let adv = self.cfg.advection;
        for j in 0..v.len() {
            let (mut fv, mut ft) = (0.0, 0.0);
            if adv {
                fv -= upwind(v[j], v, j, self.inv2h);
                ft -= upwind(v[j], th, j, self.inv2h);
            }
            fv += self.sigma_in[j] * (a - v[j]) + self.sigma_out[j] * (b - v[j]);
            ft += self.sigma_in[j] * (self.cfg.scalar_inflow - th[j]);
            dv[j] = fv;
            dth[j] = ft;
        }
    }
}

/// Runs the model and samples it at the K output times.
pub fn generate(config: &SynthConfig) -> Result<SnapshotSet> {
    config.validate()?;
    let n = config.n_x;
    let h = config.spacing();
    let substeps = config.substep_count()?;
    let dt = config.delta / substeps as f64;
    let ramp = config.input_ramp();
    let parameter = vec![config.mu_q, config.mu_p];
    let signal = ramp.instantiate(&parameter)?;

    let xs: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
    let width = config.sponge_width * config.length;
    let explicit = Explicit {
        cfg: config,
        sigma_in: xs
            .iter()
            .map(|x| config.sponge_strength * (-(x / width).powi(2)).exp())
            .collect(),
        sigma_out: xs
            .iter()
            .map(|x| config.sponge_strength * (-((config.length - x) / width).powi(2)).exp())
            .collect(),
        inv2h: 0.5 / h,
    };
    // half-step Crank–Nicolson: α = (dt/2)/2 · D/h²
    let diff_v = ImplicitDiffusion::new(n, 0.25 * dt * config.viscosity / (h * h));
    let diff_t = ImplicitDiffusion::new(n, 0.25 * dt * config.diffusivity / (h * h));

    let (mut v, mut th) = match &config.initial {
        InitialCondition::PrePurge => (
            vec![config.inflow_initial; n],
            vec![config.scalar_initial; n],
        ),
        InitialCondition::Zero => (vec![0.0; n], vec![0.0; n]),
        InitialCondition::Cosine {
            mode,
            amplitude,
            offset,
        } => {
            let f: Vec<f64> = xs
                .iter()
                .map(|x| {
                    offset
                        + amplitude
                            * (*mode as f64 * std::f64::consts::PI * x / config.length).cos()
                })
                .collect();
            (f.clone(), f)
        }
    };

    let times = uniform_times(0.0, config.delta, config.k);
    let mut states = DMatrix::zeros(2 * n, config.k);
    let mut inputs = DMatrix::zeros(2, config.k);
    let store = |states: &mut DMatrix<f64>, k: usize, v: &[f64], th: &[f64]| {
        let mut col = states.column_mut(k);
        col.rows_mut(0, n).copy_from_slice(th);
        col.rows_mut(n, n).copy_from_slice(v);
    };
    let mut u = [0.0; 2];
    for (k, &t) in times.iter().enumerate() {
        signal.eval(t, &mut u);
        inputs[(0, k)] = u[0];
        inputs[(1, k)] = u[1];
    }
    store(&mut states, 0, &v, &th);

    let mut scratch = vec![0.0; n];
    let (mut v1, mut t1) = (vec![0.0; n], vec![0.0; n]);
    let (mut dv, mut dth) = (vec![0.0; n], vec![0.0; n]);
    let mut t = 0.0;
    let mut u_stage = [0.0; 2];
    for k in 1..config.k {
        for _ in 0..substeps {
            diff_v.step(&mut v, &mut scratch);
            diff_t.step(&mut th, &mut scratch);

            // SSP-RK3 (Shu–Osher form)
            signal.eval(t, &mut u_stage);
            explicit.tendency(&v, &th, u_stage[0], u_stage[1], &mut dv, &mut dth);
            for j in 0..n {
                v1[j] = v[j] + dt * dv[j];
                t1[j] = th[j] + dt * dth[j];
            }
            signal.eval(t + dt, &mut u_stage);
            explicit.tendency(&v1, &t1, u_stage[0], u_stage[1], &mut dv, &mut dth);
            for j in 0..n {
                v1[j] = 0.75 * v[j] + 0.25 * (v1[j] + dt * dv[j]);
                t1[j] = 0.75 * th[j] + 0.25 * (t1[j] + dt * dth[j]);
            }
            signal.eval(t + 0.5 * dt, &mut u_stage);
            explicit.tendency(&v1, &t1, u_stage[0], u_stage[1], &mut dv, &mut dth);
            for j in 0..n {
                v[j] = (v[j] + 2.0 * (v1[j] + dt * dv[j])) / 3.0;
                th[j] = (th[j] + 2.0 * (t1[j] + dt * dth[j])) / 3.0;
            }

            diff_v.step(&mut v, &mut scratch);
            diff_t.step(&mut th, &mut scratch);
            t += dt;
        }
        t = times[k];
        if v.iter().chain(&th).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!(
                "synthetic model state at output step {k}"
            )));
        }
        store(&mut states, k, &v, &th);
    }

    SnapshotSet::new(
        parameter,
        times,
        states,
        inputs,
        config.layout(),
        Some(ramp),
    )
}

/// One run per (μ_q, μ_p) pair, μ_q varying slowest.
pub fn generate_grid(base: &SynthConfig, mu_q: &[f64], mu_p: &[f64]) -> Result<Vec<SnapshotSet>> {
    if mu_q.is_empty() || mu_p.is_empty() {
        return Err(Error::InvalidArgument(
            "parameter value lists must be non-empty".into(),
        ));
    }
    let mut out = Vec::with_capacity(mu_q.len() * mu_p.len());
    for &q in mu_q {
        for &p in mu_p {
            out.push(generate(&SynthConfig {
                mu_q: q,
                mu_p: p,
                ..base.clone()
            })?);
        }
    }
    Ok(out)
}

/// `count` evenly spaced values over [lo, hi].
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
