//! Snapshot data model, manifest + binary payload I/O, and global data
//! matrix assembly.
//!
//! A state vector is stored variable-major: the `n_x` values of the first
//! variable, then the second, and so on. Payload files hold little-endian
//! `f64` values in column-major order with no header.

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{InputRamp, InputSignal, SampledSignal};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const STATES_FILE: &str = "states.bin";
pub const INPUTS_FILE: &str = "inputs.bin";

/// Relative tolerance (in units of the step) for the uniform-grid check.
const GRID_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    #[serde(default)]
    pub units: String,
    /// Whether scaling subtracts the temporal-spatial mean of this variable.
    #[serde(default)]
    pub mean_subtract: bool,
}

impl Variable {
    pub fn new(name: impl Into<String>, units: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            units: units.into(),
            mean_subtract: false,
        }
    }

    pub fn mean_subtracted(mut self) -> Self {
        self.mean_subtract = true;
        self
    }
}

/// A named set of variables reported as one error quantity. A single member
/// is reported as-is; several members are combined by the pointwise
/// Euclidean norm before any error is computed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableGroup {
    pub name: String,
    pub members: Vec<String>,
}

impl VariableGroup {
    pub fn new(name: impl Into<String>, members: &[&str]) -> Self {
        Self {
            name: name.into(),
            members: members.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableLayout {
    variables: Vec<Variable>,
    n_x: usize,
    groups: Vec<VariableGroup>,
}

impl VariableLayout {
    /// Builds a layout. An empty `groups` list defaults to one group per
    /// variable.
    pub fn new(variables: Vec<Variable>, n_x: usize, groups: Vec<VariableGroup>) -> Result<Self> {
        if variables.is_empty() || n_x == 0 {
            return Err(Error::InvalidArgument(
                "layout needs at least one variable and one spatial point".into(),
            ));
        }
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::InvalidArgument(format!(
                    "variable `{}` declared twice",
                    v.name
                )));
            }
        }
        let groups = if groups.is_empty() {
            variables
                .iter()
                .map(|v| VariableGroup::new(v.name.clone(), &[v.name.as_str()]))
                .collect()
        } else {
            groups
        };
        let mut combined = vec![false; variables.len()];
        for g in &groups {
            if g.members.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "group `{}` is empty",
                    g.name
                )));
            }
            for member in &g.members {
                let idx = variables
                    .iter()
                    .position(|v| &v.name == member)
                    .ok_or_else(|| Error::UnknownVariable(member.clone()))?;
                if g.members.len() > 1 {
                    if combined[idx] {
                        return Err(Error::InvalidArgument(format!(
                            "variable `{member}` belongs to more than one norm-combination group"
                        )));
                    }
                    combined[idx] = true;
                }
            }
        }
        Ok(Self {
            variables,
            n_x,
            groups,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn groups(&self) -> &[VariableGroup] {
        &self.groups
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_v(&self) -> usize {
        self.variables.len()
    }

    /// Full state dimension N = n_x · n_v.
    pub fn state_dim(&self) -> usize {
        self.n_x * self.variables.len()
    }

    pub fn variable_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Row range occupied by variable `v`.
    pub fn block(&self, v: usize) -> Range<usize> {
        v * self.n_x..(v + 1) * self.n_x
    }

    /// Variable indices of group `g`, in declaration order.
    pub fn group_members(&self, g: usize) -> Vec<usize> {
        self.groups[g]
            .members
            .iter()
            .map(|m| self.variable_index(m).expect("validated at construction"))
            .collect()
    }

    /// Names of variables flagged for mean subtraction.
    pub fn mean_subtracted(&self) -> Vec<&str> {
        self.variables
            .iter()
            .filter(|v| v.mean_subtract)
            .map(|v| v.name.as_str())
            .collect()
    }

    /// Same layout at a different spatial resolution.
    pub fn with_n_x(&self, n_x: usize) -> Result<Self> {
        Self::new(self.variables.clone(), n_x, self.groups.clone())
    }
}

/// One parameter's full-state trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSet {
    pub parameter: Vec<f64>,
    pub times: Vec<f64>,
    /// N×K, column k is the state at `times[k]`.
    pub states: DMatrix<f64>,
    /// m×K input samples.
    pub inputs: DMatrix<f64>,
    pub layout: VariableLayout,
    /// Closed-form input description, when the generator knows it.
    pub input_ramp: Option<InputRamp>,
}

impl SnapshotSet {
    pub fn new(
        parameter: Vec<f64>,
        times: Vec<f64>,
        states: DMatrix<f64>,
        inputs: DMatrix<f64>,
        layout: VariableLayout,
        input_ramp: Option<InputRamp>,
    ) -> Result<Self> {
        let set = Self {
            parameter,
            times,
            states,
            inputs,
            layout,
            input_ramp,
        };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        let k = self.times.len();
        if self.states.nrows() != self.layout.state_dim() {
            return Err(Error::DimensionMismatch(format!(
                "states have {} rows, layout expects N = {}",
                self.states.nrows(),
                self.layout.state_dim()
            )));
        }
        if self.states.ncols() != k || self.inputs.ncols() != k {
            return Err(Error::DimensionMismatch(format!(
                "time grid has {k} points, states {} columns, inputs {} columns",
                self.states.ncols(),
                self.inputs.ncols()
            )));
        }
        check_uniform(&self.times)?;
        if let Some(ramp) = &self.input_ramp {
            ramp.validate()?;
            if ramp.channels() != self.inputs.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "input ramp has {} channels, inputs have {}",
                    ramp.channels(),
                    self.inputs.nrows()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.nrows()
    }

    /// Uniform step δ (zero for a single-snapshot set).
    pub fn delta(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
        }
    }

    /// Input signal usable between snapshot times: the closed-form ramp if
    /// one was recorded, otherwise linear interpolation of the samples.
    pub fn input_signal(&self) -> Result<Box<dyn InputSignal>> {
        match &self.input_ramp {
            Some(ramp) => Ok(Box::new(ramp.instantiate(&self.parameter)?)),
            None => Ok(Box::new(SampledSignal::new(
                self.times[0],
                self.delta().max(f64::MIN_POSITIVE),
                self.inputs.clone(),
            )?)),
        }
    }
}

pub(crate) fn check_uniform(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::DimensionMismatch("empty time grid".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("time grid".into()));
    }
    if times.len() < 2 {
        return Ok(());
    }
    let delta = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(delta > 0.0) {
        return Err(Error::NonUniformTimeGrid(
            "times are not strictly increasing".into(),
        ));
    }
    for (k, t) in times.iter().enumerate() {
        let expected = times[0] + k as f64 * delta;
        if (t - expected).abs() > GRID_TOLERANCE * delta * (1.0 + k as f64) {
            return Err(Error::NonUniformTimeGrid(format!(
                "t[{k}] = {t} deviates from the uniform grid value {expected}"
            )));
        }
    }
    Ok(())
}

/// Uniform grid t0, t0 + δ, …, t0 + (K−1)δ.
pub fn uniform_times(t0: f64, delta: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| t0 + i as f64 * delta).collect()
}

/// On-disk manifest describing one snapshot set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub parameter: Vec<f64>,
    pub n_x: usize,
    pub m: usize,
    pub delta: f64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default)]
    pub t0: f64,
    /// Explicit time grid; when absent the grid is t0 + kδ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default = "default_states_file")]
    pub states: String,
    #[serde(default = "default_inputs_file")]
    pub inputs: String,
    pub variables: Vec<Variable>,
    #[serde(default)]
    pub variable_groups: Vec<VariableGroup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_ramp: Option<InputRamp>,
}

fn default_states_file() -> String {
    STATES_FILE.into()
}

fn default_inputs_file() -> String {
    INPUTS_FILE.into()
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Accepts either a manifest file or a directory containing `manifest.toml`.
pub fn resolve_manifest(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

pub fn load_snapshot_set(manifest_path: &Path) -> Result<SnapshotSet> {
    let manifest_path = resolve_manifest(manifest_path);
    let manifest = Manifest::read(&manifest_path)?;
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let layout = VariableLayout::new(
        manifest.variables.clone(),
        manifest.n_x,
        manifest.variable_groups.clone(),
    )
    .map_err(|e| Error::Manifest {
        path: manifest_path.clone(),
        message: e.to_string(),
    })?;
    let times = match &manifest.times {
        Some(t) => {
            if t.len() != manifest.k {
                return Err(Error::DimensionMismatch(format!(
                    "manifest declares K = {} but lists {} times",
                    manifest.k,
                    t.len()
                )));
            }
            check_uniform(t)?;
            if manifest.k > 1 && ((t[1] - t[0]) - manifest.delta).abs() > 1e-9 * manifest.delta {
                return Err(Error::NonUniformTimeGrid(format!(
                    "listed times have step {}, manifest declares delta = {}",
                    t[1] - t[0],
                    manifest.delta
                )));
            }
            t.clone()
        }
        None => {
            if !(manifest.delta > 0.0) {
                return Err(Error::Manifest {
                    path: manifest_path.clone(),
                    message: format!("delta must be positive, got {}", manifest.delta),
                });
            }
            uniform_times(manifest.t0, manifest.delta, manifest.k)
        }
    };
    let states = read_matrix(&dir.join(&manifest.states), layout.state_dim(), manifest.k)?;
    let inputs = read_matrix(&dir.join(&manifest.inputs), manifest.m, manifest.k)?;
    SnapshotSet::new(
        manifest.parameter,
        times,
        states,
        inputs,
        layout,
        manifest.input_ramp,
    )
}

/// Writes `manifest.toml`, `states.bin` and `inputs.bin` into `dir`.
pub fn write_snapshot_set(set: &SnapshotSet, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest {
        parameter: set.parameter.clone(),
        n_x: set.layout.n_x(),
        m: set.num_inputs(),
        delta: set.delta(),
        k: set.len(),
        t0: set.times[0],
        times: None,
        states: STATES_FILE.into(),
        inputs: INPUTS_FILE.into(),
        variables: set.layout.variables().to_vec(),
        variable_groups: set.layout.groups().to_vec(),
        input_ramp: set.input_ramp.clone(),
    };
    // keep the exact grid whenever t0 + kδ would not reproduce it bit-for-bit
    let manifest = if uniform_times(manifest.t0, manifest.delta, manifest.k) == set.times {
        manifest
    } else {
        Manifest {
            times: Some(set.times.clone()),
            ..manifest
        }
    };
    write_matrix(&dir.join(STATES_FILE), &set.states)?;
    write_matrix(&dir.join(INPUTS_FILE), &set.inputs)?;
    let path = dir.join(MANIFEST_FILE);
    let text = toml::to_string(&manifest).map_err(|e| Error::Manifest {
        path: path.clone(),
        message: e.to_string(),
    })?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn matrix_to_le_bytes(m: &DMatrix<f64>) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(m.len() * 8);
    for v in m.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

pub fn le_bytes_to_f64(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect()
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, matrix_to_le_bytes(m)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: &Path, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = rows * cols * 8;
    if bytes.len() != expected {
        let held = if rows > 0 {
            bytes.len() / (8 * rows)
        } else {
            0
        };
        return Err(Error::DimensionMismatch(format!(
            "{} holds {} bytes ({} columns of {} rows), expected {} bytes for {}×{}",
            path.display(),
            bytes.len(),
            held,
            rows,
            expected,
            rows,
            cols
        )));
    }
    Ok(DMatrix::from_vec(rows, cols, le_bytes_to_f64(&bytes)))
}

/// Column-concatenated training snapshots.
#[derive(Clone, Debug)]
pub struct GlobalDataMatrix {
    pub matrix: DMatrix<f64>,
    /// (parameter index ℓ, time index k) of every column.
    pub column_map: Vec<(usize, usize)>,
    /// Column range of each input set.
    pub spans: Vec<Range<usize>>,
    pub layout: VariableLayout,
}

impl GlobalDataMatrix {
    pub fn num_sets(&self) -> usize {
        self.spans.len()
    }

    /// Columns belonging to set `l`.
    pub fn set_columns(&self, l: usize) -> DMatrix<f64> {
        let span = self.spans[l].clone();
        self.matrix.columns(span.start, span.len()).into_owned()
    }
}

pub fn assemble_global(sets: &[SnapshotSet]) -> Result<GlobalDataMatrix> {
    let first = sets
        .first()
        .ok_or_else(|| Error::InvalidArgument("no snapshot sets to assemble".into()))?;
    for (l, s) in sets.iter().enumerate().skip(1) {
        if s.layout != first.layout {
            return Err(Error::LayoutMismatch(format!(
                "set {l} has {} variables × {} points, set 0 has {} × {}",
                s.layout.n_v(),
                s.layout.n_x(),
                first.layout.n_v(),
                first.layout.n_x()
            )));
        }
    }
    let n = first.layout.state_dim();
    let total: usize = sets.iter().map(SnapshotSet::len).sum();
    let mut matrix = DMatrix::zeros(n, total);
    let mut column_map = Vec::with_capacity(total);
    let mut spans = Vec::with_capacity(sets.len());
    let mut col = 0;
    for (l, s) in sets.iter().enumerate() {
        matrix.columns_mut(col, s.len()).copy_from(&s.states);
        column_map.extend((0..s.len()).map(|k| (l, k)));
        spans.push(col..col + s.len());
        col += s.len();
    }
    Ok(GlobalDataMatrix {
        matrix,
        column_map,
        spans,
        layout: first.layout.clone(),
    })
}
