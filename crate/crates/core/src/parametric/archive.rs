//! Model archive: a magic line, a TOML header, a payload marker line, then
//! checksummed little-endian `f64` sections in header order.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{build_interpolant, ParametricRom, TimeGrid};
use crate::error::{Error, Result};
use crate::features::{FeatureDims, ORDERING_TAG};
use crate::opinf::{ReducedOperatorSet, Regularization};
use crate::pod::PodBasis;
use crate::scaling::{ScalingTransform, VariableScaling};
use crate::signal::InputRamp;
use crate::snapshots::{le_bytes_to_f64, matrix_to_le_bytes, VariableLayout};

pub const ARCHIVE_MAGIC: &str = "OPINF-ROM-ARCHIVE";
pub const ARCHIVE_FORMAT: &str = "parametric-quadratic-rom";
pub const ARCHIVE_VERSION: u32 = 1;
const PAYLOAD_MARKER: &str = "%%PAYLOAD";

#[derive(Debug, Serialize, Deserialize)]
struct Section {
    name: String,
    /// Number of f64 values.
    len: usize,
    crc32: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    ordering: String,
    r: usize,
    m: usize,
    d_p: usize,
    d: usize,
    #[serde(rename = "N")]
    n: usize,
    target_rank: usize,
    time_grid: TimeGrid,
    mean_subtracted: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    regularization: Option<Regularization>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_ramp: Option<InputRamp>,
    layout: VariableLayout,
    sections: Vec<Section>,
}

const SECTIONS: [&str; 6] = [
    "basis",
    "singular_values",
    "scaling",
    "train_params",
    "operators",
    "reference_state",
];

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptArchive(msg.into())
}

pub fn save_model(rom: &ParametricRom, path: &Path) -> Result<()> {
    let interp = &rom.interpolant;
    let dims = interp.operator_sets()[0].dims();
    let d = interp.train_params().len();
    let d_p = interp.parameter_dim();

    let scaling: Vec<f64> = rom
        .scaling
        .variables()
        .iter()
        .flat_map(|v| [v.shift, v.scale])
        .collect();
    let params: Vec<f64> = interp.train_params().iter().flatten().copied().collect();
    let mut operators = Vec::with_capacity(d * dims.r * dims.total());
    for o in interp.operator_sets() {
        operators.extend_from_slice(o.stacked().as_slice());
    }
    let payloads: Vec<Vec<u8>> = vec![
        matrix_to_le_bytes(rom.basis.basis()),
        f64_bytes(rom.basis.singular_values()),
        f64_bytes(&scaling),
        f64_bytes(&params),
        f64_bytes(&operators),
        f64_bytes(rom.reference_state.as_slice()),
    ];
    let sections = SECTIONS
        .iter()
        .zip(&payloads)
        .map(|(name, bytes)| Section {
            name: name.to_string(),
            len: bytes.len() / 8,
            crc32: crc32fast::hash(bytes),
        })
        .collect();
    let header = Header {
        format: ARCHIVE_FORMAT.into(),
        version: ARCHIVE_VERSION,
        ordering: ORDERING_TAG.into(),
        r: dims.r,
        m: dims.m,
        d_p,
        d,
        n: rom.layout.state_dim(),
        target_rank: rom.basis.target_rank(),
        time_grid: rom.time_grid,
        mean_subtracted: rom
            .scaling
            .variables()
            .iter()
            .map(|v| v.mean_subtracted)
            .collect(),
        regularization: rom.regularization,
        input_ramp: rom.input_ramp.clone(),
        layout: rom.layout.clone(),
        sections,
    };
    let text = toml::to_string(&header).map_err(|e| Error::Config(e.to_string()))?;
    let mut out =
        Vec::with_capacity(text.len() + payloads.iter().map(Vec::len).sum::<usize>() + 64);
    out.extend_from_slice(ARCHIVE_MAGIC.as_bytes());
    out.push(b'\n');
    out.extend_from_slice(text.as_bytes());
    out.extend_from_slice(PAYLOAD_MARKER.as_bytes());
    out.push(b'\n');
    for p in &payloads {
        out.extend_from_slice(p);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn f64_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn load_model(path: &Path) -> Result<ParametricRom> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse(&bytes)
}

fn find_line(bytes: &[u8], line: &str) -> Option<usize> {
    let needle = format!("\n{line}\n");
    bytes
        .windows(needle.len())
        .position(|w| w == needle.as_bytes())
        .map(|p| p + 1)
}

fn parse(bytes: &[u8]) -> Result<ParametricRom> {
    if bytes.is_empty() {
        return Err(corrupt("empty file"));
    }
    let magic = format!("{ARCHIVE_MAGIC}\n");
    if !bytes.starts_with(magic.as_bytes()) {
        return Err(corrupt("missing archive magic line"));
    }
    let marker =
        find_line(bytes, PAYLOAD_MARKER).ok_or_else(|| corrupt("missing payload marker"))?;
    let text = std::str::from_utf8(&bytes[magic.len()..marker])
        .map_err(|_| corrupt("header is not UTF-8"))?;
    let header: Header = toml::from_str(text).map_err(|e| corrupt(format!("header: {e}")))?;
    if header.format != ARCHIVE_FORMAT || header.version != ARCHIVE_VERSION {
        return Err(Error::VersionMismatch(format!(
            "archive is {} v{}, this build reads {ARCHIVE_FORMAT} v{ARCHIVE_VERSION}",
            header.format, header.version
        )));
    }
    if header.ordering != ORDERING_TAG {
        return Err(Error::VersionMismatch(format!(
            "feature ordering `{}` differs from `{ORDERING_TAG}`",
            header.ordering
        )));
    }

    let mut payload = &bytes[marker + PAYLOAD_MARKER.len() + 1..];
    let mut values = Vec::with_capacity(SECTIONS.len());
    if header.sections.len() != SECTIONS.len() {
        return Err(corrupt(format!("expected {} sections", SECTIONS.len())));
    }
    for (expected, s) in SECTIONS.iter().zip(&header.sections) {
        if s.name != *expected {
            return Err(corrupt(format!(
                "section `{}` where `{expected}` was expected",
                s.name
            )));
        }
        let n = s.len * 8;
        if payload.len() < n {
            return Err(corrupt(format!("section `{}` truncated", s.name)));
        }
        let (chunk, rest) = payload.split_at(n);
        if crc32fast::hash(chunk) != s.crc32 {
            return Err(corrupt(format!(
                "checksum mismatch in section `{}`",
                s.name
            )));
        }
        values.push(le_bytes_to_f64(chunk));
        payload = rest;
    }
    if !payload.is_empty() {
        return Err(corrupt(format!("{} trailing bytes", payload.len())));
    }
    let [basis, sigma, scaling, params, operators, reference]: [Vec<f64>; 6] =
        values.try_into().expect("six sections");

    let dims = FeatureDims::new(header.r, header.m)?;
    let n = header.n;
    let expect = |name: &str, got: usize, want: usize| {
        if got == want {
            Ok(())
        } else {
            Err(corrupt(format!(
                "section `{name}` holds {got} values, expected {want}"
            )))
        }
    };
    expect("basis", basis.len(), n * header.r)?;
    expect("singular_values", sigma.len(), header.target_rank)?;
    expect("scaling", scaling.len(), 2 * header.layout.n_v())?;
    expect("train_params", params.len(), header.d * header.d_p)?;
    expect(
        "operators",
        operators.len(),
        header.d * dims.r * dims.total(),
    )?;
    expect("reference_state", reference.len(), n)?;
    if header.layout.state_dim() != n || header.mean_subtracted.len() != header.layout.n_v() {
        return Err(corrupt("layout disagrees with declared dimensions"));
    }

    let basis = PodBasis::from_parts(DMatrix::from_vec(n, header.r, basis), sigma)?;
    let scaling = ScalingTransform::from_parts(
        header.layout.n_x(),
        header
            .layout
            .variables()
            .iter()
            .zip(scaling.chunks_exact(2))
            .zip(&header.mean_subtracted)
            .map(|((v, pair), &flag)| VariableScaling {
                name: v.name.clone(),
                shift: pair[0],
                scale: pair[1],
                mean_subtracted: flag,
            })
            .collect(),
    )?;
    let train_params: Vec<Vec<f64>> = params
        .chunks_exact(header.d_p.max(1))
        .map(<[f64]>::to_vec)
        .collect();
    let block = dims.r * dims.total();
    let operator_sets = operators
        .chunks_exact(block)
        .map(|c| {
            ReducedOperatorSet::from_stacked(
                &DMatrix::from_column_slice(dims.r, dims.total(), c),
                dims,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let interpolant = build_interpolant(train_params, operator_sets)?;
    Ok(ParametricRom::new(
        interpolant,
        basis,
        scaling,
        header.layout,
        header.time_grid,
        DVector::from_vec(reference),
    )?
    .with_input_ramp(header.input_ramp)
    .with_regularization(header.regularization))
}
