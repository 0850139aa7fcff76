//! Error measures between full-order and reduced-order trajectories in
//! physical units.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::snapshots::VariableLayout;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointwiseMax {
    pub value: f64,
    /// Spatial index within the group field.
    pub j: usize,
    /// Time index.
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub groups: Vec<String>,
    pub per_group: Vec<f64>,
    pub average: f64,
    pub pointwise_max: Vec<PointwiseMax>,
}

impl ErrorReport {
    pub fn group(&self, name: &str) -> Option<f64> {
        self.groups
            .iter()
            .position(|g| g == name)
            .map(|i| self.per_group[i])
    }

    /// CSV with header `group,relative_error,pointwise_max`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "group,relative_error,pointwise_max")?;
        for ((g, e), p) in self
            .groups
            .iter()
            .zip(&self.per_group)
            .zip(&self.pointwise_max)
        {
            writeln!(out, "{g},{e:.17e},{:.17e}", p.value)?;
        }
        writeln!(out, "average,{:.17e},", self.average)
    }
}

fn check_shapes(fom: &DMatrix<f64>, rom: &DMatrix<f64>, layout: &VariableLayout) -> Result<()> {
    if fom.shape() != rom.shape() {
        return Err(Error::DimensionMismatch(format!(
            "FOM is {:?}, ROM is {:?}",
            fom.shape(),
            rom.shape()
        )));
    }
    if fom.nrows() != layout.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "trajectories have {} rows, layout expects {}",
            fom.nrows(),
            layout.state_dim()
        )));
    }
    Ok(())
}

/// Group field restricted to `rows` (spatial indices), combining multiple
/// members by the pointwise Euclidean norm.
fn group_field(
    m: &DMatrix<f64>,
    layout: &VariableLayout,
    g: usize,
    rows: &[usize],
) -> DMatrix<f64> {
    let members = layout.group_members(g);
    let k = m.ncols();
    if members.len() == 1 {
        let base = layout.block(members[0]).start;
        return DMatrix::from_fn(rows.len(), k, |i, c| m[(base + rows[i], c)]);
    }
    let bases: Vec<usize> = members.iter().map(|&v| layout.block(v).start).collect();
    DMatrix::from_fn(rows.len(), k, |i, c| {
        bases
            .iter()
            .map(|b| m[(b + rows[i], c)].powi(2))
            .sum::<f64>()
            .sqrt()
    })
}

fn report_over_rows(
    fom: &DMatrix<f64>,
    rom: &DMatrix<f64>,
    layout: &VariableLayout,
    rows: &[usize],
) -> Result<ErrorReport> {
    let mut per_group = Vec::with_capacity(layout.groups().len());
    let mut pointwise_max = Vec::with_capacity(layout.groups().len());
    for (g, group) in layout.groups().iter().enumerate() {
        let f = group_field(fom, layout, g, rows);
        let r = group_field(rom, layout, g, rows);
        let reference = f.norm();
        if reference == 0.0 {
            return Err(Error::DegenerateGroup(group.name.clone()));
        }
        let diff = &f - &r;
        per_group.push(diff.norm() / reference);
        let peak = f.amax();
        let (mut best, mut at) = (0.0, (0, 0));
        for c in 0..diff.ncols() {
            for j in 0..diff.nrows() {
                let v = diff[(j, c)].abs();
                if v > best || (best == 0.0 && v.is_nan()) {
                    best = v;
                    at = (j, c);
                }
            }
        }
        pointwise_max.push(PointwiseMax {
            value: best / peak,
            j: rows[at.0],
            k: at.1,
        });
    }
    let average = per_group.iter().sum::<f64>() / per_group.len() as f64;
    Ok(ErrorReport {
        groups: layout.groups().iter().map(|g| g.name.clone()).collect(),
        per_group,
        average,
        pointwise_max,
    })
}

/// Per-group ‖S_FOM − S_ROM‖_F / ‖S_FOM‖_F and their uniform average.
pub fn relative_state_error(
    fom: &DMatrix<f64>,
    rom: &DMatrix<f64>,
    layout: &VariableLayout,
) -> Result<ErrorReport> {
    check_shapes(fom, rom, layout)?;
    let rows: Vec<usize> = (0..layout.n_x()).collect();
    report_over_rows(fom, rom, layout, &rows)
}

/// The relative error restricted to the spatial indices in `mask`.
pub fn masked_error(
    fom: &DMatrix<f64>,
    rom: &DMatrix<f64>,
    layout: &VariableLayout,
    mask: &[usize],
) -> Result<ErrorReport> {
    check_shapes(fom, rom, layout)?;
    if mask.is_empty() {
        return Err(Error::InvalidArgument("empty spatial mask".into()));
    }
    if let Some(bad) = mask.iter().find(|&&j| j >= layout.n_x()) {
        return Err(Error::InvalidArgument(format!(
            "mask index {bad} out of range for n_x = {}",
            layout.n_x()
        )));
    }
    let mut rows = mask.to_vec();
    rows.sort_unstable();
    rows.dedup();
    report_over_rows(fom, rom, layout, &rows)
}

/// Υ_{j,k} = |fom − rom| / max |fom| for every group, as n_x×K fields.
pub fn pointwise_error(
    fom: &DMatrix<f64>,
    rom: &DMatrix<f64>,
    layout: &VariableLayout,
) -> Result<Vec<DMatrix<f64>>> {
    check_shapes(fom, rom, layout)?;
    let rows: Vec<usize> = (0..layout.n_x()).collect();
    layout
        .groups()
        .iter()
        .enumerate()
        .map(|(g, group)| {
            let f = group_field(fom, layout, g, &rows);
            let r = group_field(rom, layout, g, &rows);
            let peak = f.amax();
            if peak == 0.0 {
                return Err(Error::DegenerateGroup(group.name.clone()));
            }
            Ok((f - r).map(|d| d.abs() / peak))
        })
        .collect()
}

/// Parameter-sweep table: `mu_1,…,mu_dp,average,<group>…`.
pub fn write_sweep_table<W: Write>(
    rows: &[(Vec<f64>, ErrorReport)],
    mut out: W,
) -> std::io::Result<()> {
    let Some((mu0, first)) = rows.first() else {
        return writeln!(out, "average");
    };
    let mut header: Vec<String> = (1..=mu0.len()).map(|i| format!("mu_{i}")).collect();
    header.push("average".into());
    header.extend(first.groups.iter().cloned());
    writeln!(out, "{}", header.join(","))?;
    for (mu, report) in rows {
        let mut fields: Vec<String> = mu.iter().map(|v| format!("{v}")).collect();
        fields.push(format!("{:.17e}", report.average));
        fields.extend(report.per_group.iter().map(|e| format!("{e:.17e}")));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshots::{Variable, VariableGroup};

    fn layout() -> VariableLayout {
        VariableLayout::new(
            vec![
                Variable::new("p", "Pa"),
                Variable::new("vx", "m/s"),
                Variable::new("vz", "m/s"),
            ],
            3,
            vec![
                VariableGroup::new("p", &["p"]),
                VariableGroup::new("vr", &["vx", "vz"]),
            ],
        )
        .unwrap()
    }

    fn fom() -> DMatrix<f64> {
        DMatrix::from_fn(9, 4, |i, k| 1.0 + (i as f64) * 0.3 - (k as f64) * 0.2)
    }

    #[test]
    fn identical_trajectories_have_zero_error() {
        let f = fom();
        let rep = relative_state_error(&f, &f, &layout()).unwrap();
        assert_eq!(rep.per_group, vec![0.0, 0.0]);
        assert_eq!(rep.average, 0.0);
        assert!(pointwise_error(&f, &f, &layout())
            .unwrap()
            .iter()
            .all(|m| m.amax() == 0.0));
    }

    #[test]
    fn zero_rom_gives_unit_error_and_scaled_rom_gives_factor() {
        let single = VariableLayout::new(vec![Variable::new("p", "")], 4, vec![]).unwrap();
        let f = DMatrix::from_fn(4, 3, |i, k| (i + 2 * k) as f64 - 2.5);
        let rep = relative_state_error(&f, &DMatrix::zeros(4, 3), &single).unwrap();
        assert!((rep.per_group[0] - 1.0).abs() < 1e-15);
        let rep = relative_state_error(&f, &(&f * 1.1), &single).unwrap();
        assert!((rep.per_group[0] - 0.1).abs() < 1e-14);
    }

    #[test]
    fn norm_groups_combine_pointwise() {
        let l = layout();
        let mut f = DMatrix::zeros(9, 1);
        let mut r = DMatrix::zeros(9, 1);
        for j in 0..3 {
            f[(j, 0)] = 1.0;
            r[(j, 0)] = 1.0;
            f[(3 + j, 0)] = 3.0;
            f[(6 + j, 0)] = 4.0;
            // same magnitude, rotated components
            r[(3 + j, 0)] = 4.0;
            r[(6 + j, 0)] = 3.0;
        }
        let rep = relative_state_error(&f, &r, &l).unwrap();
        assert!(rep.group("vr").unwrap().abs() < 1e-15);
    }

    #[test]
    fn average_is_group_mean() {
        let f = fom();
        let r = f.map(|v| v * 0.97 + 0.01);
        let rep = relative_state_error(&f, &r, &layout()).unwrap();
        let mean = rep.per_group.iter().sum::<f64>() / 2.0;
        assert!((rep.average - mean).abs() <= 1e-14);
    }

    #[test]
    fn scale_invariance() {
        let f = fom();
        let r = f.map(|v| v * 0.9 - 0.05);
        let a = relative_state_error(&f, &r, &layout()).unwrap();
        let b = relative_state_error(&(&f * -7.5), &(&r * -7.5), &layout()).unwrap();
        for (x, y) in a.per_group.iter().zip(&b.per_group) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn pointwise_unit_error_at_peak_offset() {
        let single = VariableLayout::new(vec![Variable::new("p", "")], 3, vec![]).unwrap();
        let f = DMatrix::from_row_slice(3, 2, &[1.0, -4.0, 2.0, 0.5, 3.0, 1.0]);
        let mut r = f.clone();
        r[(2, 0)] += 4.0;
        let ups = pointwise_error(&f, &r, &single).unwrap();
        assert_eq!(ups[0][(2, 0)], 1.0);
        let rep = relative_state_error(&f, &r, &single).unwrap();
        assert_eq!(
            rep.pointwise_max[0],
            PointwiseMax {
                value: 1.0,
                j: 2,
                k: 0
            }
        );
        // max Υ · max|fom| = max |fom − rom|
        assert!((ups[0].amax() * f.amax() - (&f - &r).amax()).abs() < 1e-15);
    }

    #[test]
    fn masks() {
        let l = layout();
        let f = fom();
        let r = f.map(|v| v + 0.1);
        let full = masked_error(&f, &r, &l, &[0, 1, 2]).unwrap();
        assert_eq!(full, relative_state_error(&f, &r, &l).unwrap());
        assert_eq!(masked_error(&f, &f, &l, &[1]).unwrap().average, 0.0);
        assert!(masked_error(&f, &r, &l, &[]).is_err());
        assert!(masked_error(&f, &r, &l, &[3]).is_err());
    }

    #[test]
    fn degenerate_group_named() {
        let single = VariableLayout::new(vec![Variable::new("T", "")], 2, vec![]).unwrap();
        match relative_state_error(&DMatrix::zeros(2, 2), &DMatrix::zeros(2, 2), &single) {
            Err(Error::DegenerateGroup(name)) => assert_eq!(name, "T"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sweep_table_header() {
        let f = fom();
        let rep = relative_state_error(&f, &f, &layout()).unwrap();
        let mut buf = Vec::new();
        write_sweep_table(&[(vec![0.5, 1.5], rep)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("mu_1,mu_2,average,p,vr\n0.5,1.5,0.0"));
    }
}
