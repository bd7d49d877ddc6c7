//! Per-sample classification tables for ternary plots.

use std::io;

use serde::{Serialize, Serializer};

use crate::config::Tolerances;
use crate::error::{CertError, Result};
use crate::flow::FlowPreset;
use crate::region::{Membership, RegionSpec};
use crate::sampling::{map_chunks, Sampler};
use crate::Point3;

pub const CSV_HEADER: &str = "a,b,c,in_cone,in_sublevel,cert_phi,cert_psi,phi,psi,margin_worst";

/// Membership written as `1`, `0` or `indeterminate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Flag(pub Membership);

impl Serialize for Flag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Membership::In => s.serialize_u8(1),
            Membership::Out => s.serialize_u8(0),
            Membership::Indeterminate => s.serialize_str("indeterminate"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExportRow {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub in_cone: Flag,
    pub in_sublevel: Flag,
    pub cert_phi: Flag,
    pub cert_psi: Flag,
    pub phi: f64,
    pub psi: f64,
    /// Smallest margin among the determinate classifications.
    pub margin_worst: f64,
}

/// The four regions a row reports on, in column order.
pub fn export_regions(preset: &FlowPreset, threshold: f64) -> [RegionSpec; 4] {
    [
        preset.cone(),
        RegionSpec::sublevel(preset.phi.clone(), threshold),
        RegionSpec::certificate(preset.speed.clone(), preset.phi.clone()),
        RegionSpec::certificate(preset.speed.clone(), preset.psi.clone()),
    ]
}

pub fn export_row(
    preset: &FlowPreset,
    regions: &[RegionSpec; 4],
    p: &Point3,
    tol: &Tolerances,
) -> ExportRow {
    let cls = regions.each_ref().map(|r| r.classify(p, tol));
    let margin_worst = cls
        .iter()
        .filter(|c| c.membership != Membership::Indeterminate)
        .map(|c| c.margin)
        .fold(f64::INFINITY, f64::min);
    let [a, b, c] = *p.lambdas();
    ExportRow {
        a,
        b,
        c,
        in_cone: Flag(cls[0].membership),
        in_sublevel: Flag(cls[1].membership),
        cert_phi: Flag(cls[2].membership),
        cert_psi: Flag(cls[3].membership),
        phi: preset.phi.value(p).unwrap_or(f64::NAN),
        psi: preset.psi.value(p).unwrap_or(f64::NAN),
        margin_worst,
    }
}

/// One row per sample, in sampler order.
pub fn export_rows(
    preset: &FlowPreset,
    threshold: f64,
    sampler: &Sampler,
    tol: &Tolerances,
    workers: usize,
) -> Result<Vec<ExportRow>> {
    sampler.validate()?;
    let regions = export_regions(preset, threshold);
    for r in &regions {
        r.validate()?;
    }
    let chunks = map_chunks(sampler, workers, |chunk| {
        chunk
            .map(|p| export_row(preset, &regions, &p, tol))
            .collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

pub fn write_csv<W: io::Write>(rows: &[ExportRow], w: W) -> Result<()> {
    let io_err = |e: csv::Error| CertError::InvalidArgument(format!("writing CSV: {e}"));
    let mut out = csv::Writer::from_writer(w);
    if rows.is_empty() {
        out.write_record(CSV_HEADER.split(',')).map_err(io_err)?;
    }
    for r in rows {
        out.serialize(r).map_err(io_err)?;
    }
    out.flush()
        .map_err(|e| CertError::InvalidArgument(format!("writing CSV: {e}")))
}

pub fn to_csv_string(rows: &[ExportRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| CertError::InvalidArgument(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowName;
    use crate::CurvaturePoint;

    #[test]
    fn grid_four_has_three_rows_and_header() {
        let preset = FlowPreset::get(FlowName::H3);
        let rows = export_rows(
            &preset,
            0.125,
            &Sampler::Grid { resolution: 4 },
            &Tolerances::default(),
            1,
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        let s = to_csv_string(&rows).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.count(), 3);
        assert!(to_csv_string(&[]).unwrap().starts_with(CSV_HEADER));
    }

    #[test]
    fn umbilic_and_two_one_one_rows() {
        let preset = FlowPreset::get(FlowName::H3);
        let regions = export_regions(&preset, 0.125);
        let tol = Tolerances::default();
        let u = CurvaturePoint::new([1.0 / 3.0; 3]).unwrap();
        let row = export_row(&preset, &regions, &u, &tol);
        assert_eq!(row.in_cone, Flag(Membership::In));
        assert_eq!(row.in_sublevel, Flag(Membership::Indeterminate));

        let p = CurvaturePoint::new([0.5, 0.25, 0.25]).unwrap();
        let row = export_row(&preset, &regions, &p, &tol);
        assert!((row.phi - 0.125).abs() < 1e-12);
        assert_eq!(row.in_cone, Flag(Membership::In));
        let line = to_csv_string(&[row]).unwrap();
        assert!(line
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("0.5,0.25,0.25,1,1,"));
    }
}
