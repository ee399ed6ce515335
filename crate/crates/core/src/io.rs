//! CSV persistence for diagnostics, snapshots, energies and spectra.
//!
//! Floats are written in scientific notation with 17 significant digits, so
//! that files round-trip exactly and identical runs give identical bytes.

use std::io::{Read, Write};

use crate::energy::EnergyReport;
use crate::error::{Error, Result};
use crate::flow::DiagnosticsRecord;
use crate::spinor::{CurveField, SpinorField};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn write_rows<W, I>(out: W, header: &[String], rows: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = writer(out);
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_diagnostics<W: Write>(out: W, records: &[DiagnosticsRecord]) -> Result<()> {
    let header: Vec<String> = DiagnosticsRecord::COLUMNS.iter().map(|s| s.to_string()).collect();
    write_rows(
        out,
        &header,
        records.iter().map(|r| r.values().iter().map(|&v| fmt_f64(v)).collect()),
    )
}

pub fn read_diagnostics<R: Read>(input: R) -> Result<Vec<DiagnosticsRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(io_err)?.clone();
    if header.iter().ne(DiagnosticsRecord::COLUMNS.iter().copied()) {
        return Err(Error::Io(format!("unexpected diagnostics header: {header:?}")));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(io_err)?;
        let mut v = [0.0; 11];
        for (slot, field) in v.iter_mut().zip(row.iter()) {
            *slot = field
                .parse()
                .map_err(|e| Error::Io(format!("bad number `{field}`: {e}")))?;
        }
        out.push(DiagnosticsRecord::from_values(v));
    }
    Ok(out)
}

/// Per-node snapshot rows `s, u1..uq, re_psi1..q, im_psi1..q`.
pub fn write_snapshot<W: Write>(out: W, curve: &CurveField, psi: &SpinorField) -> Result<()> {
    crate::spinor::check_base(curve, psi)?;
    let q = curve.dim();
    let mut header = vec!["s".to_string()];
    header.extend((1..=q).map(|a| format!("u{a}")));
    header.extend((1..=q).map(|a| format!("re_psi{a}")));
    header.extend((1..=q).map(|a| format!("im_psi{a}")));
    let rows = (0..curve.len()).map(|j| {
        let mut row = vec![fmt_f64(curve.grid().node(j))];
        row.extend(curve.point(j).iter().map(|&x| fmt_f64(x)));
        row.extend(psi.node(j).iter().map(|z| fmt_f64(z.re)));
        row.extend(psi.node(j).iter().map(|z| fmt_f64(z.im)));
        row
    });
    write_rows(out, &header, rows)
}

/// Parsed snapshot: node positions, curve points and spinor values.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nodes: Vec<f64>,
    pub q: usize,
    pub points: Vec<f64>,
    pub spinor: Vec<num_complex::Complex64>,
}

pub fn read_snapshot<R: Read>(input: R) -> Result<Snapshot> {
    let mut rdr = csv::Reader::from_reader(input);
    let width = rdr.headers().map_err(io_err)?.len();
    if width < 4 || (width - 1) % 3 != 0 {
        return Err(Error::Io(format!("snapshot has {width} columns")));
    }
    let q = (width - 1) / 3;
    let mut snap = Snapshot {
        nodes: Vec::new(),
        q,
        points: Vec::new(),
        spinor: Vec::new(),
    };
    for row in rdr.records() {
        let row = row.map_err(io_err)?;
        let v: Vec<f64> = row
            .iter()
            .map(|f| f.parse().map_err(|e| Error::Io(format!("bad number `{f}`: {e}"))))
            .collect::<Result<_>>()?;
        snap.nodes.push(v[0]);
        snap.points.extend(&v[1..=q]);
        snap.spinor
            .extend((0..q).map(|a| num_complex::Complex64::new(v[1 + q + a], v[1 + 2 * q + a])));
    }
    Ok(snap)
}

pub const ENERGY_COLUMNS: [&str; 6] = ["dirichlet", "dirac", "regularizer", "E", "E_eps", "eps"];

/// One row per energy evaluation.
pub fn write_energy_reports<W: Write>(out: W, reports: &[EnergyReport]) -> Result<()> {
    let header: Vec<String> = ENERGY_COLUMNS.iter().map(|s| s.to_string()).collect();
    let rows = reports.iter().map(|r| {
        [r.dirichlet, r.dirac, r.regularizer, r.energy, r.energy_eps, r.eps]
            .iter()
            .map(|&v| fmt_f64(v))
            .collect()
    });
    write_rows(out, &header, rows)
}

/// Spectrum rows `index, value, symmetry_defect`.
pub fn write_spectrum<W: Write>(out: W, eigenvalues: &[f64], symmetry_defect: f64) -> Result<()> {
    let header = vec!["index".to_string(), "value".to_string(), "symmetry_defect".to_string()];
    let rows = eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &v)| vec![i.to_string(), fmt_f64(v), fmt_f64(symmetry_defect)]);
    write_rows(out, &header, rows)
}

/// Long-form rows `[eps,] t, quantity, value` for external plotting.
pub fn write_long_form<W: Write>(out: W, runs: &[(Option<f64>, Vec<DiagnosticsRecord>)]) -> Result<()> {
    let with_eps = runs.iter().any(|(e, _)| e.is_some());
    let mut header = Vec::new();
    if with_eps {
        header.push("eps".to_string());
    }
    header.extend(["t", "quantity", "value"].map(String::from));
    let mut rows = Vec::new();
    for (eps, records) in runs {
        for r in records {
            for (name, v) in DiagnosticsRecord::COLUMNS.iter().zip(r.values()).skip(1) {
                let mut row = Vec::with_capacity(4);
                if with_eps {
                    row.push(eps.map(fmt_f64).unwrap_or_default());
                }
                row.extend([fmt_f64(r.t), name.to_string(), fmt_f64(v)]);
                rows.push(row);
            }
        }
    }
    write_rows(out, &header, rows)
}
