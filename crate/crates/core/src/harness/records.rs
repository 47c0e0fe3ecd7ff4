//! CSV emission and parsing for experiment outputs.
//!
//! Floats are written with `{}` (shortest round-trip), absent values as
//! empty fields.

use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::{sort_records, EigenGrowthRow, GrowthFit, PowerLawFit, Regime, SweepRecord, TransitionResult};
use crate::torus::SampleSet;

pub const RECORDS_HEADER: [&str; 7] = ["n", "eps", "rep", "seed", "connected", "err", "energy"];
pub const TRANSITIONS_HEADER: [&str; 4] = ["n", "eps_argmin", "eps_hat", "eps_star"];
pub const GROWTH_HEADER: [&str; 7] = ["n", "rep", "eps_conn", "regime", "k_star", "lambda_kstar", "psi_inf_norm"];
pub const FITS_HEADER: [&str; 6] = ["quantity", "coefficient", "exponent", "n_min", "n_max", "points"];
pub const GROWTH_FITS_HEADER: [&str; 4] = ["regime", "intercept", "slope", "points"];

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes sweep records sorted by `(n, eps, rep)`.
pub fn write_records(records: &[SweepRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut w = writer(path)?;
    w.write_record(RECORDS_HEADER)?;
    for r in &sorted {
        w.write_record([
            r.n.to_string(),
            r.eps.to_string(),
            r.rep.to_string(),
            r.seed.to_string(),
            r.connected.to_string(),
            opt(r.err),
            opt(r.energy),
        ])?;
    }
    finish(w, path)
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, name: &str, field: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("bad {name}: {field:?}"),
    })
}

fn open_with_header(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let found: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {}, found {}", header.join(","), found.join(",")),
        });
    }
    Ok(r)
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<SweepRecord>> {
    let path = path.as_ref();
    let mut r = open_with_header(path, &RECORDS_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let f = |k: usize| rec.get(k).unwrap_or("");
        let optional = |k: usize, name: &str| -> Result<Option<f64>> {
            if f(k).is_empty() {
                Ok(None)
            } else {
                parse_field(path, line, name, f(k)).map(Some)
            }
        };
        out.push(SweepRecord {
            n: parse_field(path, line, "n", f(0))?,
            eps: parse_field(path, line, "eps", f(1))?,
            rep: parse_field(path, line, "rep", f(2))?,
            seed: parse_field(path, line, "seed", f(3))?,
            connected: parse_field(path, line, "connected", f(4))?,
            err: optional(5, "err")?,
            energy: optional(6, "energy")?,
        });
    }
    Ok(out)
}

pub fn write_transitions(rows: &[TransitionResult], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(TRANSITIONS_HEADER)?;
    for t in rows {
        w.write_record([
            t.n.to_string(),
            t.eps_argmin.to_string(),
            t.eps_hat.to_string(),
            t.eps_star.to_string(),
        ])?;
    }
    finish(w, path)
}

/// Fit rows for `eps_hat` and `eps_star` over the given window of `n`.
pub fn write_transition_fits(fits: &[(&str, PowerLawFit)], fit_ns: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(FITS_HEADER)?;
    let lo = fit_ns.iter().min().map(usize::to_string).unwrap_or_default();
    let hi = fit_ns.iter().max().map(usize::to_string).unwrap_or_default();
    for (name, fit) in fits {
        w.write_record([
            name.to_string(),
            fit.coefficient.to_string(),
            fit.exponent.to_string(),
            lo.clone(),
            hi.clone(),
            fit_ns.len().to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn write_growth_rows(rows: &[EigenGrowthRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(GROWTH_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.rep.to_string(),
            r.eps_conn.to_string(),
            r.regime.to_string(),
            r.k_star.to_string(),
            r.lambda_kstar.to_string(),
            r.psi_inf_norm.to_string(),
        ])?;
    }
    finish(w, path)
}

/// Reads growth rows back; `lambda_discrete` is not stored and comes back NaN.
pub fn read_growth_rows(path: impl AsRef<Path>) -> Result<Vec<EigenGrowthRow>> {
    let path = path.as_ref();
    let mut r = open_with_header(path, &GROWTH_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let f = |k: usize| rec.get(k).unwrap_or("");
        let regime: usize = parse_field(path, line, "regime", f(3))?;
        out.push(EigenGrowthRow {
            n: parse_field(path, line, "n", f(0))?,
            rep: parse_field(path, line, "rep", f(1))?,
            eps_conn: parse_field(path, line, "eps_conn", f(2))?,
            regime: Regime::from_index(regime).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("unknown regime {regime}"),
            })?,
            k_star: parse_field(path, line, "k_star", f(4))?,
            lambda_kstar: parse_field(path, line, "lambda_kstar", f(5))?,
            lambda_discrete: f64::NAN,
            psi_inf_norm: parse_field(path, line, "psi_inf_norm", f(6))?,
        });
    }
    Ok(out)
}

pub fn write_growth_fits(fits: &[GrowthFit], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(GROWTH_FITS_HEADER)?;
    for f in fits {
        w.write_record([
            f.regime.to_string(),
            f.intercept.to_string(),
            f.slope.to_string(),
            f.points.to_string(),
        ])?;
    }
    finish(w, path)
}

/// `x1,…,xd,<value_name>` per node.
pub fn write_node_values(points: &SampleSet, values: &[f64], value_name: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if points.len() != values.len() {
        return Err(Error::LengthMismatch {
            left: points.len(),
            right: values.len(),
        });
    }
    let mut w = writer(path)?;
    let mut header: Vec<String> = (1..=points.dim()).map(|k| format!("x{k}")).collect();
    header.push(value_name.to_string());
    w.write_record(&header)?;
    for (p, v) in points.points().zip(values) {
        let mut row: Vec<String> = p.iter().map(f64::to_string).collect();
        row.push(v.to_string());
        w.write_record(&row)?;
    }
    finish(w, path)
}

/// Reads a headed CSV `x1,…,xd,value`; the dimension is the column count
/// minus one.
pub fn read_labeled_points(path: impl AsRef<Path>) -> Result<(SampleSet, Vec<f64>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let width = r.headers()?.len();
    if width < 2 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "need at least one coordinate column and a value column".into(),
        });
    }
    let (mut coords, mut values) = (Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = parse_field(path, line, "number", field)?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("non-finite value {field:?}"),
                });
            }
            if k + 1 < width {
                coords.push(v);
            } else {
                values.push(v);
            }
        }
    }
    if values.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 2,
            message: "no rows".into(),
        });
    }
    Ok((SampleSet::from_flat(coords, width - 1)?, values))
}
