//! CSV readers and writers for paths, ensembles and psi tables.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grand_lebesgue::PsiFunction;
use crate::process_models::Ensemble;
use crate::quadrature::{SampledPath, UnitGrid};

/// Relative tolerance on the spacing of `t` values in a path file.
pub const SPACING_TOL: f64 = 1e-9;

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:?}")
    }
}

fn parse_f64(field: &str, what: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}: {what} {field:?} is not a number")))
}

fn two_columns<R: Read>(reader: R, names: (&str, &str)) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || &headers[0] != names.0 || &headers[1] != names.1 {
        return Err(Error::Parse(format!(
            "expected header `{},{}`, found `{}`",
            names.0,
            names.1,
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() < 2 {
            return Err(Error::Parse(format!("line {line}: expected two fields")));
        }
        rows.push((
            parse_f64(&rec[0], names.0, line)?,
            parse_f64(&rec[1], names.1, line)?,
        ));
    }
    Ok(rows)
}

/// Reads a `t,value` path on a closed uniform grid of `[0, 1]`.
pub fn read_path<R: Read>(reader: R) -> Result<SampledPath> {
    let rows = two_columns(reader, ("t", "value"))?;
    let grid = UnitGrid::new(rows.len())
        .map_err(|_| Error::Parse("a path needs at least two rows".into()))?;
    for (i, &(t, v)) in rows.iter().enumerate() {
        if (t - grid.node(i)).abs() > SPACING_TOL {
            return Err(Error::Parse(format!(
                "row {}: t = {t} is off the uniform grid (expected {})",
                i + 1,
                grid.node(i)
            )));
        }
        if !v.is_finite() {
            return Err(Error::Parse(format!("row {}: value is not finite", i + 1)));
        }
    }
    SampledPath::new(grid, rows.into_iter().map(|r| r.1).collect())
}

pub fn read_path_file(path: &Path) -> Result<SampledPath> {
    read_path(std::fs::File::open(path)?)
}

pub fn write_path<W: Write>(w: W, path: &SampledPath) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["t", "value"])?;
    for (t, v) in path.grid().nodes().iter().zip(path.values()) {
        wtr.write_record([fmt_f64(*t), fmt_f64(*v)])?;
    }
    wtr.flush()?;
    Ok(())
}

/// `replica,t,value`, replica-major.
pub fn write_ensemble<W: Write>(w: W, ens: &Ensemble) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["replica", "t", "value"])?;
    let nodes = ens.grid().nodes();
    for r in 0..ens.replicas() {
        for (t, v) in nodes.iter().zip(ens.path_values(r)) {
            wtr.write_record([r.to_string(), fmt_f64(*t), fmt_f64(*v)])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a `m,psi` table.
pub fn read_psi_table<R: Read>(reader: R) -> Result<PsiFunction> {
    PsiFunction::tabulated(two_columns(reader, ("m", "psi"))?)
}

/// Parses `sqrt`, `power:<l>` or `table:<file>`.
pub fn parse_psi_spec(spec: &str) -> Result<PsiFunction> {
    let spec = spec.trim();
    if spec == "sqrt" {
        return Ok(PsiFunction::sqrt());
    }
    if let Some(l) = spec.strip_prefix("power:") {
        let l = l
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad power exponent {l:?}")))?;
        return PsiFunction::power(l);
    }
    if let Some(file) = spec.strip_prefix("table:") {
        return read_psi_table(std::fs::File::open(file.trim())?);
    }
    Err(Error::Parse(format!(
        "unknown psi {spec:?}; expected sqrt, power:<l> or table:<file>"
    )))
}
