use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use aorc_core::PValueSample;

use crate::CliError;

/// 17 significant digits, enough for an exact round trip through text.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn csv_writer(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>, CliError> {
    Ok(csv::WriterBuilder::new().from_writer(sink(path)?))
}

pub fn write_json(path: Option<&Path>, value: &serde_json::Value) -> Result<(), CliError> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| CliError::Io(e.to_string()))
}

/// Reads a one-column CSV with header `p`.
pub fn read_pvalues(path: &Path) -> Result<PValueSample, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_pvalues(BufReader::new(file))
}

pub fn parse_pvalues(input: impl io::Read) -> Result<PValueSample, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers().map_err(|e| CliError::Parse(format!("line 1: {e}")))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(CliError::Parse("no p-values".into()));
    }
    if headers.len() != 1 || &headers[0] != "p" {
        return Err(CliError::Parse("line 1: expected a single header `p`".into()));
    }
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Parse(format!("line {line}: {e}"))
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 1 {
            return Err(CliError::Parse(format!("line {line}: expected one field, found {}", rec.len())));
        }
        let v: f64 = rec[0]
            .parse()
            .map_err(|_| CliError::Parse(format!("line {line}: cannot parse {:?} as a number", &rec[0])))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(CliError::Domain(format!("line {line}: p-value {v} outside [0, 1]")));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::Parse("no p-values".into()));
    }
    PValueSample::new(values).map_err(CliError::from)
}
