//! Results CSV.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use banditfit_core::{LoggingPolicy, Method};

use crate::harness::ResultRow;
use crate::Error;

pub const HEADER: [&str; 9] = [
    "method",
    "logging_policy",
    "train_size",
    "seed",
    "ab_ctr",
    "ab_stderr",
    "ips_value_on_holdout",
    "train_converged",
    "wall_time",
];

/// Formats `x` with six significant digits, like C's `%.6g`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_owned()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<(), Error> {
    if rows.is_empty() {
        return Err(Error::Report("no rows to write".into()));
    }
    let mut w = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Necessary)
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.method.name().to_owned(),
            r.logging_policy.name().to_owned(),
            r.train_size.to_string(),
            r.seed.to_string(),
            opt(r.ab_ctr),
            opt(r.ab_stderr),
            opt(r.ips_value_on_holdout),
            r.train_converged.to_string(),
            sig6(r.wall_time),
        ])?;
    }
    w.flush().map_err(|e| Error::io(Path::new("<csv>"), e))?;
    Ok(())
}

pub fn write_results_csv(rows: &[ResultRow], path: &Path) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_results(rows, file)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T, Error>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|e| Error::Report(format!("column {}: {raw:?}: {e}", HEADER[i])))
}

fn opt_field(rec: &csv::StringRecord, i: usize) -> Result<Option<f64>, Error> {
    if rec.get(i).unwrap_or("").is_empty() {
        Ok(None)
    } else {
        field(rec, i).map(Some)
    }
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>, Error> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(HEADER) {
        return Err(Error::Report("unexpected CSV header".into()));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(ResultRow {
            method: field::<Method>(&rec, 0)?,
            logging_policy: field::<LoggingPolicy>(&rec, 1)?,
            train_size: field(&rec, 2)?,
            seed: field(&rec, 3)?,
            ab_ctr: opt_field(&rec, 4)?,
            ab_stderr: opt_field(&rec, 5)?,
            ips_value_on_holdout: opt_field(&rec, 6)?,
            train_converged: field(&rec, 7)?,
            wall_time: field(&rec, 8)?,
        });
    }
    Ok(rows)
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>, Error> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_results(file)
}
