//! Series CSV interchange.
//!
//! Canonical schema (header required): `series_id,period,index,value`.
//! Rows for one series must be contiguous and index-sorted from 0; values
//! must parse as finite reals (missing or non-numeric values are load-time
//! errors).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

const HEADER: [&str; 4] = ["series_id", "period", "index", "value"];

pub fn read_series_csv(path: impl AsRef<Path>) -> Result<Vec<TimeSeries>> {
    let file = std::fs::File::open(path)?;
    read_series(file)
}

pub fn read_series<R: Read>(reader: R) -> Result<Vec<TimeSeries>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    {
        let headers = rdr.headers()?;
        if headers.iter().ne(HEADER.iter().copied()) {
            return Err(Error::Format {
                line: 1,
                message: format!(
                    "expected header '{}', got '{}'",
                    HEADER.join(","),
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
    }

    let mut out: Vec<TimeSeries> = Vec::new();
    let mut seen: std::collections::HashSet<String> = std::collections::HashSet::new();
    let mut cur_id: Option<String> = None;
    let mut cur_period = 1usize;
    let mut cur_values: Vec<f64> = Vec::new();

    let mut flush = |id: Option<String>, period: usize, values: &mut Vec<f64>| -> Result<()> {
        if let Some(id) = id {
            out.push(TimeSeries::new(id, period, std::mem::take(values))?);
        }
        Ok(())
    };

    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| -> Result<&str> {
            record.get(i).ok_or(Error::Format {
                line,
                message: format!("expected {} fields, got {}", HEADER.len(), record.len()),
            })
        };
        let id = field(0)?.to_string();
        let period: usize = field(1)?.parse().map_err(|_| Error::Format {
            line,
            message: format!("bad period '{}'", field(1).unwrap_or("")),
        })?;
        let index: usize = field(2)?.parse().map_err(|_| Error::Format {
            line,
            message: format!("bad index '{}'", field(2).unwrap_or("")),
        })?;
        let raw = field(3)?;
        let value: f64 = raw.parse().map_err(|_| Error::Format {
            line,
            message: format!("bad value '{raw}'"),
        })?;
        if !value.is_finite() {
            return Err(Error::Format { line, message: format!("non-finite value '{raw}'") });
        }

        let same_series = cur_id.as_deref() == Some(id.as_str());
        if !same_series {
            flush(cur_id.take(), cur_period, &mut cur_values)?;
            if !seen.insert(id.clone()) {
                return Err(Error::Format {
                    line,
                    message: format!("rows for series '{id}' are not contiguous"),
                });
            }
            cur_id = Some(id);
            cur_period = period;
        } else if period != cur_period {
            return Err(Error::Format {
                line,
                message: format!(
                    "inconsistent period for series '{id}': {cur_period} then {period}"
                ),
            });
        }
        if index != cur_values.len() {
            return Err(Error::Format {
                line,
                message: format!("expected index {}, got {index}", cur_values.len()),
            });
        }
        cur_values.push(value);
    }
    flush(cur_id.take(), cur_period, &mut cur_values)?;
    Ok(out)
}

pub fn write_series_csv(path: impl AsRef<Path>, series: &[TimeSeries]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_series(file, series)
}

pub fn write_series<W: Write>(writer: W, series: &[TimeSeries]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(HEADER)?;
    for s in series {
        for (i, v) in s.values().iter().enumerate() {
            wtr.write_record([
                s.id(),
                &s.period().to_string(),
                &i.to_string(),
                &v.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}
