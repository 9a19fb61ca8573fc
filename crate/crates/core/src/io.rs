//! CSV ingestion and output.
//!
//! Accepted inputs (header row required):
//!
//! * `value`: one return per row;
//! * `date,value`: dated returns;
//! * `date,price`: dated closing prices, converted to log returns downstream.
//!
//! Dates are ISO-8601 (`YYYY-MM-DD`). Rows with a missing value are rejected.

use std::io::{Read, Write};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::series::{log_returns, PriceSeries, ReturnSeries};

#[derive(Debug, Clone, PartialEq)]
pub enum SeriesInput {
    Prices(PriceSeries),
    Returns(ReturnSeries),
}

impl SeriesInput {
    /// Log returns of the input (identity for return inputs).
    pub fn into_returns(self) -> ReturnSeries {
        match self {
            SeriesInput::Prices(p) => log_returns(&p),
            SeriesInput::Returns(r) => r,
        }
    }
}

#[derive(Clone, Copy)]
enum Layout {
    Value,
    DateValue,
    DatePrice,
}

pub fn read_series<R: Read>(reader: R) -> Result<SeriesInput> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let names: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    let layout = match names
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["value"] => Layout::Value,
        ["date", "value"] => Layout::DateValue,
        ["date", "price"] => Layout::DatePrice,
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "unrecognised header {:?}; expected `value`, `date,value` or `date,price`",
                    headers.iter().collect::<Vec<_>>()
                ),
            })
        }
    };

    let mut values = Vec::new();
    let mut dates = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<&str> {
            match record.get(i) {
                Some(s) if !s.is_empty() => Ok(s),
                _ => Err(Error::Parse {
                    line,
                    message: format!("missing field {}", headers.get(i).unwrap_or("?")),
                }),
            }
        };
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("cannot parse {s:?} as a number: {e}"),
            })
        };
        match layout {
            Layout::Value => values.push(num(field(0)?)?),
            Layout::DateValue | Layout::DatePrice => {
                let d = field(0)?;
                let date = NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|e| Error::Parse {
                    line,
                    message: format!("cannot parse {d:?} as an ISO-8601 date: {e}"),
                })?;
                dates.push(date);
                values.push(num(field(1)?)?);
            }
        }
    }

    match layout {
        Layout::Value => ReturnSeries::new(values).map(SeriesInput::Returns),
        Layout::DateValue => ReturnSeries::with_dates(values, dates).map(SeriesInput::Returns),
        Layout::DatePrice => PriceSeries::new(values, Some(dates)).map(SeriesInput::Prices),
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Writes `value` rows, or `date,value` rows when the series is dated.
/// Values use the shortest representation that round-trips exactly.
pub fn write_returns<W: Write>(mut w: W, r: &ReturnSeries) -> Result<()> {
    match r.dates() {
        Some(dates) => {
            writeln!(w, "date,value")?;
            for (d, v) in dates.iter().zip(r.values()) {
                writeln!(w, "{},{}", d.format("%Y-%m-%d"), v)?;
            }
        }
        None => {
            writeln!(w, "value")?;
            for v in r.values() {
                writeln!(w, "{v}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
