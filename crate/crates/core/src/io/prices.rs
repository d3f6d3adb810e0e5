use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{DataError, RowError};
use crate::model::Universe;

pub const PRICE_HEADER: [&str; 4] = ["exchange_id", "date", "open", "close"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceRow {
    pub exchange_id: String,
    pub date: NaiveDate,
    pub open: f64,
    pub close: f64,
}

/// Validated price rows sorted by (exchange id, date).
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    rows: Vec<PriceRow>,
}

impl PriceTable {
    pub fn rows(&self) -> &[PriceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sorted unique dates that appear anywhere in the table.
    pub fn dates(&self) -> Vec<NaiveDate> {
        let mut dates: Vec<NaiveDate> = self.rows.iter().map(|r| r.date).collect();
        dates.sort_unstable();
        dates.dedup();
        dates
    }
}

pub fn parse_prices(path: impl AsRef<Path>, universe: &Universe) -> Result<PriceTable, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_prices_reader(file, &path.display().to_string(), universe)
}

/// Reads `exchange_id,date,open,close` rows. Nothing is dropped silently:
/// every rejected row appears in the returned error.
pub fn parse_prices_reader(
    reader: impl Read,
    label: &str,
    universe: &Universe,
) -> Result<PriceTable, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| DataError::Syntax {
        path: label.to_string(),
        message: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != PRICE_HEADER {
        return Err(DataError::Syntax {
            path: label.to_string(),
            message: format!(
                "expected header {:?}, found {:?}",
                PRICE_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut errors = Vec::new();
    let mut rows = Vec::new();
    let mut seen: HashMap<(String, NaiveDate), usize> = HashMap::new();
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
                errors.push(RowError {
                    row,
                    field: "-".into(),
                    message: e.to_string(),
                });
                continue;
            }
        };
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let mut bad = |field: &str, message: String| {
            errors.push(RowError {
                row,
                field: field.into(),
                message,
            })
        };
        let id = record.get(0).unwrap_or("").to_string();
        let id_ok = universe.index_of(&id).is_some();
        if !id_ok {
            bad("exchange_id", format!("unknown exchange {id:?}"));
        }
        let date = match NaiveDate::parse_from_str(record.get(1).unwrap_or(""), "%Y-%m-%d") {
            Ok(d) => Some(d),
            Err(e) => {
                bad("date", format!("not an ISO-8601 date ({e})"));
                None
            }
        };
        let mut price = |field: &str, idx: usize| -> Option<f64> {
            match record.get(idx).unwrap_or("").parse::<f64>() {
                Ok(p) if p.is_finite() && p > 0.0 => Some(p),
                Ok(p) => {
                    bad(field, format!("price must be positive, got {p}"));
                    None
                }
                Err(_) => {
                    bad(field, format!("not a number: {:?}", record.get(idx).unwrap_or("")));
                    None
                }
            }
        };
        let open = price("open", 2);
        let close = price("close", 3);

        if let (true, Some(date), Some(open), Some(close)) = (id_ok, date, open, close) {
            if let Some(first) = seen.get(&(id.clone(), date)) {
                errors.push(RowError {
                    row,
                    field: "date".into(),
                    message: format!("duplicate ({id}, {date}), first seen on row {first}"),
                });
            } else {
                seen.insert((id.clone(), date), row);
                rows.push(PriceRow {
                    exchange_id: id,
                    date,
                    open,
                    close,
                });
            }
        }
    }
    if !errors.is_empty() {
        return Err(DataError::Rows {
            path: label.to_string(),
            errors,
        });
    }
    rows.sort_by(|a, b| a.exchange_id.cmp(&b.exchange_id).then(a.date.cmp(&b.date)));
    Ok(PriceTable { rows })
}

/// Writes rows in the format `parse_prices` reads, in the given order.
pub fn write_prices(rows: &[PriceRow], out: impl std::io::Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PRICE_HEADER)?;
    for r in rows {
        w.write_record([
            r.exchange_id.clone(),
            r.date.format("%Y-%m-%d").to_string(),
            r.open.to_string(),
            r.close.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
