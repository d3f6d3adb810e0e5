use std::collections::HashMap;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{DataError, RowError};
use crate::model::{Exchange, Universe};

/// Which calendar days carry a trading session in synthetic mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DayConvention {
    #[default]
    Weekdays,
    AllDays,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calendar {
    pub start: NaiveDate,
    #[serde(default)]
    pub convention: DayConvention,
}

impl Default for Calendar {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date"),
            convention: DayConvention::Weekdays,
        }
    }
}

impl Calendar {
    /// The first `days` trading dates on or after `start`.
    pub fn dates(&self, days: usize) -> Vec<NaiveDate> {
        self.start
            .iter_days()
            .filter(|d| match self.convention {
                DayConvention::AllDays => true,
                DayConvention::Weekdays => !matches!(d.weekday(), Weekday::Sat | Weekday::Sun),
            })
            .take(days)
            .collect()
    }
}

/// A validated universe plus its synthetic calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct UniverseConfig {
    pub universe: Universe,
    pub calendar: Calendar,
}

/// The bundled illustrative 24-exchange configuration.
pub const DEFAULT_UNIVERSE_TOML: &str = include_str!("../../data/universe.toml");

pub fn default_universe() -> UniverseConfig {
    parse_universe_str(DEFAULT_UNIVERSE_TOML, "<bundled universe>")
        .expect("bundled universe is valid")
}

pub fn parse_universe(path: impl AsRef<Path>) -> Result<UniverseConfig, DataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_universe_str(&text, &path.display().to_string())
}

/// Parses the universe config; every invalid exchange entry is reported with
/// its 1-based position and the offending field.
pub fn parse_universe_str(text: &str, label: &str) -> Result<UniverseConfig, DataError> {
    let syntax = |message: String| DataError::Syntax {
        path: label.to_string(),
        message,
    };
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| syntax(e.to_string()))?;

    let calendar = match doc.get("calendar") {
        None => Calendar::default(),
        Some(value) => value
            .clone()
            .try_into::<Calendar>()
            .map_err(|e| syntax(format!("[calendar]: {e}")))?,
    };

    let entries = match doc.get("exchange") {
        Some(toml::Value::Array(entries)) => entries.as_slice(),
        Some(_) => return Err(syntax("`exchange` must be an array of tables".into())),
        None => &[],
    };

    let mut errors = Vec::new();
    let mut exchanges = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (k, entry) in entries.iter().enumerate() {
        let row = k + 1;
        match exchange_from_entry(row, entry) {
            Ok(ex) => {
                if let Some(first) = seen.get(&ex.id) {
                    errors.push(RowError {
                        row,
                        field: "id".into(),
                        message: format!("duplicate id {:?} (first defined in row {first})", ex.id),
                    });
                } else {
                    seen.insert(ex.id.clone(), row);
                    exchanges.push(ex);
                }
            }
            Err(mut e) => errors.append(&mut e),
        }
    }
    if !errors.is_empty() {
        return Err(DataError::Rows {
            path: label.to_string(),
            errors,
        });
    }
    if exchanges.len() < 2 {
        return Err(DataError::Config(format!(
            "{label}: at least 2 exchanges are required, found {}",
            exchanges.len()
        )));
    }
    Ok(UniverseConfig {
        universe: Universe::new(exchanges)?,
        calendar,
    })
}

fn exchange_from_entry(row: usize, entry: &toml::Value) -> Result<Exchange, Vec<RowError>> {
    let mut errors = Vec::new();
    let mut err = |field: &str, message: String| {
        errors.push(RowError {
            row,
            field: field.to_string(),
            message,
        })
    };
    let Some(table) = entry.as_table() else {
        err("-", "exchange entry must be a table".into());
        return Err(errors);
    };

    let id = match table.get("id").and_then(toml::Value::as_str) {
        Some(s) if !s.trim().is_empty() => s.to_string(),
        Some(_) => {
            err("id", "must not be empty".into());
            String::new()
        }
        None => {
            err("id", "missing or not a string".into());
            String::new()
        }
    };
    let name = table
        .get("name")
        .and_then(toml::Value::as_str)
        .map(str::to_string)
        .unwrap_or_else(|| id.clone());

    let mut number = |field: &str| -> Option<f64> {
        match table.get(field) {
            Some(toml::Value::Float(x)) => Some(*x),
            Some(toml::Value::Integer(x)) => Some(*x as f64),
            Some(_) => {
                err(field, "must be a number".into());
                None
            }
            None => {
                err(field, "missing".into());
                None
            }
        }
    };
    let capitalization = number("capitalization");
    let tz_offset = number("tz_offset");
    let open_hour = number("open_hour");
    let close_hour = number("close_hour");

    if let Some(k) = capitalization {
        if !(k.is_finite() && k > 0.0) {
            err("capitalization", "capitalization must be positive".into());
        }
    }
    if let Some(z) = tz_offset {
        if !(z.is_finite() && (-12.0..=14.0).contains(&z)) {
            err("tz_offset", format!("must lie in [-12, 14], got {z}"));
        }
    }
    for (field, hour) in [("open_hour", open_hour), ("close_hour", close_hour)] {
        if let Some(h) = hour {
            if !(h.is_finite() && (0.0..24.0).contains(&h)) {
                err(field, format!("must lie in [0, 24), got {h}"));
            }
        }
    }
    if let (Some(o), Some(c)) = (open_hour, close_hour) {
        if o == c {
            err("close_hour", "must differ from open_hour".into());
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(Exchange {
        id,
        name,
        capitalization: capitalization.unwrap_or_default(),
        tz_offset: tz_offset.unwrap_or_default(),
        open_hour: open_hour.unwrap_or_default(),
        close_hour: close_hour.unwrap_or_default(),
    })
}

/// Serializes a config back into the same TOML layout `parse_universe` reads.
pub fn universe_to_toml(config: &UniverseConfig) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        calendar: &'a Calendar,
        exchange: &'a [Exchange],
    }
    toml::to_string(&Doc {
        calendar: &config.calendar,
        exchange: config.universe.exchanges(),
    })
    .expect("universe serializes")
}
