use chrono::NaiveDate;

use crate::error::DataError;
use crate::model::{EventKind, EventTimeline, MarketEvent, Universe};

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date")
}

/// Hours since 1970-01-01T00:00 UTC of a local clock hour on `date`.
pub fn utc_hours(date: NaiveDate, local_hour: f64, tz_offset: f64) -> f64 {
    let days = date.signed_duration_since(epoch()).num_days() as f64;
    days * 24.0 + local_hour - tz_offset
}

/// Emits an Open and a Close for every exchange on every date, sorted by UTC
/// time with simultaneous events ordered by exchange id.
pub fn build_timeline(universe: &Universe, dates: &[NaiveDate]) -> Result<EventTimeline, DataError> {
    if dates.is_empty() {
        return Err(DataError::Config("date span is empty".into()));
    }
    if dates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DataError::Config("dates must be strictly increasing".into()));
    }
    for e in universe.exchanges() {
        if e.close_hour < e.open_hour {
            return Err(DataError::Config(format!(
                "exchange {}: session {}-{} crosses local midnight, so open and close \
                 would not alternate within a trading day",
                e.id, e.open_hour, e.close_hour
            )));
        }
    }

    let mut events = Vec::with_capacity(dates.len() * universe.len() * 2);
    for (day, &date) in dates.iter().enumerate() {
        for (i, e) in universe.exchanges().iter().enumerate() {
            for (kind, hour) in [(EventKind::Open, e.open_hour), (EventKind::Close, e.close_hour)] {
                events.push(MarketEvent {
                    exchange: i,
                    kind,
                    utc_time: utc_hours(date, hour, e.tz_offset),
                    seq: 0,
                    day,
                });
            }
        }
    }
    let ids = universe.exchanges();
    events.sort_by(|a, b| {
        a.utc_time
            .total_cmp(&b.utc_time)
            .then_with(|| ids[a.exchange].id.cmp(&ids[b.exchange].id))
    });
    for (seq, ev) in events.iter_mut().enumerate() {
        ev.seq = seq;
    }
    // Alternation across days can still break when a long session runs into
    // the next day's open on the UTC axis; validation reports that case.
    EventTimeline::new(universe, dates.to_vec(), events)
        .map_err(|e| DataError::Config(e.to_string()))
}
