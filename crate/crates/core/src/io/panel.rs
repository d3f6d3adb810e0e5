use std::collections::HashMap;

use chrono::NaiveDate;
use serde::Serialize;

use super::prices::PriceTable;
use super::timeline::build_timeline;
use crate::error::DataError;
use crate::model::{EventKind, EventTimeline, ObservedPanel, Universe};

/// An event whose return could not be computed from the price rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gap {
    pub seq: usize,
    pub exchange_id: String,
    pub date: NaiveDate,
    pub kind: EventKind,
}

/// Timeline over every date present in the price table.
pub fn timeline_from_prices(universe: &Universe, prices: &PriceTable) -> Result<EventTimeline, DataError> {
    build_timeline(universe, &prices.dates())
}

/// Attaches observed log returns to events: a Close gets the same-day
/// open-to-close return, an Open the return from the last available close.
/// Events without the needed prices become gaps.
pub fn panel_from_prices(
    prices: &PriceTable,
    universe: &Universe,
    timeline: &EventTimeline,
) -> Result<(ObservedPanel, Vec<Gap>), DataError> {
    let mut by_key: HashMap<(usize, NaiveDate), (f64, f64)> = HashMap::with_capacity(prices.len());
    for row in prices.rows() {
        let i = universe.index_of(&row.exchange_id).ok_or_else(|| {
            DataError::Config(format!("price rows reference unknown exchange {}", row.exchange_id))
        })?;
        by_key.insert((i, row.date), (row.open, row.close));
    }

    let dates = timeline.dates();
    let mut last_close: Vec<Option<f64>> = vec![None; universe.len()];
    let mut returns = Vec::with_capacity(timeline.len());
    let mut gaps = Vec::new();
    for ev in timeline.events() {
        let date = dates[ev.day];
        let row = by_key.get(&(ev.exchange, date));
        let r = match (ev.kind, row) {
            (EventKind::Close, Some(&(open, close))) => {
                last_close[ev.exchange] = Some(close);
                Some((close / open).ln())
            }
            (EventKind::Open, Some(&(open, _))) => last_close[ev.exchange].map(|c| (open / c).ln()),
            (_, None) => None,
        };
        if r.is_none() {
            gaps.push(Gap {
                seq: ev.seq,
                exchange_id: universe.exchanges()[ev.exchange].id.clone(),
                date,
                kind: ev.kind,
            });
        }
        returns.push(r);
    }
    let panel = ObservedPanel::new(universe.clone(), timeline.clone(), returns)?;
    Ok((panel, gaps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::prices::parse_prices_reader;
    use crate::model::Exchange;
    use approx::assert_relative_eq;

    fn universe() -> Universe {
        Universe::new(vec![
            Exchange::new("A", "A", 1.0, 0.0, 9.0, 17.0).unwrap(),
            Exchange::new("B", "B", 2.0, 0.0, 10.0, 16.0).unwrap(),
        ])
        .unwrap()
    }

    fn table(csv: &str) -> PriceTable {
        parse_prices_reader(csv.as_bytes(), "mem", &universe()).unwrap()
    }

    #[test]
    fn open_close_returns() {
        let t = table(
            "exchange_id,date,open,close\n\
             A,2024-01-02,100,102\n\
             A,2024-01-03,102,101\n\
             B,2024-01-02,50,50\n\
             B,2024-01-03,50,55\n",
        );
        let tl = timeline_from_prices(&universe(), &t).unwrap();
        let (panel, gaps) = panel_from_prices(&t, &universe(), &tl).unwrap();
        // A open d0, B open d0 are gaps (no prior close)
        assert_eq!(gaps.len(), 2);
        let get = |id: usize, kind: EventKind, day: usize| {
            let k = tl
                .events()
                .iter()
                .position(|e| e.exchange == id && e.kind == kind && e.day == day)
                .unwrap();
            panel.returns()[k]
        };
        assert_relative_eq!(get(0, EventKind::Close, 0).unwrap(), 0.019_802_627_296_179_712, epsilon = 1e-15);
        assert_eq!(get(0, EventKind::Open, 1), Some(0.0));
        assert_relative_eq!(get(1, EventKind::Close, 1).unwrap(), (1.1f64).ln(), epsilon = 1e-15);
        assert_eq!(get(0, EventKind::Open, 0), None);
    }

    #[test]
    fn missing_day_gives_two_gaps_and_spares_neighbours() {
        let t = table(
            "exchange_id,date,open,close\n\
             A,2024-01-02,100,102\n\
             A,2024-01-04,104,103\n\
             B,2024-01-02,50,50\n\
             B,2024-01-03,50,55\n\
             B,2024-01-04,55,56\n",
        );
        let u = universe();
        let tl = timeline_from_prices(&u, &t).unwrap();
        let (panel, gaps) = panel_from_prices(&t, &u, &tl).unwrap();
        let a_gaps: Vec<_> = gaps.iter().filter(|g| g.exchange_id == "A" && g.date.to_string() == "2024-01-03").collect();
        assert_eq!(a_gaps.len(), 2);
        // A's open on the 4th is measured from the close on the 2nd
        let k = tl
            .events()
            .iter()
            .position(|e| e.exchange == 0 && e.kind == EventKind::Open && e.day == 2)
            .unwrap();
        assert_relative_eq!(panel.returns()[k].unwrap(), (104.0f64 / 102.0).ln(), epsilon = 1e-15);
        let k = tl
            .events()
            .iter()
            .position(|e| e.exchange == 0 && e.kind == EventKind::Close && e.day == 0)
            .unwrap();
        assert!(panel.returns()[k].is_some());
    }

    #[test]
    fn price_parse_errors() {
        let u = universe();
        let unknown = "exchange_id,date,open,close\nXXX,2024-01-02,1,2\n";
        let err = parse_prices_reader(unknown.as_bytes(), "p", &u).unwrap_err();
        assert!(err.to_string().contains("unknown exchange \"XXX\""), "{err}");

        let negative = "exchange_id,date,open,close\nA,2024-01-02,-5,2\n";
        let err = parse_prices_reader(negative.as_bytes(), "p", &u).unwrap_err();
        assert!(err.to_string().contains("open"), "{err}");

        let dup = "exchange_id,date,open,close\nA,2024-01-02,1,2\nA,2024-01-02,1,3\n";
        let err = parse_prices_reader(dup.as_bytes(), "p", &u).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");

        let header = "id,date,open,close\nA,2024-01-02,1,2\n";
        assert!(parse_prices_reader(header.as_bytes(), "p", &u).is_err());
    }

    #[test]
    fn every_bad_row_is_listed() {
        let u = universe();
        let text = "exchange_id,date,open,close\nA,2024-01-02,1,2\nQ,2024-01-02,1,2\nA,2024-13-01,1,2\nB,2024-01-02,0,x\n";
        let Err(DataError::Rows { errors, .. }) = parse_prices_reader(text.as_bytes(), "p", &u) else {
            panic!()
        };
        let rows: Vec<usize> = errors.iter().map(|e| e.row).collect();
        assert_eq!(rows, vec![3, 4, 5, 5]);
    }

    #[test]
    fn valid_file_preserves_rows_sorted() {
        let t = table(
            "exchange_id,date,open,close\n\
             B,2024-01-03,50,55\n\
             A,2024-01-03,102,101\n\
             A,2024-01-02,100,102\n",
        );
        assert_eq!(t.len(), 3);
        let order: Vec<_> = t.rows().iter().map(|r| (r.exchange_id.as_str(), r.date.to_string())).collect();
        assert_eq!(
            order,
            vec![
                ("A", "2024-01-02".to_string()),
                ("A", "2024-01-03".to_string()),
                ("B", "2024-01-03".to_string())
            ]
        );
    }
}
