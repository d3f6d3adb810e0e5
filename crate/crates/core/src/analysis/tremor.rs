use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::model::{EventKind, ReturnPanel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TremorDay {
    pub date: NaiveDate,
    /// Sum of transfer terms over the day's events.
    pub a_value: f64,
    pub world_index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TremorSeries {
    pub days: Vec<TremorDay>,
}

/// Daily tremor activity and a capitalization-weighted world index that
/// compounds each day's weighted close-to-close log return from 1.0.
/// Exchanges missing either of a day's returns drop out of that day's weights.
pub fn tremor_activity(panel: &ReturnPanel) -> TremorSeries {
    let caps = panel.universe().capitalizations();
    let n = caps.len();
    let dates = panel.timeline().dates();
    let mut a = vec![0.0; dates.len()];
    let mut open = vec![vec![None; n]; dates.len()];
    let mut close = vec![vec![None; n]; dates.len()];
    for rec in panel.records().iter().flatten() {
        let ev = &rec.event;
        a[ev.day] += rec.transfer;
        match ev.kind {
            EventKind::Open => open[ev.day][ev.exchange] = Some(rec.return_total),
            EventKind::Close => close[ev.day][ev.exchange] = Some(rec.return_total),
        }
    }
    let mut level = 1.0;
    let days = dates
        .iter()
        .enumerate()
        .map(|(d, &date)| {
            let (num, den) = (0..n).fold((0.0, 0.0), |(num, den), i| match (open[d][i], close[d][i]) {
                (Some(o), Some(c)) => (num + caps[i] * (o + c), den + caps[i]),
                _ => (num, den),
            });
            if den > 0.0 {
                level *= (num / den).exp();
            }
            TremorDay {
                date,
                a_value: a[d],
                world_index: level,
            }
        })
        .collect();
    TremorSeries { days }
}
