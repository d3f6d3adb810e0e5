//! Plot-ready output files. Column layouts are listed in `docs/formats.md`.

use std::io::Write;

use serde::Serialize;

use crate::analysis::{BacktestReport, SyncCurve, TremorSeries};
use crate::calibration::{CalibrationOptions, CalibrationResult, GaussianFit, GridPointResult};
use crate::model::{Modes, ReturnPanel};

pub const SYNC_HEADER: [&str; 4] = ["bin_lo", "bin_hi", "probability", "count"];
pub const LEAD_LAG_HEADER: [&str; 5] = ["group", "bin_lo", "bin_hi", "probability", "count"];
pub const TREMOR_HEADER: [&str; 3] = ["date", "a_value", "world_index"];
pub const EVENTS_HEADER: [&str; 9] = [
    "seq", "exchange_id", "kind", "utc_time", "date", "return", "transfer", "eta", "n_star",
];

#[derive(Serialize)]
struct ParamsDoc {
    gamma: f64,
    tau: f64,
    r_c: f64,
    sigma: f64,
    sigma2: f64,
}

#[derive(Serialize)]
struct CalibrationDoc<'a> {
    params: ParamsDoc,
    modes: Modes,
    options: &'a CalibrationOptions,
    log_likelihood: f64,
    n_residuals: usize,
    fit: &'a GaussianFit,
    grid: &'a [GridPointResult],
}

/// Everything in the result except the per-event residuals, which go to the
/// events file.
pub fn write_calibration_json(result: &CalibrationResult, out: impl Write) -> std::io::Result<()> {
    let p = result.params;
    let doc = CalibrationDoc {
        params: ParamsDoc {
            gamma: p.gamma,
            tau: p.tau,
            r_c: p.r_c,
            sigma: p.sigma,
            sigma2: p.variance(),
        },
        modes: result.modes,
        options: &result.options,
        log_likelihood: result.log_likelihood,
        n_residuals: result.n_residuals,
        fit: &result.fit,
        grid: &result.table,
    };
    write_json(&doc, out)
}

pub fn write_backtest_json(report: &BacktestReport, out: impl Write) -> std::io::Result<()> {
    write_json(report, out)
}

pub fn write_json(value: &impl Serialize, mut out: impl Write) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_sync_csv(curve: &SyncCurve, out: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SYNC_HEADER)?;
    for b in &curve.bins {
        w.write_record([b.lo.to_string(), b.hi.to_string(), opt(b.probability), b.count.to_string()])?;
    }
    w.flush()
}

/// One block of rows per named responder group.
pub fn write_lead_lag_csv(groups: &[(String, SyncCurve)], out: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LEAD_LAG_HEADER)?;
    for (name, curve) in groups {
        for b in &curve.bins {
            w.write_record([
                name.clone(),
                b.lo.to_string(),
                b.hi.to_string(),
                opt(b.probability),
                b.count.to_string(),
            ])?;
        }
    }
    w.flush()
}

pub fn write_tremor_csv(series: &TremorSeries, out: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TREMOR_HEADER)?;
    for d in &series.days {
        w.write_record([d.date.to_string(), d.a_value.to_string(), d.world_index.to_string()])?;
    }
    w.flush()
}

/// Per-event decomposition; gaps keep their row with empty value fields.
pub fn write_events_csv(panel: &ReturnPanel, out: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVENTS_HEADER)?;
    let ex = panel.universe().exchanges();
    let dates = panel.timeline().dates();
    for (ev, rec) in panel.timeline().events().iter().zip(panel.records()) {
        let head = [
            ev.seq.to_string(),
            ex[ev.exchange].id.clone(),
            ev.kind.as_str().to_string(),
            ev.utc_time.to_string(),
            dates[ev.day].to_string(),
        ];
        let tail = match rec {
            Some(r) => [
                r.return_total.to_string(),
                r.transfer.to_string(),
                r.eta.to_string(),
                r.n_star.to_string(),
            ],
            None => Default::default(),
        };
        w.write_record(head.iter().chain(tail.iter()))?;
    }
    w.flush()
}
