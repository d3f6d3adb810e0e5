//! Diagnostics on return panels: synchronization with the world return,
//! lead-lag response to a dominant market, sign-prediction backtest and the
//! daily tremor-activity index.

mod backtest;
mod sync;
mod tremor;

pub use backtest::{backtest, backtest_from, predict_sign, predictions, BacktestReport, Prediction};
pub use sync::{
    daily_returns, lag_groups, lead_lag_curve, lead_lag_curve_pairs, sync_curve, world_return,
    BinEdges, LagGroups, SyncBin, SyncCurve,
};
pub use tremor::{tremor_activity, TremorDay, TremorSeries};

/// Default lag (hours from the mover's close to a responder's open) separating
/// short-lag from long-lag responders.
pub const DEFAULT_LAG_SPLIT_HOURS: f64 = 8.0;
