use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{
    transfer_return, MarketEvent, ModelParams, Modes, Network, NetworkState, ObservedPanel,
    Universe,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prediction {
    Up,
    Down,
    Abstain,
}

impl Prediction {
    pub fn from_transfer(transfer: f64) -> Self {
        if transfer > 0.0 {
            Prediction::Up
        } else if transfer < 0.0 {
            Prediction::Down
        } else {
            Prediction::Abstain
        }
    }

    /// Whether the realized return confirms the call. A flat return confirms
    /// nothing.
    pub fn hit(self, realized: f64) -> bool {
        match self {
            Prediction::Up => realized > 0.0,
            Prediction::Down => realized < 0.0,
            Prediction::Abstain => false,
        }
    }
}

/// Sign of the transfer term `event` would receive from `state`.
pub fn predict_sign(
    state: &NetworkState,
    event: &MarketEvent,
    universe: &Universe,
    params: &ModelParams,
    modes: Modes,
) -> Result<Prediction, ModelError> {
    transfer_return(event.exchange, event.utc_time, state, universe, params, modes)
        .map(|t| Prediction::from_transfer(t.value))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    /// Events with an observed return.
    pub n_events: usize,
    /// Events with a nonzero transfer term.
    pub n_predicted: usize,
    pub hits: usize,
    /// `hits / n_predicted`; abstentions are left out of the denominator.
    pub hit_rate: Option<f64>,
    /// `hits / n_events`; abstentions count as misses.
    pub strict_hit_rate: Option<f64>,
}

/// Walks the observed panel from zero stress, predicting each event's sign
/// from the transfer term before its own return is priced in.
pub fn backtest(observed: &ObservedPanel, params: ModelParams, modes: Modes) -> Result<BacktestReport, ModelError> {
    let network = Network::new(observed.universe(), params, modes);
    let state = network.initial_state(observed.timeline().events()[0].utc_time);
    backtest_from(&network, state, observed)
}

/// [`backtest`] from an arbitrary starting state.
pub fn backtest_from(
    network: &Network<'_>,
    state: NetworkState,
    observed: &ObservedPanel,
) -> Result<BacktestReport, ModelError> {
    let preds = predictions_from(network, state, observed)?;
    let mut report = BacktestReport {
        n_events: 0,
        n_predicted: 0,
        hits: 0,
        hit_rate: None,
        strict_hit_rate: None,
    };
    for (p, r) in preds.iter().zip(observed.returns()) {
        let (Some(p), Some(r)) = (p, r) else { continue };
        report.n_events += 1;
        if *p != Prediction::Abstain {
            report.n_predicted += 1;
            report.hits += p.hit(*r) as usize;
        }
    }
    report.hit_rate = (report.n_predicted > 0).then(|| report.hits as f64 / report.n_predicted as f64);
    report.strict_hit_rate = (report.n_events > 0).then(|| report.hits as f64 / report.n_events as f64);
    Ok(report)
}

/// The call made at every event; `None` at gaps.
pub fn predictions(observed: &ObservedPanel, params: ModelParams, modes: Modes) -> Result<Vec<Option<Prediction>>, ModelError> {
    let network = Network::new(observed.universe(), params, modes);
    let state = network.initial_state(observed.timeline().events()[0].utc_time);
    predictions_from(&network, state, observed)
}

fn predictions_from(
    network: &Network<'_>,
    mut state: NetworkState,
    observed: &ObservedPanel,
) -> Result<Vec<Option<Prediction>>, ModelError> {
    let mut out = Vec::with_capacity(observed.returns().len());
    for (event, r) in observed.timeline().events().iter().zip(observed.returns()) {
        match r {
            Some(r) => {
                // the record's transfer is computed before the return is committed
                let rec = network.observe(&mut state, event, *r)?;
                out.push(Some(Prediction::from_transfer(rec.transfer)));
            }
            None => {
                network.skip(&mut state, event)?;
                out.push(None);
            }
        }
    }
    Ok(out)
}
