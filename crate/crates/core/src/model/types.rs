use std::collections::HashMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Static identity of one market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub id: String,
    pub name: String,
    /// Only ratios between capitalizations matter.
    pub capitalization: f64,
    /// Fixed offset from UTC in hours, in [-12, 14].
    pub tz_offset: f64,
    /// Local clock hours in [0, 24).
    pub open_hour: f64,
    pub close_hour: f64,
}

impl Exchange {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        capitalization: f64,
        tz_offset: f64,
        open_hour: f64,
        close_hour: f64,
    ) -> Result<Self, ModelError> {
        let exchange = Self {
            id: id.into(),
            name: name.into(),
            capitalization,
            tz_offset,
            open_hour,
            close_hour,
        };
        exchange.validate()?;
        Ok(exchange)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |reason: String| ModelError::InvalidExchange {
            id: self.id.clone(),
            reason,
        };
        if self.id.trim().is_empty() {
            return Err(fail("id must not be empty".into()));
        }
        if !(self.capitalization.is_finite() && self.capitalization > 0.0) {
            return Err(fail(format!(
                "capitalization must be positive, got {}",
                self.capitalization
            )));
        }
        if !(self.tz_offset.is_finite() && (-12.0..=14.0).contains(&self.tz_offset)) {
            return Err(fail(format!(
                "tz_offset must lie in [-12, 14], got {}",
                self.tz_offset
            )));
        }
        for (field, hour) in [("open_hour", self.open_hour), ("close_hour", self.close_hour)] {
            if !(hour.is_finite() && (0.0..24.0).contains(&hour)) {
                return Err(fail(format!("{field} must lie in [0, 24), got {hour}")));
            }
        }
        if self.open_hour == self.close_hour {
            return Err(fail("open_hour and close_hour must differ".into()));
        }
        Ok(())
    }
}

/// An ordered set of exchanges with unique ids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Universe {
    exchanges: Vec<Exchange>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Universe {
    pub fn new(exchanges: Vec<Exchange>) -> Result<Self, ModelError> {
        if exchanges.is_empty() {
            return Err(ModelError::UniverseTooSmall { min: 1, got: 0 });
        }
        let mut index = HashMap::with_capacity(exchanges.len());
        for (i, exchange) in exchanges.iter().enumerate() {
            exchange.validate()?;
            if index.insert(exchange.id.clone(), i).is_some() {
                return Err(ModelError::DuplicateId(exchange.id.clone()));
            }
        }
        Ok(Self { exchanges, index })
    }

    pub fn len(&self) -> usize {
        self.exchanges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exchanges.is_empty()
    }

    pub fn exchanges(&self) -> &[Exchange] {
        &self.exchanges
    }

    pub fn get(&self, i: usize) -> Option<&Exchange> {
        self.exchanges.get(i)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn capitalizations(&self) -> Vec<f64> {
        self.exchanges.iter().map(|e| e.capitalization).collect()
    }

    /// Index of the exchange with the largest capitalization (first on ties).
    pub fn largest(&self) -> usize {
        let mut best = 0;
        for (i, e) in self.exchanges.iter().enumerate() {
            if e.capitalization > self.exchanges[best].capitalization {
                best = i;
            }
        }
        best
    }
}

impl<'de> Deserialize<'de> for Universe {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            exchanges: Vec<Exchange>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Universe::new(raw.exchanges).map_err(serde::de::Error::custom)
    }
}

/// The four parameters that fix the network state space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Capitalization-dominance scale.
    pub gamma: f64,
    /// Time-zone decay scale, hours.
    pub tau: f64,
    /// Cumulative log-return threshold.
    pub r_c: f64,
    /// Standard deviation of local news.
    pub sigma: f64,
}

impl ModelParams {
    pub fn new(gamma: f64, tau: f64, r_c: f64, sigma: f64) -> Result<Self, ModelError> {
        for (name, value) in [("gamma", gamma), ("tau", tau), ("r_c", r_c)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::NotPositive { name, value });
            }
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(ModelError::Negative {
                name: "sigma",
                value: sigma,
            });
        }
        Ok(Self {
            gamma,
            tau,
            r_c,
            sigma,
        })
    }

    /// Builds parameters from the noise variance instead of its square root.
    pub fn with_variance(gamma: f64, tau: f64, r_c: f64, sigma2: f64) -> Result<Self, ModelError> {
        if !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(ModelError::Negative {
                name: "sigma2",
                value: sigma2,
            });
        }
        Self::new(gamma, tau, r_c, sigma2.sqrt())
    }

    /// The optimum reported for 24 leading exchanges on daily data since 2000:
    /// γ = 0.8, τ = 20 h, R_C = 0.03, σ² = 0.0006.
    pub fn reference() -> Self {
        Self {
            gamma: 0.8,
            tau: 20.0,
            r_c: 0.03,
            sigma: 0.0006f64.sqrt(),
        }
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// Which cumulative returns count as having crossed the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    /// |R_cum| > R_C: large moves in either direction are priced in.
    #[default]
    TwoSided,
    /// R_cum > R_C, the Heaviside argument taken literally.
    OneSidedLiteral,
}

/// Divisor applied to the transfer sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Average over the contributors that fired (N_i*).
    #[default]
    Contributors,
    /// Divide by every other exchange (N - 1), as in the residual construction.
    AllOthers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Modes {
    pub sidedness: Sidedness,
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    Open,
    Close,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Open => "open",
            EventKind::Close => "close",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketEvent {
    /// Index into the universe.
    pub exchange: usize,
    pub kind: EventKind,
    /// Hours since 1970-01-01T00:00 UTC.
    pub utc_time: f64,
    pub seq: usize,
    /// Index of the trading day in [`EventTimeline::dates`].
    pub day: usize,
}

/// Globally ordered open/close events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTimeline {
    dates: Vec<NaiveDate>,
    events: Vec<MarketEvent>,
}

impl EventTimeline {
    /// Validates ordering, sequence numbers and open/close alternation.
    pub fn new(
        universe: &Universe,
        dates: Vec<NaiveDate>,
        events: Vec<MarketEvent>,
    ) -> Result<Self, ModelError> {
        let timeline = Self { dates, events };
        timeline.validate(universe)?;
        Ok(timeline)
    }

    pub fn validate(&self, universe: &Universe) -> Result<(), ModelError> {
        let invalid = |msg: String| ModelError::InvalidTimeline(msg);
        if self.events.is_empty() {
            return Err(invalid("timeline is empty".into()));
        }
        let mut last_kind: Vec<Option<EventKind>> = vec![None; universe.len()];
        for (k, ev) in self.events.iter().enumerate() {
            if ev.seq != k {
                return Err(invalid(format!("event {k} carries seq {}", ev.seq)));
            }
            let Some(exchange) = universe.get(ev.exchange) else {
                return Err(ModelError::UnknownExchange {
                    seq: ev.seq,
                    exchange: ev.exchange,
                    size: universe.len(),
                });
            };
            if !ev.utc_time.is_finite() {
                return Err(invalid(format!("event {k} has non-finite time")));
            }
            if ev.day >= self.dates.len() {
                return Err(invalid(format!("event {k} refers to day {}", ev.day)));
            }
            if k > 0 {
                let prev = &self.events[k - 1];
                let prev_id = &universe.exchanges()[prev.exchange].id;
                let ordered = prev.utc_time < ev.utc_time
                    || (prev.utc_time == ev.utc_time && prev_id < &exchange.id);
                if !ordered {
                    return Err(invalid(format!(
                        "events {} and {k} are not strictly ordered by (time, id)",
                        k - 1
                    )));
                }
            }
            if last_kind[ev.exchange] == Some(ev.kind) {
                return Err(invalid(format!(
                    "exchange {} has two consecutive {} events (event {k})",
                    exchange.id,
                    ev.kind.as_str()
                )));
            }
            last_kind[ev.exchange] = Some(ev.kind);
        }
        Ok(())
    }

    pub fn events(&self) -> &[MarketEvent] {
        &self.events
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The first `n` events; dates are kept whole.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            dates: self.dates.clone(),
            events: self.events[..n.min(self.events.len())].to_vec(),
        }
    }
}

/// Additive share of one fired exchange in a transfer term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub exchange: usize,
    pub amount: f64,
}

/// Outcome of pricing one event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub event: MarketEvent,
    pub return_total: f64,
    pub transfer: f64,
    pub eta: f64,
    pub n_star: usize,
    pub contributors: Vec<Contribution>,
}

/// Returns attached to a timeline, with `None` marking a gap.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedPanel {
    universe: Universe,
    timeline: EventTimeline,
    returns: Vec<Option<f64>>,
}

impl ObservedPanel {
    pub fn new(
        universe: Universe,
        timeline: EventTimeline,
        returns: Vec<Option<f64>>,
    ) -> Result<Self, ModelError> {
        if returns.len() != timeline.len() {
            return Err(ModelError::Misaligned {
                records: returns.len(),
                events: timeline.len(),
            });
        }
        Ok(Self {
            universe,
            timeline,
            returns,
        })
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn timeline(&self) -> &EventTimeline {
        &self.timeline
    }

    pub fn returns(&self) -> &[Option<f64>] {
        &self.returns
    }

    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.returns.len());
        Self {
            universe: self.universe.clone(),
            timeline: self.timeline.truncated(n),
            returns: self.returns[..n].to_vec(),
        }
    }
}

/// Per-event returns with their decomposition into transfer and local news.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    universe: Universe,
    timeline: EventTimeline,
    records: Vec<Option<StepRecord>>,
}

impl ReturnPanel {
    pub fn new(
        universe: Universe,
        timeline: EventTimeline,
        records: Vec<Option<StepRecord>>,
    ) -> Result<Self, ModelError> {
        if records.len() != timeline.len() {
            return Err(ModelError::Misaligned {
                records: records.len(),
                events: timeline.len(),
            });
        }
        Ok(Self {
            universe,
            timeline,
            records,
        })
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn timeline(&self) -> &EventTimeline {
        &self.timeline
    }

    /// One entry per event; `None` where the observed return is missing.
    pub fn records(&self) -> &[Option<StepRecord>] {
        &self.records
    }

    pub fn observed(&self) -> ObservedPanel {
        ObservedPanel {
            universe: self.universe.clone(),
            timeline: self.timeline.clone(),
            returns: self
                .records
                .iter()
                .map(|r| r.as_ref().map(|r| r.return_total))
                .collect(),
        }
    }
}
