//! Spring-block network model of the world's stock exchanges.
//!
//! Each exchange is a block whose cumulative log return ("stress") is ignored
//! by the rest of the world until it exceeds a threshold. At that point it is
//! priced in by the next exchanges to open or close, weighted by relative
//! capitalization and by the time elapsed since the information was released,
//! and then deleted. Local news enters every block as Gaussian noise.
//!
//! The crate is split into:
//!
//! * [`model`]: domain types, couplings and the event-driven stepping engine.
//! * [`calibration`]: residual extraction, slaved-γ estimation and grid search.
//! * [`analysis`]: synchronization curves, lead-lag curves, sign-prediction
//!   backtest and the tremor-activity index.
//! * [`io`]: universe configuration, price files, timeline construction,
//!   synthetic data generation and output formats.
//! * [`stats`]: the small amount of distribution code the fits need.

pub mod analysis;
pub mod calibration;
pub mod error;
pub mod io;
pub mod model;
pub mod stats;

pub use error::{AnalysisError, CalibrationError, DataError, ModelError};
pub use model::{
    coupling_alpha, coupling_beta, simulate, threshold_test, transfer_return, update_cum,
    EventKind, EventTimeline, Exchange, MarketEvent, Modes, Network, NetworkState,
    Normalization, ObservedPanel, ModelParams, ReturnPanel, Sidedness, StepRecord, Universe,
};
