//! Domain types and the threshold-coupled return dynamics.

mod coupling;
mod engine;
mod types;

pub use coupling::{alpha_matrix, coupling_alpha, coupling_beta, wrapped_lag, DAY_HOURS};
pub use engine::{
    firing_history, replay, simulate, simulate_from, threshold_test, transfer_from_history,
    transfer_return, update_cum, FiredStress, FiringEntry, Network, NetworkState, Transfer,
    INITIAL_PRICE,
};
pub use types::{
    Contribution, EventKind, EventTimeline, Exchange, MarketEvent, ModelParams, Modes,
    Normalization, ObservedPanel, ReturnPanel, Sidedness, StepRecord, Universe,
};
