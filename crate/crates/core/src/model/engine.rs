use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::coupling::{alpha_matrix, alpha_unchecked, wrapped_lag};
use super::types::{
    Contribution, EventTimeline, MarketEvent, ModelParams, Modes, Normalization, ObservedPanel,
    ReturnPanel, Sidedness, StepRecord, Universe,
};
use crate::error::ModelError;

/// Starting price of every index in simulated panels.
pub const INITIAL_PRICE: f64 = 100.0;

/// Whether a cumulative return counts as released information. Strict in both modes.
#[inline]
pub fn threshold_test(r_cum: f64, r_c: f64, sidedness: Sidedness) -> bool {
    match sidedness {
        Sidedness::TwoSided => r_cum.abs() > r_c,
        Sidedness::OneSidedLiteral => r_cum > r_c,
    }
}

/// Next cumulative return of an exchange. Stress that fired is deleted
/// before the fresh return accrues.
#[inline]
pub fn update_cum(r_cum_prev: f64, r_new: f64, fired_prev: bool) -> f64 {
    if fired_prev {
        r_new
    } else {
        r_cum_prev + r_new
    }
}

/// Stress of exchange `exchange` visible to a pricing event, above threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiredStress {
    pub exchange: usize,
    pub r_cum: f64,
    /// Wrapped hours between the stress's last update and the pricing event.
    pub lag: f64,
}

/// Transfer term of one pricing event.
#[derive(Debug, Clone, PartialEq)]
pub struct Transfer {
    pub value: f64,
    pub n_star: usize,
    pub contributors: Vec<Contribution>,
}

impl Transfer {
    fn empty() -> Self {
        Self {
            value: 0.0,
            n_star: 0,
            contributors: Vec::new(),
        }
    }
}

/// Cumulative stress, prices and release times for every exchange.
///
/// Events sharing a timestamp only see each other's state as it was before
/// that timestamp: the state keeps a snapshot taken when the clock advances.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    r_cum: Vec<f64>,
    last_price: Vec<f64>,
    last_event_time: Vec<f64>,
    visible_r_cum: Vec<f64>,
    visible_time: Vec<f64>,
    clock: f64,
}

impl NetworkState {
    /// Zero stress, prices at `initial_price`, all release times at `origin`.
    pub fn new(n: usize, origin: f64, initial_price: f64) -> Self {
        Self {
            r_cum: vec![0.0; n],
            last_price: vec![initial_price; n],
            last_event_time: vec![origin; n],
            visible_r_cum: vec![0.0; n],
            visible_time: vec![origin; n],
            clock: f64::NEG_INFINITY,
        }
    }

    /// Seeds the cumulative return of one exchange before any event.
    pub fn with_stress(mut self, exchange: usize, r_cum: f64) -> Self {
        self.r_cum[exchange] = r_cum;
        self.visible_r_cum[exchange] = r_cum;
        self
    }

    pub fn len(&self) -> usize {
        self.r_cum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_cum.is_empty()
    }

    pub fn r_cum(&self) -> &[f64] {
        &self.r_cum
    }

    pub fn last_price(&self) -> &[f64] {
        &self.last_price
    }

    pub fn last_event_time(&self) -> &[f64] {
        &self.last_event_time
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Stress and release times as seen by an event at `t`.
    fn view(&self, t: f64, seq: usize) -> Result<(&[f64], &[f64]), ModelError> {
        if t > self.clock {
            Ok((&self.r_cum, &self.last_event_time))
        } else if t == self.clock {
            Ok((&self.visible_r_cum, &self.visible_time))
        } else {
            Err(ModelError::OutOfOrder {
                seq,
                time: t,
                clock: self.clock,
            })
        }
    }

    fn advance(&mut self, t: f64, seq: usize) -> Result<(), ModelError> {
        if t > self.clock {
            self.visible_r_cum.copy_from_slice(&self.r_cum);
            self.visible_time.copy_from_slice(&self.last_event_time);
            self.clock = t;
            Ok(())
        } else if t == self.clock {
            Ok(())
        } else {
            Err(ModelError::OutOfOrder {
                seq,
                time: t,
                clock: self.clock,
            })
        }
    }

    /// Every other exchange whose visible stress passes the threshold at `t`.
    pub fn fired_for(
        &self,
        i: usize,
        t: f64,
        r_c: f64,
        sidedness: Sidedness,
    ) -> Result<Vec<FiredStress>, ModelError> {
        let (r_cum, times) = self.view(t, usize::MAX)?;
        Ok(r_cum
            .iter()
            .zip(times)
            .enumerate()
            .filter(|&(j, (&r, _))| j != i && threshold_test(r, r_c, sidedness))
            .map(|(j, (&r, &release))| FiredStress {
                exchange: j,
                r_cum: r,
                lag: wrapped_lag(release, t),
            })
            .collect())
    }

    /// Prices `r` into exchange `i` at `t` and deletes the consumed stresses.
    fn commit(
        &mut self,
        i: usize,
        t: f64,
        consumed: &[FiredStress],
        r: f64,
        r_c: f64,
        sidedness: Sidedness,
    ) {
        for f in consumed {
            self.r_cum[f.exchange] = 0.0;
        }
        let own_fired = threshold_test(self.r_cum[i], r_c, sidedness);
        self.r_cum[i] = update_cum(self.r_cum[i], r, own_fired);
        self.last_price[i] *= r.exp();
        self.last_event_time[i] = t;
    }
}

/// Couplings for one universe and parameter set, cached for repeated stepping.
#[derive(Debug, Clone)]
pub struct Network<'u> {
    universe: &'u Universe,
    params: ModelParams,
    modes: Modes,
    alpha: Vec<f64>,
}

impl<'u> Network<'u> {
    pub fn new(universe: &'u Universe, params: ModelParams, modes: Modes) -> Self {
        let alpha = alpha_matrix(&universe.capitalizations(), params.gamma);
        Self {
            universe,
            params,
            modes,
            alpha,
        }
    }

    pub fn universe(&self) -> &Universe {
        self.universe
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn modes(&self) -> Modes {
        self.modes
    }

    /// A state with zero stress whose release times start at `origin`.
    pub fn initial_state(&self, origin: f64) -> NetworkState {
        NetworkState::new(self.universe.len(), origin, INITIAL_PRICE)
    }

    fn check(&self, event: &MarketEvent) -> Result<(), ModelError> {
        if event.exchange < self.universe.len() {
            Ok(())
        } else {
            Err(ModelError::UnknownExchange {
                seq: event.seq,
                exchange: event.exchange,
                size: self.universe.len(),
            })
        }
    }

    /// Combines already-identified fired stresses into the transfer term for `i`.
    pub fn combine(&self, i: usize, fired: &[FiredStress]) -> Transfer {
        let n = self.universe.len();
        combine_fired(
            fired,
            |j| self.alpha[i * n + j],
            self.params.tau,
            divisor(self.modes.normalization, fired.len(), n),
        )
    }

    /// Transfer term for `event` given everything priced strictly before it.
    pub fn transfer(&self, state: &NetworkState, event: &MarketEvent) -> Result<Transfer, ModelError> {
        self.check(event)?;
        state.view(event.utc_time, event.seq)?;
        let fired = state.fired_for(
            event.exchange,
            event.utc_time,
            self.params.r_c,
            self.modes.sidedness,
        )?;
        Ok(self.combine(event.exchange, &fired))
    }

    fn price(
        &self,
        state: &mut NetworkState,
        event: &MarketEvent,
        total: impl FnOnce(f64) -> (f64, f64),
    ) -> Result<StepRecord, ModelError> {
        self.check(event)?;
        state.advance(event.utc_time, event.seq)?;
        let i = event.exchange;
        let fired = state.fired_for(i, event.utc_time, self.params.r_c, self.modes.sidedness)?;
        let transfer = self.combine(i, &fired);
        let (return_total, eta) = total(transfer.value);
        state.commit(
            i,
            event.utc_time,
            &fired,
            return_total,
            self.params.r_c,
            self.modes.sidedness,
        );
        Ok(StepRecord {
            event: *event,
            return_total,
            transfer: transfer.value,
            eta,
            n_star: transfer.n_star,
            contributors: transfer.contributors,
        })
    }

    /// Generative step: the return is the transfer term plus `eta_draw`.
    pub fn step(
        &self,
        state: &mut NetworkState,
        event: &MarketEvent,
        eta_draw: f64,
    ) -> Result<StepRecord, ModelError> {
        self.price(state, event, |transfer| (transfer + eta_draw, eta_draw))
    }

    /// Replay step: the return is observed and local news is what the transfer
    /// term does not explain.
    pub fn observe(
        &self,
        state: &mut NetworkState,
        event: &MarketEvent,
        observed: f64,
    ) -> Result<StepRecord, ModelError> {
        self.price(state, event, |transfer| (observed, observed - transfer))
    }

    /// A missing observation: the exchange prices nothing and consumes nothing.
    pub fn skip(&self, state: &mut NetworkState, event: &MarketEvent) -> Result<(), ModelError> {
        self.check(event)?;
        state.advance(event.utc_time, event.seq)
    }
}

fn divisor(normalization: Normalization, n_star: usize, n: usize) -> f64 {
    match normalization {
        Normalization::Contributors => n_star as f64,
        Normalization::AllOthers => n.saturating_sub(1) as f64,
    }
}

/// `sum_j alpha(j) * exp(-lag_j / tau) * r_cum_j / divisor`, zero when nothing fired.
pub(crate) fn combine_fired(
    fired: &[FiredStress],
    alpha: impl Fn(usize) -> f64,
    tau: f64,
    divisor: f64,
) -> Transfer {
    if fired.is_empty() {
        return Transfer::empty();
    }
    let contributors: Vec<Contribution> = fired
        .iter()
        .map(|f| Contribution {
            exchange: f.exchange,
            amount: alpha(f.exchange) * (-f.lag / tau).exp() * f.r_cum / divisor,
        })
        .collect();
    Transfer {
        value: contributors.iter().map(|c| c.amount).sum(),
        n_star: fired.len(),
        contributors,
    }
}

/// Transfer term for exchange `i` priced at `t`, without a cached network.
pub fn transfer_return(
    i: usize,
    t: f64,
    state: &NetworkState,
    universe: &Universe,
    params: &ModelParams,
    modes: Modes,
) -> Result<Transfer, ModelError> {
    let caps = universe.capitalizations();
    if i >= caps.len() {
        return Err(ModelError::UnknownExchange {
            seq: usize::MAX,
            exchange: i,
            size: caps.len(),
        });
    }
    let fired = state.fired_for(i, t, params.r_c, modes.sidedness)?;
    Ok(combine_fired(
        &fired,
        |j| alpha_unchecked(caps[i], caps[j], params.gamma),
        params.tau,
        divisor(modes.normalization, fired.len(), caps.len()),
    ))
}

/// Draws local news for every event from a seeded ChaCha stream and steps the
/// network through the timeline from zero stress.
pub fn simulate(
    universe: &Universe,
    timeline: &EventTimeline,
    params: ModelParams,
    seed: u64,
    modes: Modes,
) -> Result<ReturnPanel, ModelError> {
    timeline.validate(universe)?;
    let network = Network::new(universe, params, modes);
    let state = network.initial_state(timeline.events()[0].utc_time);
    simulate_from(&network, state, timeline, seed).map(|(panel, _)| panel)
}

/// Like [`simulate`] but from an arbitrary starting state; also returns the final state.
pub fn simulate_from(
    network: &Network<'_>,
    mut state: NetworkState,
    timeline: &EventTimeline,
    seed: u64,
) -> Result<(ReturnPanel, NetworkState), ModelError> {
    timeline.validate(network.universe())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = network.params().sigma;
    let mut records = Vec::with_capacity(timeline.len());
    for event in timeline.events() {
        let z: f64 = rng.sample(StandardNormal);
        let eta = if sigma == 0.0 { 0.0 } else { sigma * z };
        records.push(Some(network.step(&mut state, event, eta)?));
    }
    let panel = ReturnPanel::new(network.universe().clone(), timeline.clone(), records)?;
    Ok((panel, state))
}

/// Decomposes observed returns into transfer and local news under `params`.
pub fn replay(
    observed: &ObservedPanel,
    params: ModelParams,
    modes: Modes,
) -> Result<ReturnPanel, ModelError> {
    let universe = observed.universe();
    let timeline = observed.timeline();
    let network = Network::new(universe, params, modes);
    let mut state = network.initial_state(timeline.events()[0].utc_time);
    let mut records = Vec::with_capacity(timeline.len());
    for (event, r) in timeline.events().iter().zip(observed.returns()) {
        match r {
            Some(r) => records.push(Some(network.observe(&mut state, event, *r)?)),
            None => {
                network.skip(&mut state, event)?;
                records.push(None);
            }
        }
    }
    ReturnPanel::new(universe.clone(), timeline.clone(), records)
}

/// Fired stresses at one observed event, independent of γ and τ.
#[derive(Debug, Clone, PartialEq)]
pub struct FiringEntry {
    pub event: MarketEvent,
    pub observed: f64,
    pub fired: Vec<FiredStress>,
}

/// Replays observed returns at threshold `r_c` and records which stresses each
/// event saw. Which exchanges fire depends only on the returns and `r_c`, so one
/// history serves every (γ, τ) pair.
pub fn firing_history(
    observed: &ObservedPanel,
    r_c: f64,
    sidedness: Sidedness,
) -> Result<Vec<Option<FiringEntry>>, ModelError> {
    let timeline = observed.timeline();
    let n = observed.universe().len();
    let mut state = NetworkState::new(n, timeline.events()[0].utc_time, INITIAL_PRICE);
    let mut out = Vec::with_capacity(timeline.len());
    for (event, r) in timeline.events().iter().zip(observed.returns()) {
        if event.exchange >= n {
            return Err(ModelError::UnknownExchange {
                seq: event.seq,
                exchange: event.exchange,
                size: n,
            });
        }
        state.advance(event.utc_time, event.seq)?;
        match r {
            Some(r) => {
                let fired = state.fired_for(event.exchange, event.utc_time, r_c, sidedness)?;
                state.commit(event.exchange, event.utc_time, &fired, *r, r_c, sidedness);
                out.push(Some(FiringEntry {
                    event: *event,
                    observed: *r,
                    fired,
                }));
            }
            None => out.push(None),
        }
    }
    Ok(out)
}

/// Transfer term of a history entry under (γ, τ).
pub fn transfer_from_history(
    entry: &FiringEntry,
    capitalizations: &[f64],
    gamma: f64,
    tau: f64,
    normalization: Normalization,
) -> f64 {
    let fired = &entry.fired;
    if fired.is_empty() {
        return 0.0;
    }
    let i = entry.event.exchange;
    let d = divisor(normalization, fired.len(), capitalizations.len());
    // Same operation order as `combine_fired`, without the contributor list.
    fired
        .iter()
        .map(|f| {
            alpha_unchecked(capitalizations[i], capitalizations[f.exchange], gamma)
                * (-f.lag / tau).exp()
                * f.r_cum
                / d
        })
        .sum()
}
