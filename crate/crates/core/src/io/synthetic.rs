use super::prices::{write_prices, PriceRow};
use super::timeline::build_timeline;
use super::universe::UniverseConfig;
use crate::error::DataError;
use crate::model::{simulate, EventKind, ModelParams, Modes, ReturnPanel, INITIAL_PRICE};

/// A simulated panel and the price file that encodes it.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub panel: ReturnPanel,
    pub rows: Vec<PriceRow>,
    /// `rows` rendered in the price CSV format.
    pub csv: Vec<u8>,
}

/// Simulates `days` trading days of the configured calendar and converts the
/// returns into open/close prices starting from 100.
pub fn generate_synthetic(
    config: &UniverseConfig,
    params: ModelParams,
    days: usize,
    seed: u64,
    modes: Modes,
) -> Result<Synthetic, DataError> {
    let universe = &config.universe;
    let dates = config.calendar.dates(days);
    let timeline = build_timeline(universe, &dates)?;
    let panel = simulate(universe, &timeline, params, seed, modes)?;

    let n = universe.len();
    let mut price = vec![INITIAL_PRICE; n];
    // (open, close) per exchange per day
    let mut quotes = vec![vec![(f64::NAN, f64::NAN); dates.len()]; n];
    for rec in panel.records().iter().flatten() {
        let ev = rec.event;
        price[ev.exchange] *= rec.return_total.exp();
        let q = &mut quotes[ev.exchange][ev.day];
        match ev.kind {
            EventKind::Open => q.0 = price[ev.exchange],
            EventKind::Close => q.1 = price[ev.exchange],
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| universe.exchanges()[a].id.cmp(&universe.exchanges()[b].id));
    let mut rows = Vec::with_capacity(n * dates.len());
    for i in order {
        for (day, &(open, close)) in quotes[i].iter().enumerate() {
            rows.push(PriceRow {
                exchange_id: universe.exchanges()[i].id.clone(),
                date: dates[day],
                open,
                close,
            });
        }
    }
    let mut csv = Vec::new();
    write_prices(&rows, &mut csv).map_err(|e| DataError::Config(e.to_string()))?;
    Ok(Synthetic { panel, rows, csv })
}
