//! Universe configuration, price files, timelines, synthetic data and output formats.

mod output;
mod panel;
mod prices;
mod synthetic;
mod timeline;
mod universe;

pub use output::*;
pub use panel::{panel_from_prices, timeline_from_prices, Gap};
pub use prices::{parse_prices, parse_prices_reader, write_prices, PriceRow, PriceTable, PRICE_HEADER};
pub use synthetic::{generate_synthetic, Synthetic};
pub use timeline::{build_timeline, utc_hours};
pub use universe::{
    default_universe, parse_universe, parse_universe_str, universe_to_toml, Calendar,
    DayConvention, UniverseConfig, DEFAULT_UNIVERSE_TOML,
};
