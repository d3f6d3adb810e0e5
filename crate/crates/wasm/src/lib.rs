//! JSON-in, JSON-out bindings used by the static page in `www/`.
//!
//! Each exported function has a plain Rust twin returning `Result<String,
//! String>` so the logic can be tested natively; the wasm wrappers only turn
//! the error into a JS exception.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use tremor_core::analysis::{sync_curve, tremor_activity, BinEdges};
use tremor_core::io::{default_universe, generate_synthetic};
use tremor_core::model::{alpha_matrix, ModelParams, Modes};

/// Longest simulation the page may request.
pub const MAX_DAYS: usize = 5000;

#[derive(Serialize)]
struct TremorJson {
    dates: Vec<String>,
    activity: Vec<f64>,
    world_index: Vec<f64>,
    n_events: usize,
}

#[derive(Serialize)]
struct SyncJson {
    lo: Vec<f64>,
    hi: Vec<f64>,
    probability: Vec<Option<f64>>,
    count: Vec<usize>,
    n_scored: usize,
}

#[derive(Serialize)]
struct CouplingJson {
    ids: Vec<String>,
    alpha: Vec<Vec<f64>>,
}

fn panel(gamma: f64, tau: f64, r_c: f64, sigma2: f64, days: usize, seed: u64) -> Result<tremor_core::model::ReturnPanel, String> {
    if days == 0 || days > MAX_DAYS {
        return Err(format!("days must be between 1 and {MAX_DAYS}"));
    }
    let params = ModelParams::with_variance(gamma, tau, r_c, sigma2).map_err(|e| e.to_string())?;
    let synth = generate_synthetic(&default_universe(), params, days, seed, Modes::default()).map_err(|e| e.to_string())?;
    Ok(synth.panel)
}

/// Daily tremor activity and world index of a fresh simulation.
pub fn tremor_series_json(gamma: f64, tau: f64, r_c: f64, sigma2: f64, days: usize, seed: u64) -> Result<String, String> {
    let p = panel(gamma, tau, r_c, sigma2, days, seed)?;
    let series = tremor_activity(&p);
    let out = TremorJson {
        dates: series.days.iter().map(|d| d.date.to_string()).collect(),
        activity: series.days.iter().map(|d| d.a_value).collect(),
        world_index: series.days.iter().map(|d| d.world_index).collect(),
        n_events: p.timeline().len(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Sign agreement with the rest of the world against its absolute return,
/// in `bins` equal-count bins.
pub fn sync_curve_json(gamma: f64, tau: f64, r_c: f64, sigma2: f64, days: usize, seed: u64, bins: usize) -> Result<String, String> {
    let p = panel(gamma, tau, r_c, sigma2, days, seed)?;
    let curve = sync_curve(&p.observed(), &BinEdges::Quantiles(bins)).map_err(|e| e.to_string())?;
    let out = SyncJson {
        lo: curve.bins.iter().map(|b| b.lo).collect(),
        hi: curve.bins.iter().map(|b| b.hi).collect(),
        probability: curve.bins.iter().map(|b| b.probability).collect(),
        count: curve.bins.iter().map(|b| b.count).collect(),
        n_scored: curve.n_scored,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Size coupling of the bundled universe, rows receive and columns give.
pub fn coupling_json(gamma: f64) -> Result<String, String> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err("gamma must be positive".into());
    }
    let cfg = default_universe();
    let caps = cfg.universe.capitalizations();
    let n = caps.len();
    let flat = alpha_matrix(&caps, gamma);
    let out = CouplingJson {
        ids: cfg.universe.exchanges().iter().map(|e| e.id.clone()).collect(),
        alpha: flat.chunks(n).map(<[f64]>::to_vec).collect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn tremor_series(gamma: f64, tau: f64, r_c: f64, sigma2: f64, days: u32, seed: u32) -> Result<String, JsError> {
    tremor_series_json(gamma, tau, r_c, sigma2, days as usize, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sync(gamma: f64, tau: f64, r_c: f64, sigma2: f64, days: u32, seed: u32, bins: u32) -> Result<String, JsError> {
    sync_curve_json(gamma, tau, r_c, sigma2, days as usize, seed.into(), bins as usize).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn coupling(gamma: f64) -> Result<String, JsError> {
    coupling_json(gamma).map_err(|e| JsError::new(&e))
}
