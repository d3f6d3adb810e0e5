use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::model::{EventKind, ObservedPanel, Universe};

/// Capitalization-weighted mean of `returns` over every exchange but `exclude`.
pub fn world_return(returns: &[f64], caps: &[f64], exclude: usize) -> Result<f64, AnalysisError> {
    if returns.len() != caps.len() {
        return Err(AnalysisError::Domain(format!(
            "{} returns for {} capitalizations",
            returns.len(),
            caps.len()
        )));
    }
    if caps.len() < 2 {
        return Err(AnalysisError::Domain(
            "world return needs at least two exchanges".into(),
        ));
    }
    if let Some(k) = caps.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
        return Err(AnalysisError::Domain(format!("capitalization must be positive, got {k}")));
    }
    let (num, den) = returns
        .iter()
        .zip(caps)
        .enumerate()
        .filter(|(j, _)| *j != exclude)
        .fold((0.0, 0.0), |(n, d), (_, (r, k))| (n + k * r, d + k));
    Ok(num / den)
}

/// Close-to-close log return per `[day][exchange]`: the day's open return plus
/// its close return. `None` when either is missing.
pub fn daily_returns(panel: &ObservedPanel) -> Vec<Vec<Option<f64>>> {
    let n = panel.universe().len();
    let days = panel.timeline().dates().len();
    let mut open = vec![vec![None; n]; days];
    let mut close = vec![vec![None; n]; days];
    for (ev, r) in panel.timeline().events().iter().zip(panel.returns()) {
        let slot = match ev.kind {
            EventKind::Open => &mut open[ev.day][ev.exchange],
            EventKind::Close => &mut close[ev.day][ev.exchange],
        };
        *slot = *r;
    }
    open.into_iter()
        .zip(close)
        .map(|(o, c)| {
            o.into_iter()
                .zip(c)
                .map(|(o, c)| Some(o? + c?))
                .collect()
        })
        .collect()
}

/// How magnitudes are binned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinEdges {
    /// Equal-count bins over the scored magnitudes.
    Quantiles(usize),
    /// Ascending edges; values outside `[first, last]` are not scored.
    Fixed(Vec<f64>),
}

impl Default for BinEdges {
    fn default() -> Self {
        BinEdges::Quantiles(10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub agree: usize,
    /// `agree / count`; `None` for an empty bin.
    pub probability: Option<f64>,
}

/// Sign-agreement probability binned by the magnitude of a reference return.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncCurve {
    pub bins: Vec<SyncBin>,
    /// Observations that entered a bin.
    pub n_scored: usize,
    /// Observations dropped because either return was exactly zero.
    pub n_zero: usize,
    /// Observations outside fixed edges.
    pub n_outside: usize,
}

impl SyncCurve {
    /// Builds the curve from `(reference, response)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)], edges: &BinEdges) -> Result<Self, AnalysisError> {
        let nonzero: Vec<(f64, f64)> = pairs
            .iter()
            .copied()
            .filter(|(m, r)| *m != 0.0 && *r != 0.0)
            .collect();
        let n_zero = pairs.len() - nonzero.len();
        let mut mags: Vec<f64> = nonzero.iter().map(|(m, _)| m.abs()).collect();
        mags.sort_by(f64::total_cmp);
        let edges = match edges {
            BinEdges::Quantiles(k) => quantile_edges(&mags, *k)?,
            BinEdges::Fixed(e) => {
                if e.len() < 2 || e.windows(2).any(|w| !(w[0] < w[1])) || e[0].is_nan() {
                    return Err(AnalysisError::Domain(
                        "bin edges must be at least two strictly ascending values".into(),
                    ));
                }
                e.clone()
            }
        };
        let mut bins: Vec<SyncBin> = edges
            .windows(2)
            .map(|w| SyncBin {
                lo: w[0],
                hi: w[1],
                count: 0,
                agree: 0,
                probability: None,
            })
            .collect();
        let last = bins.len() - 1;
        let mut n_outside = 0;
        for (m, r) in nonzero {
            let x = m.abs();
            if x < edges[0] || x > edges[last + 1] {
                n_outside += 1;
                continue;
            }
            let k = (edges.partition_point(|e| *e <= x) - 1).min(last);
            bins[k].count += 1;
            if m.signum() == r.signum() {
                bins[k].agree += 1;
            }
        }
        for b in &mut bins {
            b.probability = (b.count > 0).then(|| b.agree as f64 / b.count as f64);
        }
        let n_scored = bins.iter().map(|b| b.count).sum();
        Ok(Self {
            bins,
            n_scored,
            n_zero,
            n_outside,
        })
    }
}

fn quantile_edges(sorted: &[f64], k: usize) -> Result<Vec<f64>, AnalysisError> {
    if k == 0 {
        return Err(AnalysisError::Domain("need at least one quantile bin".into()));
    }
    if sorted.is_empty() {
        return Err(AnalysisError::Domain("no nonzero observations to bin".into()));
    }
    let n = sorted.len();
    let mut edges: Vec<f64> = (0..k).map(|q| sorted[q * n / k]).collect();
    edges.push(sorted[n - 1]);
    edges.dedup();
    if edges.len() == 1 {
        // every magnitude identical: one closed bin
        edges.push(edges[0]);
        let hi = &mut edges[1];
        *hi = f64::from_bits(hi.to_bits() + 1);
    }
    Ok(edges)
}

/// Same-sign probability of each exchange's daily return and the world return
/// of the others, binned by the world return's magnitude.
pub fn sync_curve(panel: &ObservedPanel, edges: &BinEdges) -> Result<SyncCurve, AnalysisError> {
    let caps = panel.universe().capitalizations();
    if caps.len() < 2 {
        return Err(AnalysisError::Domain("sync curve needs at least two exchanges".into()));
    }
    let mut pairs = Vec::new();
    for day in daily_returns(panel) {
        for (i, r_i) in day.iter().enumerate() {
            let Some(r_i) = r_i else { continue };
            let (mut num, mut den) = (0.0, 0.0);
            for (j, r_j) in day.iter().enumerate() {
                if let (true, Some(r_j)) = (j != i, r_j) {
                    num += caps[j] * r_j;
                    den += caps[j];
                }
            }
            if den > 0.0 {
                pairs.push((num / den, *r_i));
            }
        }
    }
    SyncCurve::from_pairs(&pairs, edges)
}

/// Same-sign probability of each responder's next open return after a close
/// of `mover`, binned by the magnitude of the mover's open-to-close return.
/// Responders are pooled; call once per group to compare groups.
pub fn lead_lag_curve(
    panel: &ObservedPanel,
    mover: usize,
    responders: &[usize],
    edges: &BinEdges,
) -> Result<SyncCurve, AnalysisError> {
    lead_lag_curve_pairs(panel, mover, responders).and_then(|p| SyncCurve::from_pairs(&p, edges))
}

/// `(mover close return, responder next open return)` for every usable pair.
pub fn lead_lag_curve_pairs(
    panel: &ObservedPanel,
    mover: usize,
    responders: &[usize],
) -> Result<Vec<(f64, f64)>, AnalysisError> {
    let n = panel.universe().len();
    if mover >= n {
        return Err(AnalysisError::Domain(format!("mover index {mover} outside universe of {n}")));
    }
    if responders.is_empty() {
        return Err(AnalysisError::Domain("responder set is empty".into()));
    }
    for &r in responders {
        if r >= n {
            return Err(AnalysisError::Domain(format!("responder index {r} outside universe of {n}")));
        }
        if r == mover {
            return Err(AnalysisError::Consistency("mover is among its own responders".into()));
        }
    }
    let events = panel.timeline().events();
    let returns = panel.returns();
    let mut opens: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, ev) in events.iter().enumerate() {
        if ev.kind == EventKind::Open {
            opens[ev.exchange].push(k);
        }
    }
    let mut pairs = Vec::new();
    for (k, ev) in events.iter().enumerate() {
        if ev.exchange != mover || ev.kind != EventKind::Close {
            continue;
        }
        let Some(m) = returns[k] else { continue };
        for &r in responders {
            let list = &opens[r];
            let Some(&j) = list.get(list.partition_point(|&o| o <= k)) else {
                continue;
            };
            if events[j].utc_time <= ev.utc_time {
                return Err(AnalysisError::Consistency(format!(
                    "responder {} opens at t={} together with the mover's close",
                    panel.universe().exchanges()[r].id,
                    events[j].utc_time
                )));
            }
            if let Some(x) = returns[j] {
                pairs.push((m, x));
            }
        }
    }
    Ok(pairs)
}

/// Responders split by the hours from the mover's close to their next open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagGroups {
    pub short: Vec<usize>,
    pub long: Vec<usize>,
}

/// Splits every exchange other than `mover` at `split_hours` of lag between
/// the mover's close and the exchange's next open.
pub fn lag_groups(universe: &Universe, mover: usize, split_hours: f64) -> LagGroups {
    let ex = universe.exchanges();
    let close = ex[mover].close_hour - ex[mover].tz_offset;
    let mut g = LagGroups {
        short: Vec::new(),
        long: Vec::new(),
    };
    for (j, e) in ex.iter().enumerate() {
        if j == mover {
            continue;
        }
        let lag = (e.open_hour - e.tz_offset - close).rem_euclid(24.0);
        if lag < split_hours {
            g.short.push(j);
        } else {
            g.long.push(j);
        }
    }
    g
}
