//! Eliminating γ from the parameter search.
//!
//! Two estimators are provided. [`closed_form_gamma`] iterates the published
//! closed-form expression with its `K_i/K_j` sums ([`c_terms`]) to a fixed
//! point. [`profile_gamma`] maximizes the Gaussian likelihood over γ directly,
//! holding the other three parameters fixed. The two disagree in general
//! because the closed form's capitalization ratio is the inverse of the one
//! that enters the coupling; both are reported by the grid search.

use serde::{Deserialize, Serialize};

use crate::error::CalibrationError;
use crate::model::{FiringEntry, Normalization};

/// Lower and upper bound of the γ search interval.
pub const GAMMA_BOUNDS: (f64, f64) = (1e-2, 1e2);

/// `(C, C')`: the fired stresses seen by `entry`, weighted by `K_i/K_j` and
/// `(K_i/K_j)^2` respectively and discounted by `exp(-lag/tau)`.
pub fn c_terms(entry: &FiringEntry, capitalizations: &[f64], tau: f64) -> (f64, f64) {
    let k_i = capitalizations[entry.event.exchange];
    entry.fired.iter().fold((0.0, 0.0), |(c, cp), f| {
        let ratio = k_i / capitalizations[f.exchange];
        let base = f.r_cum * (-f.lag / tau).exp();
        (c + ratio * base, cp + ratio * ratio * base)
    })
}

/// One evaluation of the closed-form γ for a given residual series.
///
/// `etas` is aligned with `history`; gaps and events with no fired stress
/// contribute nothing.
pub fn slaved_gamma(
    history: &[Option<FiringEntry>],
    capitalizations: &[f64],
    tau: f64,
    etas: &[Option<f64>],
) -> Result<f64, CalibrationError> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (entry, eta) in history.iter().zip(etas) {
        let (Some(entry), Some(eta)) = (entry, eta) else {
            continue;
        };
        let n_star = entry.fired.len() as f64;
        if n_star == 0.0 {
            continue;
        }
        let (c, cp) = c_terms(entry, capitalizations, tau);
        let r = entry.observed;
        num += (r - eta) * c / n_star;
        den += c * c / (n_star * n_star) - (eta - r) * cp;
    }
    if den == 0.0 || !den.is_finite() || !num.is_finite() {
        return Err(CalibrationError::GammaUnidentifiable(
            "closed-form denominator vanishes (no threshold crossings)".into(),
        ));
    }
    Ok(num / den)
}

/// Outcome of a γ estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub gamma: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The estimate sits on an end of [`GAMMA_BOUNDS`].
    pub at_bound: bool,
}

/// Events that saw at least one fired stress, flattened for repeated
/// evaluation of the transfer term at different γ.
#[derive(Debug, Clone)]
pub(crate) struct Design {
    /// Index of each row into the history.
    pub rows: Vec<usize>,
    pub observed: Vec<f64>,
    offsets: Vec<usize>,
    /// `K_j / K_i` per contributor.
    ratio: Vec<f64>,
    /// `exp(-lag/tau) * r_cum / divisor` per contributor.
    weight: Vec<f64>,
    /// Sum of squared observed returns over events without fired stress.
    pub quiet_sse: f64,
}

impl Design {
    pub fn new(
        history: &[Option<FiringEntry>],
        capitalizations: &[f64],
        tau: f64,
        normalization: Normalization,
    ) -> Self {
        let n = capitalizations.len();
        let mut d = Design {
            rows: Vec::new(),
            observed: Vec::new(),
            offsets: vec![0],
            ratio: Vec::new(),
            weight: Vec::new(),
            quiet_sse: 0.0,
        };
        for (k, entry) in history.iter().enumerate() {
            let Some(entry) = entry else { continue };
            if entry.fired.is_empty() {
                d.quiet_sse += entry.observed * entry.observed;
                continue;
            }
            let divisor = match normalization {
                Normalization::Contributors => entry.fired.len() as f64,
                Normalization::AllOthers => (n - 1) as f64,
            };
            let k_i = capitalizations[entry.event.exchange];
            for f in &entry.fired {
                d.ratio.push(capitalizations[f.exchange] / k_i);
                d.weight.push((-f.lag / tau).exp() * f.r_cum / divisor);
            }
            d.rows.push(k);
            d.observed.push(entry.observed);
            d.offsets.push(d.ratio.len());
        }
        d
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn transfer(&self, row: usize, gamma: f64) -> f64 {
        let (a, b) = (self.offsets[row], self.offsets[row + 1]);
        self.ratio[a..b]
            .iter()
            .zip(&self.weight[a..b])
            .map(|(x, w)| -(-x / gamma).exp_m1() * w)
            .sum()
    }

    /// Residual sum of squares over all observed events.
    pub fn sse(&self, gamma: f64) -> f64 {
        self.quiet_sse
            + (0..self.rows.len())
                .map(|k| {
                    let e = self.observed[k] - self.transfer(k, gamma);
                    e * e
                })
                .sum::<f64>()
    }
}

/// γ maximizing the Gaussian likelihood of the residuals for fixed (R_C, τ, σ).
///
/// At fixed σ that is the least-squares γ, so the search minimizes the residual
/// sum of squares: a log-spaced scan over [`GAMMA_BOUNDS`] followed by a
/// golden-section refinement around the best scan point.
pub fn profile_gamma(
    history: &[Option<FiringEntry>],
    capitalizations: &[f64],
    tau: f64,
    normalization: Normalization,
) -> Result<GammaEstimate, CalibrationError> {
    let design = Design::new(history, capitalizations, tau, normalization);
    profile_gamma_design(&design)
}

pub(crate) fn profile_gamma_design(design: &Design) -> Result<GammaEstimate, CalibrationError> {
    if design.is_empty() {
        return Err(CalibrationError::GammaUnidentifiable(
            "no event saw a threshold crossing".into(),
        ));
    }
    const SCAN: usize = 81;
    let (lo, hi) = (GAMMA_BOUNDS.0.ln(), GAMMA_BOUNDS.1.ln());
    let step = (hi - lo) / (SCAN - 1) as f64;
    let f = |log_g: f64| design.sse(log_g.exp());

    let mut best = (0, f64::INFINITY);
    for k in 0..SCAN {
        let v = f(lo + k as f64 * step);
        if v < best.1 {
            best = (k, v);
        }
    }
    let mut a = lo + best.0.saturating_sub(1) as f64 * step;
    let mut b = lo + (best.0 + 1).min(SCAN - 1) as f64 * step;

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iterations = 0;
    while (b - a) > 1e-10 && iterations < 200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let log_g = 0.5 * (a + b);
    let gamma = log_g.exp();
    if !gamma.is_finite() {
        return Err(CalibrationError::GammaUnidentifiable("search diverged".into()));
    }
    let at_bound = best.0 == 0 || best.0 == SCAN - 1;
    Ok(GammaEstimate {
        gamma,
        iterations: SCAN + iterations,
        converged: (b - a) <= 1e-10,
        at_bound,
    })
}

/// Fixed point of the closed-form expression: residuals are recomputed at the
/// current γ and substituted back until `|Δγ| < tol` or `max_iter` rounds.
pub fn closed_form_gamma(
    history: &[Option<FiringEntry>],
    capitalizations: &[f64],
    tau: f64,
    normalization: Normalization,
    start: f64,
    tol: f64,
    max_iter: usize,
) -> Result<GammaEstimate, CalibrationError> {
    let design = Design::new(history, capitalizations, tau, normalization);
    let mut etas: Vec<Option<f64>> = history
        .iter()
        .map(|e| e.as_ref().map(|e| e.observed))
        .collect();
    let mut gamma = start;
    for it in 1..=max_iter {
        for (k, &row) in design.rows.iter().enumerate() {
            etas[row] = Some(design.observed[k] - design.transfer(k, gamma));
        }
        let next = slaved_gamma(history, capitalizations, tau, &etas)?;
        if !(next.is_finite() && next > 0.0) {
            return Err(CalibrationError::GammaUnidentifiable(format!(
                "closed-form iteration reached non-positive gamma {next} after {it} rounds"
            )));
        }
        let delta = (next - gamma).abs();
        gamma = next;
        if delta < tol {
            return Ok(GammaEstimate {
                gamma,
                iterations: it,
                converged: true,
                at_bound: false,
            });
        }
    }
    Ok(GammaEstimate {
        gamma,
        iterations: max_iter,
        converged: false,
        at_bound: false,
    })
}
