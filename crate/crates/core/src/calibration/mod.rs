//! Parameter estimation: residual extraction, γ elimination, grid search over
//! (R_C, τ, σ) and the Gaussian check on the residuals.

mod fit;
mod slaving;

pub use fit::{
    gaussian_fit, log_likelihood, GaussianFit, Histogram, HistogramBin, LikelihoodMode,
    DEFAULT_BIN_WIDTH_FACTOR, DEFAULT_MIN_OCCUPANCY,
};
pub use slaving::{
    c_terms, closed_form_gamma, profile_gamma, slaved_gamma, GammaEstimate, GAMMA_BOUNDS,
};

use serde::{Deserialize, Serialize};

use crate::error::{CalibrationError, ModelError};
use crate::model::{firing_history, replay, ModelParams, Modes, ObservedPanel};
use slaving::{profile_gamma_design, Design};

/// Axes of the search. Each must be nonempty, finite and strictly ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGrid {
    r_c_values: Vec<f64>,
    tau_values: Vec<f64>,
    sigma_values: Vec<f64>,
}

impl CalibrationGrid {
    pub fn new(r_c_values: Vec<f64>, tau_values: Vec<f64>, sigma_values: Vec<f64>) -> Result<Self, CalibrationError> {
        check_axis("r_c", &r_c_values, true)?;
        check_axis("tau", &tau_values, true)?;
        check_axis("sigma", &sigma_values, false)?;
        Ok(Self {
            r_c_values,
            tau_values,
            sigma_values,
        })
    }

    /// Same as [`CalibrationGrid::new`] with the noise axis given as variances.
    pub fn from_variances(r_c_values: Vec<f64>, tau_values: Vec<f64>, variances: Vec<f64>) -> Result<Self, CalibrationError> {
        check_axis("sigma^2", &variances, false)?;
        Self::new(r_c_values, tau_values, variances.iter().map(|v| v.sqrt()).collect())
    }

    pub fn r_c_values(&self) -> &[f64] {
        &self.r_c_values
    }

    pub fn tau_values(&self) -> &[f64] {
        &self.tau_values
    }

    pub fn sigma_values(&self) -> &[f64] {
        &self.sigma_values
    }

    pub fn len(&self) -> usize {
        self.r_c_values.len() * self.tau_values.len() * self.sigma_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_axis(name: &str, values: &[f64], strictly_positive: bool) -> Result<(), CalibrationError> {
    if values.is_empty() {
        return Err(CalibrationError::InvalidGrid(format!("{name} axis is empty")));
    }
    for &v in values {
        let ok = v.is_finite() && if strictly_positive { v > 0.0 } else { v >= 0.0 };
        if !ok {
            return Err(CalibrationError::InvalidGrid(format!("{name} axis has invalid value {v}")));
        }
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CalibrationError::InvalidGrid(format!("{name} axis must be strictly ascending")));
    }
    Ok(())
}

/// How γ is chosen at each grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMethod {
    /// Numerical maximization of the likelihood over γ.
    #[default]
    Profile,
    /// Fixed point of the closed-form expression.
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub gamma_method: GammaMethod,
    pub likelihood: LikelihoodMode,
    pub min_occupancy: usize,
    /// Histogram bin width as a multiple of each grid point's σ.
    pub bin_width_factor: f64,
    /// Also run the closed-form iteration where it is not the selected method,
    /// so the table shows both estimates.
    pub report_closed_form: bool,
    pub closed_form_start: f64,
    pub closed_form_tol: f64,
    pub closed_form_max_iter: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            gamma_method: GammaMethod::Profile,
            likelihood: LikelihoodMode::FilteredBins,
            min_occupancy: DEFAULT_MIN_OCCUPANCY,
            bin_width_factor: DEFAULT_BIN_WIDTH_FACTOR,
            report_closed_form: true,
            closed_form_start: 1.0,
            closed_form_tol: 1e-8,
            closed_form_max_iter: 100,
        }
    }
}

/// One row of the per-point diagnostics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPointResult {
    pub r_c: f64,
    pub tau: f64,
    pub sigma: f64,
    pub gamma: Option<f64>,
    pub gamma_at_bound: bool,
    pub closed_form_gamma: Option<f64>,
    pub closed_form_converged: Option<bool>,
    pub closed_form_iterations: Option<usize>,
    pub log_likelihood: Option<f64>,
    pub n_used: usize,
    /// `"ok"` or the reason the point could not be scored.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub params: ModelParams,
    pub modes: Modes,
    pub options: CalibrationOptions,
    pub log_likelihood: f64,
    /// Residuals the likelihood was evaluated on, before bin filtering.
    pub n_residuals: usize,
    /// η per timeline event under the selected parameters; `None` at gaps.
    pub residuals: Vec<Option<f64>>,
    pub fit: GaussianFit,
    pub table: Vec<GridPointResult>,
}

impl CalibrationResult {
    pub fn selected(&self) -> &GridPointResult {
        self.table
            .iter()
            .filter(|p| p.log_likelihood.is_some())
            .find(|p| p.r_c == self.params.r_c && p.tau == self.params.tau && p.sigma == self.params.sigma)
            .expect("selected point is in the table")
    }
}

/// η = observed − transfer for every observed event, aligned with the timeline.
pub fn residuals(observed: &ObservedPanel, params: ModelParams, modes: Modes) -> Result<Vec<Option<f64>>, ModelError> {
    let panel = replay(observed, params, modes)?;
    Ok(panel.records().iter().map(|r| r.as_ref().map(|r| r.eta)).collect())
}

/// Exhaustive search over the grid. γ is eliminated at every (R_C, τ) and the
/// point with the largest Gaussian log-likelihood wins; ties go to the point
/// visited first (R_C outermost, σ innermost).
pub fn grid_calibrate(
    observed: &ObservedPanel,
    grid: &CalibrationGrid,
    modes: Modes,
    options: &CalibrationOptions,
) -> Result<CalibrationResult, CalibrationError> {
    if !(options.bin_width_factor.is_finite() && options.bin_width_factor > 0.0) {
        return Err(CalibrationError::InvalidGrid(format!(
            "bin width factor must be positive, got {}",
            options.bin_width_factor
        )));
    }
    let caps = observed.universe().capitalizations();
    let mut table = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;

    for &r_c in grid.r_c_values() {
        let history = firing_history(observed, r_c, modes.sidedness)?;
        for &tau in grid.tau_values() {
            let design = Design::new(&history, &caps, tau, modes.normalization);

            let closed = (options.report_closed_form || options.gamma_method == GammaMethod::ClosedForm)
                .then(|| {
                    closed_form_gamma(
                        &history,
                        &caps,
                        tau,
                        modes.normalization,
                        options.closed_form_start,
                        options.closed_form_tol,
                        options.closed_form_max_iter,
                    )
                });
            let chosen = match options.gamma_method {
                GammaMethod::Profile => profile_gamma_design(&design),
                GammaMethod::ClosedForm => match closed.clone().expect("computed above") {
                    Ok(g) if !g.converged => Err(CalibrationError::GammaUnidentifiable(format!(
                        "closed-form iteration did not converge in {} rounds",
                        g.iterations
                    ))),
                    other => other,
                },
            };
            let (cf_gamma, cf_conv, cf_iter) = match &closed {
                Some(Ok(g)) => (Some(g.gamma), Some(g.converged), Some(g.iterations)),
                _ => (None, None, None),
            };

            let etas = chosen.as_ref().ok().map(|g| {
                let mut etas: Vec<f64> = history.iter().flatten().map(|e| e.observed).collect();
                let positions = observed_positions(&history);
                for (k, &row) in design.rows.iter().enumerate() {
                    etas[positions[row]] = design.observed[k] - design.transfer(k, g.gamma);
                }
                etas
            });

            for &sigma in grid.sigma_values() {
                let mut point = GridPointResult {
                    r_c,
                    tau,
                    sigma,
                    gamma: None,
                    gamma_at_bound: false,
                    closed_form_gamma: cf_gamma,
                    closed_form_converged: cf_conv,
                    closed_form_iterations: cf_iter,
                    log_likelihood: None,
                    n_used: 0,
                    status: "ok".into(),
                };
                match (&chosen, &etas) {
                    (Ok(g), Some(etas)) => {
                        point.gamma = Some(g.gamma);
                        point.gamma_at_bound = g.at_bound;
                        match log_likelihood(
                            etas,
                            sigma,
                            options.likelihood,
                            options.min_occupancy,
                            sigma * options.bin_width_factor,
                        ) {
                            Ok((ll, n)) => {
                                point.log_likelihood = Some(ll);
                                point.n_used = n;
                                if best.is_none_or(|(_, b)| ll > b) {
                                    best = Some((table.len(), ll));
                                }
                            }
                            Err(e) => point.status = e.to_string(),
                        }
                    }
                    (Err(e), _) => point.status = e.to_string(),
                    _ => unreachable!("residuals exist whenever gamma does"),
                }
                table.push(point);
            }
        }
    }

    let Some((idx, ll)) = best else {
        return Err(CalibrationError::AllPointsFailed(
            table
                .iter()
                .map(|p| format!("r_c={} tau={} sigma={}: {}", p.r_c, p.tau, p.sigma, p.status))
                .collect(),
        ));
    };
    let p = &table[idx];
    let params = ModelParams::new(p.gamma.expect("scored point has gamma"), p.tau, p.r_c, p.sigma)?;
    let res = residuals(observed, params, modes)?;
    let flat: Vec<f64> = res.iter().flatten().copied().collect();
    let fit = gaussian_fit(&flat, options.min_occupancy, p.sigma * options.bin_width_factor)?;
    Ok(CalibrationResult {
        params,
        modes,
        options: *options,
        log_likelihood: ll,
        n_residuals: flat.len(),
        residuals: res,
        fit,
        table,
    })
}

/// Maps history index to position among observed (non-gap) events.
fn observed_positions(history: &[Option<crate::model::FiringEntry>]) -> Vec<usize> {
    let mut k = 0;
    history
        .iter()
        .map(|e| {
            let pos = k;
            if e.is_some() {
                k += 1;
            }
            pos
        })
        .collect()
}

#[cfg(test)]
mod tests;
