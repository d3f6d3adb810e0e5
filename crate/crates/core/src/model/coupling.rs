use crate::error::ModelError;

/// Hours in one trading-day cycle; information lags wrap into [0, 24).
pub const DAY_HOURS: f64 = 24.0;

fn positive(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ModelError::NotPositive { name, value })
    }
}

/// Capitalization coupling of exchange `j` onto exchange `i`:
/// `1 - exp(-k_j / (k_i * gamma))`.
pub fn coupling_alpha(k_i: f64, k_j: f64, gamma: f64) -> Result<f64, ModelError> {
    let k_i = positive("k_i", k_i)?;
    let k_j = positive("k_j", k_j)?;
    let gamma = positive("gamma", gamma)?;
    Ok(alpha_unchecked(k_i, k_j, gamma))
}

#[inline]
pub(crate) fn alpha_unchecked(k_i: f64, k_j: f64, gamma: f64) -> f64 {
    -(-k_j / (k_i * gamma)).exp_m1()
}

/// Time-zone coupling `exp(-lag / tau)` for a non-negative lag in hours.
pub fn coupling_beta(lag_hours: f64, tau: f64) -> Result<f64, ModelError> {
    if !(lag_hours.is_finite() && lag_hours >= 0.0) {
        return Err(ModelError::Negative {
            name: "lag_hours",
            value: lag_hours,
        });
    }
    let tau = positive("tau", tau)?;
    Ok((-lag_hours / tau).exp())
}

/// Elapsed hours between release and pricing, wrapped into [0, 24).
#[inline]
pub fn wrapped_lag(release: f64, pricing: f64) -> f64 {
    (pricing - release).rem_euclid(DAY_HOURS)
}

/// Row-major `alpha[i * n + j]` for every ordered pair, zero on the diagonal.
pub fn alpha_matrix(capitalizations: &[f64], gamma: f64) -> Vec<f64> {
    let n = capitalizations.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out[i * n + j] = alpha_unchecked(capitalizations[i], capitalizations[j], gamma);
            }
        }
    }
    out
}
