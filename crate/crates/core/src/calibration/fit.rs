use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::CalibrationError;
use crate::stats::{self, KsResult};

/// Default minimum bin occupancy for a residual to count in the fit.
pub const DEFAULT_MIN_OCCUPANCY: usize = 10;

/// Default histogram bin width as a fraction of the noise standard deviation.
pub const DEFAULT_BIN_WIDTH_FACTOR: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub included: bool,
}

/// Occupied bins of width `bin_width` aligned on zero, in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub min_occupancy: usize,
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    pub fn new(values: &[f64], bin_width: f64, min_occupancy: usize) -> Result<Self, CalibrationError> {
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(CalibrationError::Fit(format!(
                "bin width must be positive, got {bin_width}"
            )));
        }
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for &v in values {
            *counts.entry(bin_index(v, bin_width)).or_default() += 1;
        }
        let bins = counts
            .into_iter()
            .map(|(k, count)| HistogramBin {
                lo: k as f64 * bin_width,
                hi: (k + 1) as f64 * bin_width,
                count,
                included: count >= min_occupancy,
            })
            .collect();
        Ok(Self {
            bin_width,
            min_occupancy,
            bins,
        })
    }

    /// Values that fall in bins meeting the occupancy requirement.
    pub fn filter(&self, values: &[f64]) -> Vec<f64> {
        let keep: std::collections::HashSet<i64> = self
            .bins
            .iter()
            .filter(|b| b.included)
            .map(|b| (b.lo / self.bin_width).round() as i64)
            .collect();
        values
            .iter()
            .copied()
            .filter(|&v| keep.contains(&bin_index(v, self.bin_width)))
            .collect()
    }
}

#[inline]
fn bin_index(v: f64, width: f64) -> i64 {
    (v / width).floor() as i64
}

/// Which residuals enter the Gaussian likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LikelihoodMode {
    /// Only residuals in histogram bins with at least `min_occupancy` entries.
    #[default]
    FilteredBins,
    Full,
}

/// Log-likelihood of the residuals under Normal(0, sigma^2) and the number of
/// residuals it was evaluated on.
pub fn log_likelihood(
    etas: &[f64],
    sigma: f64,
    mode: LikelihoodMode,
    min_occupancy: usize,
    bin_width: f64,
) -> Result<(f64, usize), CalibrationError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(CalibrationError::Fit(format!(
            "likelihood needs a positive sigma, got {sigma}"
        )));
    }
    let variance = sigma * sigma;
    let used = match mode {
        LikelihoodMode::Full => etas.to_vec(),
        LikelihoodMode::FilteredBins => Histogram::new(etas, bin_width, min_occupancy)?.filter(etas),
    };
    if used.is_empty() {
        return Err(CalibrationError::Fit("no residuals left after filtering".into()));
    }
    let ll = used.iter().map(|&e| stats::normal_log_pdf(e, 0.0, variance)).sum();
    Ok((ll, used.len()))
}

/// Moments and normality check of the central part of a residual sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub n_total: usize,
    pub n_included: usize,
    pub mean: f64,
    pub variance: f64,
    /// Set when the included residuals have zero variance; no KS test then.
    pub degenerate: bool,
    /// KS test of the included residuals against Normal(mean, variance).
    pub ks: Option<KsResult>,
    pub histogram: Histogram,
}

pub fn gaussian_fit(etas: &[f64], min_occupancy: usize, bin_width: f64) -> Result<GaussianFit, CalibrationError> {
    if etas.is_empty() {
        return Err(CalibrationError::Fit("no residuals to fit".into()));
    }
    if etas.iter().any(|e| !e.is_finite()) {
        return Err(CalibrationError::Fit("residuals contain non-finite values".into()));
    }
    let histogram = Histogram::new(etas, bin_width, min_occupancy)?;
    let included = histogram.filter(etas);
    if included.is_empty() {
        return Err(CalibrationError::Fit(format!(
            "every histogram bin holds fewer than {min_occupancy} residuals"
        )));
    }
    let mean = stats::mean(&included);
    let variance = stats::variance(&included);
    let degenerate = !(variance > 0.0);
    let ks = (!degenerate).then(|| {
        let sd = variance.sqrt();
        stats::ks_test(&included, |x| stats::normal_cdf(x, mean, sd))
    });
    Ok(GaussianFit {
        n_total: etas.len(),
        n_included: included.len(),
        mean,
        variance,
        degenerate,
        ks,
        histogram,
    })
}
