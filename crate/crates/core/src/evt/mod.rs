//! Peaks-over-threshold extreme-value analysis.
//!
//! A [`GpdFit`] bundles a threshold `u`, the GPD shape and scale of the
//! exceedances above it and the empirical exceedance rate `lambda`. Return
//! levels and cross-quantity maps are expressed through the cumulative hazard
//! `L(z) = ln(1 + xi (z - u)/sigma)/xi`, which equals `ln(t lambda)` for the
//! level exceeded once every `t` observations.

mod diagnostics;
mod ecdf;
mod gpd;
mod mle;
mod simplex;

pub use diagnostics::{diagnostics, write_diagnostics, DensityPoint, Diagnostics};
pub use ecdf::{exceedances, select_threshold, EmpiricalCdf, Threshold};
pub use gpd::{gpd_cdf, gpd_log_likelihood, gpd_pdf, gpd_quantile, gpd_survival, upper_endpoint, XI_EPS};
pub use mle::{fit_gpd_mle, pwm_estimate, GpdEstimate};
pub use simplex::{nelder_mead, SimplexOptions, SimplexOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Endpoint, Error, Result};
use crate::scalar::Real;
use crate::series::Units;

use gpd::{check_params, cumulative_hazard, hazard_inverse};

/// Smallest exceedance count accepted by the fitter.
pub const MIN_EXCEEDANCES: usize = 50;
/// Below this many exceedances a fit is reported as low-confidence.
pub const CONFIDENT_EXCEEDANCES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct GpdFit<T> {
    pub units: Units,
    #[serde(rename = "u")]
    pub threshold: T,
    pub xi: T,
    pub sigma: T,
    #[serde(rename = "lambda")]
    pub exceed_rate: T,
    pub n_exceed: usize,
    pub log_likelihood: T,
}

impl<T: Real> GpdFit<T> {
    pub fn from_estimate(threshold: &Threshold<T>, est: &GpdEstimate<T>, units: Units) -> Self {
        Self {
            units,
            threshold: threshold.threshold,
            xi: est.xi,
            sigma: est.sigma,
            exceed_rate: threshold.exceed_rate,
            n_exceed: threshold.n_exceed,
            log_likelihood: est.log_likelihood,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_params(self.xi, self.sigma)?;
        if !self.threshold.is_finite() {
            return Err(Error::domain("threshold must be finite"));
        }
        if !(self.exceed_rate > T::zero() && self.exceed_rate < T::one()) {
            return Err(Error::domain(format!(
                "exceedance rate must lie in (0, 1), got {}",
                self.exceed_rate
            )));
        }
        Ok(())
    }

    pub fn is_low_confidence(&self) -> bool {
        self.n_exceed < CONFIDENT_EXCEEDANCES
    }

    /// `u - sigma/xi` for a bounded tail.
    pub fn upper_level(&self) -> Option<T> {
        upper_endpoint(self.xi, self.sigma).map(|y| self.threshold + y)
    }

    fn check_level(&self, z: T) -> Result<()> {
        if !(z >= self.threshold) {
            return Err(Error::OutsideSupport {
                value: z.to_f64_lossy(),
                bound: self.threshold.to_f64_lossy(),
                endpoint: Endpoint::Lower,
            });
        }
        if let Some(top) = self.upper_level() {
            if z >= top {
                return Err(Error::OutsideSupport {
                    value: z.to_f64_lossy(),
                    bound: top.to_f64_lossy(),
                    endpoint: Endpoint::Upper,
                });
            }
        }
        Ok(())
    }

    /// `ln(t lambda)` for the level `z`; zero at the threshold.
    pub fn log_return_ratio(&self, z: T) -> Result<T> {
        self.validate()?;
        self.check_level(z)?;
        Ok(cumulative_hazard(z - self.threshold, self.xi, self.sigma))
    }

    fn level_at(&self, l: T) -> T {
        self.threshold + self.sigma * hazard_inverse(l, self.xi)
    }

    /// `Pr(X > z) = lambda (1 + xi (z - u)/sigma)^(-1/xi)` for `z >= u`.
    pub fn exceedance_probability(&self, z: T) -> Result<T> {
        self.validate()?;
        if !(z >= self.threshold) {
            return Err(Error::OutsideSupport {
                value: z.to_f64_lossy(),
                bound: self.threshold.to_f64_lossy(),
                endpoint: Endpoint::Lower,
            });
        }
        Ok(self.exceed_rate * gpd_survival(z - self.threshold, self.xi, self.sigma)?)
    }

    /// Level exceeded on average once every `t` observations.
    pub fn return_level(&self, t: T) -> Result<T> {
        self.validate()?;
        let tl = t * self.exceed_rate;
        if !(tl >= T::one()) || !tl.is_finite() {
            return Err(Error::domain(format!(
                "return period {t} gives t*lambda = {tl}; it must be finite and at least 1"
            )));
        }
        Ok(self.level_at(tl.ln()))
    }

    /// Return level indexed by `ln(t lambda)` instead of `t`.
    pub fn return_level_at_log_ratio(&self, log_tl: T) -> Result<T> {
        self.validate()?;
        if !(log_tl >= T::zero()) || !log_tl.is_finite() {
            return Err(Error::domain(format!("ln(t*lambda) = {log_tl} must be finite and non-negative")));
        }
        Ok(self.level_at(log_tl))
    }

    /// `r`-year level with `n_per_year` observations per year.
    pub fn return_level_r_year(&self, r: T, n_per_year: T) -> Result<T> {
        self.return_level(r * n_per_year)
    }
}

pub fn return_level<T: Real>(fit: &GpdFit<T>, t: T) -> Result<T> {
    fit.return_level(t)
}

pub fn return_level_r_year<T: Real>(fit: &GpdFit<T>, r: T, n_per_year: T) -> Result<T> {
    fit.return_level_r_year(r, n_per_year)
}

/// Maps a return level of one quantity to the level of another that is
/// exceeded equally often. Both fits must share the exceedance rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ReturnLevelMap<T> {
    from: GpdFit<T>,
    to: GpdFit<T>,
}

impl<T: Real> ReturnLevelMap<T> {
    pub fn new(from: GpdFit<T>, to: GpdFit<T>) -> Result<Self> {
        from.validate()?;
        to.validate()?;
        let (a, b) = (from.exceed_rate, to.exceed_rate);
        if (a - b).abs() > T::lit(1e-9) * a.max(b) {
            return Err(Error::RateMismatch {
                from: a.to_f64_lossy(),
                to: b.to_f64_lossy(),
            });
        }
        Ok(Self { from, to })
    }

    pub fn from_fit(&self) -> &GpdFit<T> {
        &self.from
    }

    pub fn to_fit(&self) -> &GpdFit<T> {
        &self.to
    }

    /// `z_to = u_to + (sigma_to/xi_to)[(1 + xi_from (z - u_from)/sigma_from)^(xi_to/xi_from) - 1]`.
    pub fn map(&self, z_from: T) -> Result<T> {
        let l = self.from.log_return_ratio(z_from)?;
        Ok(self.to.level_at(l))
    }

    pub fn inverse(&self) -> Self {
        Self {
            from: self.to,
            to: self.from,
        }
    }
}

pub fn map_return_level<T: Real>(map: &ReturnLevelMap<T>, z_from: T) -> Result<T> {
    map.map(z_from)
}

/// Thresholds, rectifies if asked, and fits the exceedances.
pub fn fit_peaks_over_threshold<T: Real>(
    samples: &[T],
    percentile: T,
    rectify: bool,
    units: Units,
) -> Result<GpdFit<T>> {
    let th = select_threshold(samples, percentile, rectify)?;
    let ys = exceedances(samples, th.threshold, rectify);
    let est = fit_gpd_mle(&ys)?;
    Ok(GpdFit::from_estimate(&th, &est, units))
}
