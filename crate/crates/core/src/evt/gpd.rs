//! Generalised Pareto distribution of threshold exceedances y = x - u.
//!
//! All functions switch to the exponential limit when |xi| < [`XI_EPS`].

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const XI_EPS: f64 = 1e-8;

#[inline]
pub(crate) fn near_zero<T: Real>(xi: T) -> bool {
    xi.abs() < T::lit(XI_EPS)
}

pub(crate) fn check_params<T: Real>(xi: T, sigma: T) -> Result<()> {
    if !xi.is_finite() {
        return Err(Error::domain(format!("shape must be finite, got {xi}")));
    }
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::domain(format!("scale must be positive and finite, got {sigma}")));
    }
    Ok(())
}

/// Upper end of the support (`-sigma/xi`), present only for `xi < 0`.
pub fn upper_endpoint<T: Real>(xi: T, sigma: T) -> Option<T> {
    (xi < T::zero() && !near_zero(xi)).then(|| -sigma / xi)
}

/// `ln(1 + xi*y/sigma) / xi`, the cumulative hazard. Infinite at or beyond
/// the upper endpoint.
pub(crate) fn cumulative_hazard<T: Real>(y: T, xi: T, sigma: T) -> T {
    if near_zero(xi) {
        return y / sigma;
    }
    let arg = xi * y / sigma;
    if arg <= -T::one() {
        return T::infinity();
    }
    arg.ln_1p() / xi
}

fn check_exceedance<T: Real>(y: T, xi: T, sigma: T) -> Result<()> {
    check_params(xi, sigma)?;
    if !(y >= T::zero()) {
        return Err(Error::domain(format!("exceedance must be non-negative, got {y}")));
    }
    Ok(())
}

/// `Pr(Y > y)`. Zero at and above the upper endpoint.
pub fn gpd_survival<T: Real>(y: T, xi: T, sigma: T) -> Result<T> {
    check_exceedance(y, xi, sigma)?;
    Ok((-cumulative_hazard(y, xi, sigma)).exp())
}

/// `H(y) = 1 - (1 + xi*y/sigma)^(-1/xi)`; returns 1 above the upper endpoint.
pub fn gpd_cdf<T: Real>(y: T, xi: T, sigma: T) -> Result<T> {
    check_exceedance(y, xi, sigma)?;
    Ok(-(-cumulative_hazard(y, xi, sigma)).exp_m1())
}

/// Density; zero outside the support.
pub fn gpd_pdf<T: Real>(y: T, xi: T, sigma: T) -> Result<T> {
    check_params(xi, sigma)?;
    if y < T::zero() {
        return Ok(T::zero());
    }
    let h = cumulative_hazard(y, xi, sigma);
    if !h.is_finite() {
        return Ok(T::zero());
    }
    if near_zero(xi) {
        return Ok((-h).exp() / sigma);
    }
    let arg = xi * y / sigma;
    Ok((-h - arg.ln_1p()).exp() / sigma)
}

/// Inverse CDF for `p` in `[0, 1)`.
pub fn gpd_quantile<T: Real>(p: T, xi: T, sigma: T) -> Result<T> {
    check_params(xi, sigma)?;
    if !(p >= T::zero() && p < T::one()) {
        return Err(Error::domain(format!("probability must lie in [0, 1), got {p}")));
    }
    let l = -(-p).ln_1p();
    Ok(sigma * hazard_inverse(l, xi))
}

/// `(exp(xi*l) - 1)/xi`, the standardised level with cumulative hazard `l`.
pub(crate) fn hazard_inverse<T: Real>(l: T, xi: T) -> T {
    if near_zero(xi) {
        l
    } else {
        (xi * l).exp_m1() / xi
    }
}

/// Log-likelihood of exceedances `ys`; `-inf` when any point is outside the
/// support.
pub fn gpd_log_likelihood<T: Real>(ys: &[T], xi: T, sigma: T) -> T {
    if check_params(xi, sigma).is_err() {
        return T::neg_infinity();
    }
    let n = T::from_usize_lossy(ys.len());
    if near_zero(xi) {
        return -n * sigma.ln() - ys.iter().copied().sum::<T>() / sigma;
    }
    let mut acc = T::zero();
    for &y in ys {
        let arg = xi * y / sigma;
        if y < T::zero() || arg <= -T::one() {
            return T::neg_infinity();
        }
        acc += arg.ln_1p();
    }
    -n * sigma.ln() - (T::one() + T::one() / xi) * acc
}
