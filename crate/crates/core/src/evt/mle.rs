//! Maximum-likelihood GPD fit by simplex search over (xi, ln sigma).

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::gpd::{gpd_log_likelihood, near_zero};
use super::simplex::{nelder_mead, SimplexOptions};
use super::MIN_EXCEEDANCES;

/// Point estimate from [`fit_gpd_mle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpdEstimate<T> {
    pub xi: T,
    pub sigma: T,
    pub log_likelihood: T,
    pub iterations: usize,
}

/// Hosking–Wallis probability-weighted-moment estimate. Falls back to the
/// exponential fit when the moments give no finite answer.
pub fn pwm_estimate<T: Real>(ys: &[T]) -> (T, T) {
    let mut sorted = ys.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let nf = T::from_usize_lossy(sorted.len());
    let a0 = sorted.iter().copied().sum::<T>() / nf;
    let a1 = sorted
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let p = (T::from_usize_lossy(i + 1) - T::lit(0.35)) / nf;
            (T::one() - p) * y
        })
        .sum::<T>()
        / nf;
    let d = a0 - T::lit(2.0) * a1;
    if !(d > T::zero()) {
        return (T::zero(), a0);
    }
    let xi = T::lit(2.0) - a0 / d;
    let sigma = T::lit(2.0) * a0 * a1 / d;
    if xi.is_finite() && sigma > T::zero() && sigma.is_finite() {
        (xi, sigma)
    } else {
        (T::zero(), a0)
    }
}

/// Mean negative log-likelihood at (xi, ln sigma). Shapes at or below -1
/// are excluded since the likelihood is unbounded there.
fn objective<T: Real>(ys: &[T], p: &[T; 2]) -> T {
    if p[0] <= -T::one() {
        return T::infinity();
    }
    -gpd_log_likelihood(ys, p[0], p[1].exp()) / T::from_usize_lossy(ys.len())
}

/// Fits the GPD to positive exceedances.
pub fn fit_gpd_mle<T: Real>(ys: &[T]) -> Result<GpdEstimate<T>> {
    if ys.len() < MIN_EXCEEDANCES {
        return Err(Error::domain(format!(
            "a GPD fit needs at least {MIN_EXCEEDANCES} exceedances, got {}",
            ys.len()
        )));
    }
    if let Some(i) = ys.iter().position(|y| !(*y > T::zero()) || !y.is_finite()) {
        return Err(Error::domain(format!(
            "exceedance {i} is {}, expected a positive finite value",
            ys[i]
        )));
    }
    let first = ys[0];
    if ys.iter().all(|&y| y == first) {
        return Err(Error::Degenerate(format!(
            "all {} exceedances equal {first}",
            ys.len()
        )));
    }
    let max = ys.iter().copied().fold(T::zero(), T::max);
    let mean = ys.iter().copied().sum::<T>() / T::from_usize_lossy(ys.len());

    let (mut xi0, mut sigma0) = pwm_estimate(ys);
    xi0 = xi0.max(T::lit(-0.9)).min(T::lit(0.9));
    if xi0 < T::zero() && sigma0 <= -xi0 * max {
        sigma0 = -xi0 * max * T::lit(1.1);
    }

    let f = |p: &[T; 2]| objective(ys, p);
    let step = [T::lit(0.1), T::lit(0.1)];
    let out = nelder_mead(f, [xi0, sigma0.ln()], step, SimplexOptions::default());
    if !out.converged {
        return Err(Error::NonConvergence {
            xi: out.x[0].to_f64_lossy(),
            sigma: out.x[1].exp().to_f64_lossy(),
            iterations: out.iterations,
            spread: out.spread.to_f64_lossy(),
        });
    }

    let n = T::from_usize_lossy(ys.len());
    let mut est = GpdEstimate {
        xi: out.x[0],
        sigma: out.x[1].exp(),
        log_likelihood: -out.f * n,
        iterations: out.iterations,
    };
    let exp_ll = gpd_log_likelihood(ys, T::zero(), mean);
    if exp_ll > est.log_likelihood {
        est = GpdEstimate {
            xi: T::zero(),
            sigma: mean,
            log_likelihood: exp_ll,
            iterations: out.iterations,
        };
    }
    est.log_likelihood = gpd_log_likelihood(ys, est.xi, est.sigma);
    if est.xi < T::zero() && !near_zero(est.xi) && max >= -est.sigma / est.xi {
        return Err(Error::Degenerate(format!(
            "fitted upper endpoint {} does not exceed the sample maximum {max}",
            -est.sigma / est.xi
        )));
    }
    Ok(est)
}
