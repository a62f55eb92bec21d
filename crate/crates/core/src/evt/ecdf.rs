//! Empirical CDF with plotting positions i/(n+1) and threshold selection.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf<T> {
    sorted: Vec<T>,
}

impl<T: Real> EmpiricalCdf<T> {
    pub fn new(samples: &[T]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::domain(format!(
                "an empirical CDF needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::domain(format!("sample {i} is not finite")));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        Ok(Self { sorted })
    }

    pub fn sorted_values(&self) -> &[T] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    fn position(&self, i: usize) -> T {
        T::from_usize_lossy(i + 1) / T::from_usize_lossy(self.sorted.len() + 1)
    }

    /// Piecewise-linear interpolation of the plotting positions; 0 below the
    /// sample minimum and 1 above the maximum.
    pub fn eval(&self, x: T) -> T {
        let n = self.sorted.len();
        if x < self.sorted[0] {
            return T::zero();
        }
        if x > self.sorted[n - 1] {
            return T::one();
        }
        // Last index with value <= x.
        let i = self.sorted.partition_point(|v| *v <= x) - 1;
        if i + 1 == n || self.sorted[i] == x {
            return self.position(i);
        }
        let (lo, hi) = (self.sorted[i], self.sorted[i + 1]);
        let frac = (x - lo) / (hi - lo);
        self.position(i) + frac / T::from_usize_lossy(n + 1)
    }

    /// Inverse of [`eval`](Self::eval), clamped to the sample range.
    pub fn quantile(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::domain(format!("probability must lie in (0, 1), got {p}")));
        }
        let n = self.sorted.len();
        let pos = p * T::from_usize_lossy(n + 1);
        if pos <= T::one() {
            return Ok(self.sorted[0]);
        }
        if pos >= T::from_usize_lossy(n) {
            return Ok(self.sorted[n - 1]);
        }
        let k = pos.floor();
        let frac = pos - k;
        let i = k.to_usize().expect("in range") - 1;
        let (lo, hi) = (self.sorted[i], self.sorted[i + 1]);
        Ok(lo + frac * (hi - lo))
    }
}

/// Threshold at an empirical percentile and the observed exceedance fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct Threshold<T> {
    pub threshold: T,
    pub exceed_rate: T,
    pub n_exceed: usize,
    pub n_total: usize,
}

impl<T: Real> Threshold<T> {
    /// Fewer exceedances than a GPD fit can use.
    pub fn is_degraded(&self) -> bool {
        self.n_exceed < super::MIN_EXCEEDANCES
    }
}

/// Picks `u` at `percentile` of the (optionally rectified) samples and counts
/// the samples strictly above it.
pub fn select_threshold<T: Real>(samples: &[T], percentile: T, rectify: bool) -> Result<Threshold<T>> {
    if !(percentile > T::zero() && percentile < T::one()) {
        return Err(Error::domain(format!("percentile must lie in (0, 1), got {percentile}")));
    }
    let values: Vec<T> = if rectify {
        samples.iter().map(|x| x.abs()).collect()
    } else {
        samples.to_vec()
    };
    let ecdf = EmpiricalCdf::new(&values)?;
    let u = ecdf.quantile(percentile)?;
    let sorted = ecdf.sorted_values();
    let n_exceed = sorted.len() - sorted.partition_point(|v| *v <= u);
    let n_total = sorted.len();
    let t = Threshold {
        threshold: u,
        exceed_rate: T::from_usize_lossy(n_exceed) / T::from_usize_lossy(n_total),
        n_exceed,
        n_total,
    };
    if t.is_degraded() {
        log::warn!(
            "only {n_exceed} of {n_total} samples exceed the threshold {u}; the GPD fit will be unreliable"
        );
    }
    Ok(t)
}

/// Values strictly above `u`, shifted by `u`.
pub fn exceedances<T: Real>(samples: &[T], u: T, rectify: bool) -> Vec<T> {
    samples
        .iter()
        .map(|&x| if rectify { x.abs() } else { x })
        .filter(|&x| x > u)
        .map(|x| x - u)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn three_point_median() {
        let c = EmpiricalCdf::new(&[3.0f64, 1.0, 2.0]).unwrap();
        assert_eq!(c.eval(2.0), 0.5);
        assert_eq!(c.eval(1.0 - 1e-9), 0.0);
        assert_eq!(c.eval(3.0 + 1e-9), 1.0);
        assert_eq!(c.quantile(0.5).unwrap(), 2.0);
        assert!((c.eval(1.5) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn uniform_sample_within_dkw_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let c = EmpiricalCdf::new(&xs).unwrap();
        let worst = (0..=1000)
            .map(|k| k as f64 / 1000.0)
            .map(|x| (c.eval(x) - x).abs())
            .fold(0.0, f64::max);
        assert!(worst < 2.0 / (n as f64).sqrt(), "{worst}");
    }

    #[test]
    fn quantile_inverts_eval() {
        let c = EmpiricalCdf::new(&[0.0f64, 1.0, 4.0, 9.0, 16.0]).unwrap();
        for p in [0.2, 0.25, 0.5, 0.61, 0.8] {
            let x = c.quantile(p).unwrap();
            assert!((c.eval(x) - p).abs() < 1e-14);
        }
        assert!(c.quantile(0.0).is_err());
        assert!(EmpiricalCdf::<f64>::new(&[]).is_err());
    }

    #[test]
    fn rectified_normal_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..1_000_000).map(|_| rng.sample(StandardNormal)).collect();
        let t = select_threshold(&xs, 0.95, true).unwrap();
        assert!((t.threshold - 1.959964).abs() < 0.01, "{}", t.threshold);
        assert!((t.exceed_rate - 0.05).abs() < 1e-4);
        assert_eq!(exceedances(&xs, t.threshold, true).len(), t.n_exceed);
        assert!(!t.is_degraded());
    }

    #[test]
    fn ties_at_threshold_are_excluded() {
        let xs = [1.0, 2.0, 2.0, 2.0, 3.0];
        let t = select_threshold(&xs, 0.5, false).unwrap();
        assert_eq!(t.threshold, 2.0);
        assert_eq!(t.n_exceed, 1);
        assert!(t.is_degraded());
    }
}
