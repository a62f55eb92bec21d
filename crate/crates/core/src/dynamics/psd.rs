//! Averaged-periodogram (Welch) PSD estimate with a Hann window.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::series::TimeSeries;

/// One-sided PSD estimate in (units)²/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd<T> {
    pub frequencies: Vec<T>,
    pub density: Vec<T>,
    pub segments: usize,
}

impl<T: Real> Psd<T> {
    /// Integral of the density, i.e. the variance it accounts for.
    pub fn total_power(&self) -> T {
        if self.frequencies.len() < 2 {
            return T::zero();
        }
        let df = self.frequencies[1] - self.frequencies[0];
        self.density.iter().copied().sum::<T>() * df
    }

    /// Mean density over bins with `lo <= f < hi`, or `None` if the band is empty.
    pub fn band_mean(&self, lo: T, hi: T) -> Option<T> {
        let (sum, count) = self
            .frequencies
            .iter()
            .zip(&self.density)
            .filter(|(f, _)| **f >= lo && **f < hi)
            .fold((T::zero(), 0usize), |(s, c), (_, d)| (s + *d, c + 1));
        (count > 0).then(|| sum / T::from_usize_lossy(count))
    }
}

/// Welch estimate over segments of `segment_length` samples overlapping by
/// `overlap` samples. Each segment has its mean removed before windowing.
pub fn estimate_psd<T: Real>(series: &TimeSeries<T>, segment_length: usize, overlap: usize) -> Result<Psd<T>> {
    let x = series.samples();
    if segment_length < 2 || segment_length > x.len() {
        return Err(Error::usage(format!(
            "segment length {segment_length} must be in [2, {}]",
            x.len()
        )));
    }
    if overlap >= segment_length {
        return Err(Error::usage(format!(
            "overlap {overlap} must be smaller than the segment length {segment_length}"
        )));
    }
    let hop = segment_length - overlap;
    let segments = (x.len() - segment_length) / hop + 1;
    let fs = series.sample_rate_hz();

    let n = segment_length;
    let nf = T::from_usize_lossy(n);
    // Periodic Hann window.
    let window: Vec<T> = (0..n)
        .map(|i| {
            let phase = T::TAU() * T::from_usize_lossy(i) / nf;
            T::lit(0.5) * (T::one() - phase.cos())
        })
        .collect();
    let window_power: T = window.iter().map(|w| *w * *w).sum();

    let bins = n / 2 + 1;
    let mut acc = vec![T::zero(); bins];
    let fft = FftPlanner::<T>::new().plan_fft_forward(n);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    for s in 0..segments {
        let seg = &x[s * hop..s * hop + n];
        let m = seg.iter().copied().sum::<T>() / nf;
        for ((b, &v), &w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex::new((v - m) * w, T::zero());
        }
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf[..bins]) {
            *a += c.norm_sqr();
        }
    }

    let scale = T::one() / (fs * window_power * T::from_usize_lossy(segments));
    let two = T::lit(2.0);
    let density: Vec<T> = acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let one_sided = k != 0 && !(n.is_multiple_of(2) && k == n / 2);
            if one_sided {
                two * p * scale
            } else {
                p * scale
            }
        })
        .collect();
    let frequencies = (0..bins).map(|k| T::from_usize_lossy(k) * fs / nf).collect();
    Ok(Psd {
        frequencies,
        density,
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Units;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn white(n: usize, fs: f64, seed: u64) -> TimeSeries<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        TimeSeries::new(x, fs, Units::Volt, seed).unwrap()
    }

    #[test]
    fn white_noise_level_is_two_over_fs() {
        let fs = 100.0;
        let s = white(200_000, fs, 1);
        let psd = estimate_psd(&s, 1024, 512).unwrap();
        assert!(psd.segments >= 30);
        let level = 2.0 / fs;
        for band in 0..10 {
            let lo = 1.0 + band as f64 * 4.5;
            let m = psd.band_mean(lo, lo + 4.5).unwrap();
            assert!((m / level - 1.0).abs() < 0.10, "band {lo}: {m}");
        }
        assert!((psd.total_power() / s.variance() - 1.0).abs() < 0.02);
    }

    #[test]
    fn sinusoid_has_single_peak() {
        let fs = 64.0;
        let x: Vec<f64> = (0..8192).map(|i| (std::f64::consts::TAU * 5.0 * i as f64 / fs).sin()).collect();
        let s = TimeSeries::new(x, fs, Units::Volt, 0).unwrap();
        let psd = estimate_psd(&s, 512, 256).unwrap();
        let (imax, _) = psd
            .density
            .iter()
            .enumerate()
            .fold((0, 0.0), |a, (i, &d)| if d > a.1 { (i, d) } else { a });
        assert!((psd.frequencies[imax] - 5.0).abs() < 1e-12);
        assert!((psd.total_power() - 0.5).abs() < 0.01);
    }

    #[test]
    fn independent_sums_add() {
        let fs = 50.0;
        let a = white(100_000, fs, 2);
        let b = white(100_000, fs, 3).map(Units::Volt, |v| 2.0 * v).unwrap();
        let sum: Vec<f64> = a.samples().iter().zip(b.samples()).map(|(x, y)| x + y).collect();
        let sum = TimeSeries::new(sum, fs, Units::Volt, 0).unwrap();
        let (pa, pb, ps) = (
            estimate_psd(&a, 1000, 500).unwrap(),
            estimate_psd(&b, 1000, 500).unwrap(),
            estimate_psd(&sum, 1000, 500).unwrap(),
        );
        for lo in [1.0, 8.0, 15.0, 22.0] {
            let lhs = ps.band_mean(lo, lo + 3.0).unwrap();
            let rhs = pa.band_mean(lo, lo + 3.0).unwrap() + pb.band_mean(lo, lo + 3.0).unwrap();
            assert!((lhs / rhs - 1.0).abs() < 0.10);
        }
    }

    #[test]
    fn degenerate_segmentation_is_usage_error() {
        let s = white(100, 10.0, 4);
        assert!(matches!(estimate_psd(&s, 200, 0), Err(Error::Usage(_))));
        assert!(matches!(estimate_psd(&s, 50, 50), Err(Error::Usage(_))));
        assert!(matches!(estimate_psd(&s, 1, 0), Err(Error::Usage(_))));
    }
}
