//! Target wind/noise spectra and randomised-Fourier-coefficient synthesis.
//!
//! Synthesis draws one complex Gaussian coefficient per positive frequency
//! bin `ω_k = 2πk/T`, with variance `σ²_X = T/(2π)·S(ω_k)` split equally
//! between real and imaginary parts. The spectra below are one-sided, so the
//! half spectrum is mirrored with conjugate symmetry and each mirrored bin
//! carries half the one-sided density; the Nyquist bin is real and carries
//! the full density. The zero bin is `T·U/(2π)` and fixes the mean.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::series::{TimeSeries, Units};

/// Site description shared by the Kaimal and Davenport spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct WindSite<T> {
    /// Mean wind speed U(z), m/s.
    pub mean_wind_speed: T,
    /// Reference height z, m.
    pub height: T,
    /// Roughness length z0, m.
    pub roughness_length: T,
    #[serde(default = "default_von_karman")]
    pub von_karman: T,
    #[serde(default)]
    pub frequency_argument: FrequencyArgument,
}

/// What the spectrum formula's frequency argument is taken to be during
/// synthesis.
///
/// `Hertz` evaluates `S(n)` at the bin frequency in Hz, so realisations
/// follow the formula as a density per Hz. `Angular` substitutes the bin's
/// angular frequency `ω = 2πn` for `n` everywhere (including `f = ωz/U`)
/// and treats the result as a density per rad/s. The total variance is the
/// same under both readings, but `Angular` carries `(2π)^(-2/3)` of the
/// inertial-range power of `Hertz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyArgument {
    #[default]
    Hertz,
    Angular,
}

pub type KaimalParams<T> = WindSite<T>;
pub type DavenportParams<T> = WindSite<T>;

fn default_von_karman<T: Real>() -> T {
    T::lit(0.4)
}

impl<T: Real> Default for WindSite<T> {
    fn default() -> Self {
        Self {
            mean_wind_speed: T::lit(20.0),
            height: T::lit(10.0),
            roughness_length: T::lit(0.025),
            von_karman: T::lit(0.4),
            frequency_argument: FrequencyArgument::Hertz,
        }
    }
}

impl<T: Real> WindSite<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.mean_wind_speed > T::zero()
            && self.roughness_length > T::zero()
            && self.height > self.roughness_length
            && self.von_karman > T::zero()
            && self.mean_wind_speed.is_finite()
            && self.height.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "invalid wind site: need U > 0, z > z0 > 0, k > 0 (got U = {}, z = {}, z0 = {}, k = {})",
                self.mean_wind_speed, self.height, self.roughness_length, self.von_karman
            )))
        }
    }

    /// Friction velocity `u_f = k U / ln(z / z0)`.
    pub fn friction_velocity(&self) -> T {
        self.von_karman * self.mean_wind_speed / (self.height / self.roughness_length).ln()
    }

    /// Normalised frequency `f = n z / U`.
    pub fn normalised_frequency(&self, n: T) -> T {
        n * self.height / self.mean_wind_speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhiteNoiseParams<T> {
    /// Power in dBW; the discrete-sample variance is `10^(power_dbw/10)`.
    pub power_dbw: T,
}

impl<T: Real> WhiteNoiseParams<T> {
    pub fn variance(&self) -> T {
        T::lit(10.0).powf(self.power_dbw / T::lit(10.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub enum SpectrumModel<T> {
    Kaimal(WindSite<T>),
    Davenport(WindSite<T>),
    WhiteNoise(WhiteNoiseParams<T>),
}

impl<T: Real> SpectrumModel<T> {
    pub fn name(&self) -> &'static str {
        match self {
            SpectrumModel::Kaimal(_) => "kaimal",
            SpectrumModel::Davenport(_) => "davenport",
            SpectrumModel::WhiteNoise(_) => "white_noise",
        }
    }

    pub fn is_wind(&self) -> bool {
        !matches!(self, SpectrumModel::WhiteNoise(_))
    }

    pub fn wind_site(&self) -> Option<&WindSite<T>> {
        match self {
            SpectrumModel::Kaimal(s) | SpectrumModel::Davenport(s) => Some(s),
            SpectrumModel::WhiteNoise(_) => None,
        }
    }

    pub fn wind_site_mut(&mut self) -> Option<&mut WindSite<T>> {
        match self {
            SpectrumModel::Kaimal(s) | SpectrumModel::Davenport(s) => Some(s),
            SpectrumModel::WhiteNoise(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpectrumModel::Kaimal(s) | SpectrumModel::Davenport(s) => s.validate(),
            SpectrumModel::WhiteNoise(w) if w.power_dbw.is_finite() => Ok(()),
            SpectrumModel::WhiteNoise(_) => Err(Error::domain("white-noise power must be finite")),
        }
    }

    /// Mean of synthesised realisations.
    pub fn mean(&self) -> T {
        self.wind_site().map_or(T::zero(), |s| s.mean_wind_speed)
    }

    pub fn units(&self) -> Units {
        if self.is_wind() {
            Units::MetersPerSecond
        } else {
            Units::Newton
        }
    }

    /// One-sided PSD in (units)²/Hz that synthesised realisations follow at
    /// frequency `n` Hz, for a series sampled at `sample_rate_hz`. White
    /// noise is flat at `2σ²/fs` up to Nyquist.
    pub fn one_sided_psd(&self, n: T, sample_rate_hz: T) -> Result<T> {
        let wind = |formula: fn(T, &WindSite<T>) -> Result<T>, s: &WindSite<T>| match s.frequency_argument {
            FrequencyArgument::Hertz => formula(n, s),
            FrequencyArgument::Angular => Ok(T::TAU() * formula(T::TAU() * n, s)?),
        };
        match self {
            SpectrumModel::Kaimal(s) => wind(kaimal_psd, s),
            SpectrumModel::Davenport(s) => wind(davenport_psd, s),
            SpectrumModel::WhiteNoise(w) => {
                if !(n > T::zero()) {
                    return Err(Error::domain(format!("frequency must be positive, got {n}")));
                }
                Ok(T::lit(2.0) * w.variance() / sample_rate_hz)
            }
        }
    }
}

fn check_frequency<T: Real>(n: T) -> Result<()> {
    if n > T::zero() && n.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("frequency must be positive and finite, got {n}")))
    }
}

/// Kaimal spectrum: `n S(n) / u_f² = 105 f / (1 + 33 f)^(5/3)`.
pub fn kaimal_psd<T: Real>(n: T, p: &KaimalParams<T>) -> Result<T> {
    check_frequency(n)?;
    p.validate()?;
    let uf = p.friction_velocity();
    let f = p.normalised_frequency(n);
    let shape = T::lit(105.0) * f / (T::one() + T::lit(33.0) * f).powf(T::lit(5.0 / 3.0));
    Ok(uf * uf * shape / n)
}

/// Davenport spectrum: `n S(n) / u_f² = 4 x² / (1 + x²)^(4/3)` with `x = 1200 f / z`.
pub fn davenport_psd<T: Real>(n: T, p: &DavenportParams<T>) -> Result<T> {
    check_frequency(n)?;
    p.validate()?;
    let uf = p.friction_velocity();
    let x = T::lit(1200.0) * p.normalised_frequency(n) / p.height;
    let x2 = x * x;
    let shape = T::lit(4.0) * x2 / (T::one() + x2).powf(T::lit(4.0 / 3.0));
    Ok(uf * uf * shape / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig<T> {
    pub sample_rate_hz: T,
    pub duration_s: T,
    pub seed: u64,
}

impl<T: Real> SynthesisConfig<T> {
    /// `N = fs · T`, which must be an integer of at least 2.
    pub fn sample_count(&self) -> Result<usize> {
        if !(self.sample_rate_hz > T::zero()) || !(self.duration_s > T::zero()) {
            return Err(Error::domain("sample rate and duration must be positive"));
        }
        let exact = self.sample_rate_hz.to_f64_lossy() * self.duration_s.to_f64_lossy();
        let n = exact.round();
        if (exact - n).abs() > 1e-6 * n.max(1.0) || n < 2.0 || !n.is_finite() {
            return Err(Error::domain(format!(
                "sample_rate_hz × duration_s must be an integer ≥ 2, got {exact}"
            )));
        }
        Ok(n as usize)
    }
}

/// Per-member seed derived from a base seed (SplitMix64 finaliser over the
/// pair), so members can be generated independently and in any order.
pub fn member_seed(base_seed: u64, member: u64) -> u64 {
    let mut z = base_seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(member.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Full-length coefficient array `c_k` such that `x_j = Σ_k c_k e^{2πi jk/N}`.
#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    pub coefficients: Vec<Complex<T>>,
    pub sample_rate_hz: T,
}

impl<T: Real> Spectrum<T> {
    /// Variance carried by the non-zero bins: `Σ_{k≠0} |c_k|²`.
    pub fn ac_power(&self) -> T {
        self.coefficients.iter().skip(1).map(|c| c.norm_sqr()).sum()
    }

    /// Largest `|c(−ω) − conj(c(ω))|` over the array.
    pub fn hermitian_defect(&self) -> T {
        let n = self.coefficients.len();
        let mut worst = self.coefficients[0].im.abs();
        for k in 1..n {
            let d = self.coefficients[n - k] - self.coefficients[k].conj();
            worst = worst.max(d.norm());
        }
        worst
    }

    /// Inverse transform. Returns the real part and the largest imaginary
    /// residue relative to the RMS of the real part.
    pub fn inverse(&self) -> (Vec<T>, T) {
        let n = self.coefficients.len();
        let mut buf = self.coefficients.clone();
        let mut planner = FftPlanner::<T>::new();
        planner.plan_fft_inverse(n).process(&mut buf);
        let rms = (buf.iter().map(|c| c.re * c.re).sum::<T>() / T::from_usize_lossy(n)).sqrt();
        let max_im = buf.iter().fold(T::zero(), |m, c| m.max(c.im.abs()));
        let ratio = if rms > T::zero() { max_im / rms } else { max_im };
        (buf.into_iter().map(|c| c.re).collect(), ratio)
    }
}

/// Draws the randomised coefficient array for one realisation.
pub fn synthesize_spectrum<T: Real>(model: &SpectrumModel<T>, cfg: &SynthesisConfig<T>) -> Result<Spectrum<T>> {
    model.validate()?;
    let n = cfg.sample_count()?;
    let fs = cfg.sample_rate_hz;
    let duration = T::from_usize_lossy(n) / fs;
    let two_pi = T::TAU();
    let d_omega = two_pi / duration;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut normal = || -> T { T::lit(StandardNormal.sample(&mut rng)) };

    let mut coeffs = vec![Complex::new(T::zero(), T::zero()); n];
    // Zero bin: X_0 = T·U/(2π), scaled back by Δω gives the mean U.
    coeffs[0] = Complex::new(d_omega * duration * model.mean() / two_pi, T::zero());

    let half = n / 2;
    let has_nyquist = n % 2 == 0;
    let half_t = T::lit(0.5);
    for k in 1..=half {
        let freq_hz = T::from_usize_lossy(k) / duration;
        // One-sided density in angular frequency.
        let s_omega = model.one_sided_psd(freq_hz, fs)? / two_pi;
        let var_x = duration / two_pi * s_omega;
        if has_nyquist && k == half {
            coeffs[k] = Complex::new(d_omega * var_x.sqrt() * normal(), T::zero());
        } else {
            // Two-sided: each of ±ω carries half the one-sided density, and
            // the variance is split equally between real and imaginary parts.
            let sd = (half_t * var_x * half_t).sqrt();
            let c = Complex::new(sd * normal(), sd * normal()) * d_omega;
            coeffs[k] = c;
            coeffs[n - k] = c.conj();
        }
    }
    Ok(Spectrum {
        coefficients: coeffs,
        sample_rate_hz: fs,
    })
}

/// Expected variance `Σ S(n_k) Δn` of realisations over the synthesis band.
pub fn expected_variance<T: Real>(model: &SpectrumModel<T>, cfg: &SynthesisConfig<T>) -> Result<T> {
    let n = cfg.sample_count()?;
    let duration = T::from_usize_lossy(n) / cfg.sample_rate_hz;
    let dn = T::one() / duration;
    let mut total = T::zero();
    for k in 1..=n / 2 {
        total += model.one_sided_psd(T::from_usize_lossy(k) * dn, cfg.sample_rate_hz)? * dn;
    }
    Ok(total)
}

/// One stationary realisation of `model`; deterministic in `cfg.seed`.
pub fn synthesize_series<T: Real>(model: &SpectrumModel<T>, cfg: &SynthesisConfig<T>) -> Result<TimeSeries<T>> {
    let spectrum = synthesize_spectrum(model, cfg)?;
    let (samples, _) = spectrum.inverse();
    TimeSeries::new(samples, cfg.sample_rate_hz, model.units(), cfg.seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindLoadParams<T> {
    pub air_density: T,
    pub shape_factor: T,
    pub area: T,
}

impl<T: Real> Default for WindLoadParams<T> {
    fn default() -> Self {
        Self {
            air_density: T::lit(1.25),
            shape_factor: T::one(),
            area: T::one(),
        }
    }
}

/// Quasi-static wind load `F = ½ ρ v² C_s A`.
///
/// Negative synthesised speeds are squared like any other sample, so the
/// force is always non-negative and acts in the mean-wind direction.
pub fn wind_to_force<T: Real>(speed: &TimeSeries<T>, p: &WindLoadParams<T>) -> Result<TimeSeries<T>> {
    if speed.units() != Units::MetersPerSecond {
        return Err(Error::usage(format!(
            "wind_to_force expects a wind-speed series in m/s, got {}",
            speed.units()
        )));
    }
    if !(p.air_density > T::zero() && p.shape_factor > T::zero() && p.area > T::zero()) {
        return Err(Error::domain("wind load parameters must be positive"));
    }
    let k = T::lit(0.5) * p.air_density * p.shape_factor * p.area;
    speed.map(Units::Newton, |v| k * v * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn site() -> WindSite<f64> {
        WindSite::default()
    }

    // Direct scalar evaluation, written out independently of the library.
    fn kaimal_by_hand(n: f64) -> f64 {
        let uf = 0.4 * 20.0 / (10.0f64 / 0.025).ln();
        let f = n * 10.0 / 20.0;
        uf * uf * 105.0 * f / (n * (1.0 + 33.0 * f).powf(5.0 / 3.0))
    }

    #[test]
    fn friction_velocity_matches_hand_value() {
        assert_relative_eq!(site().friction_velocity(), 8.0 / 400f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(site().friction_velocity(), 1.335_232_8, epsilon = 1e-6);
    }

    #[test]
    fn kaimal_matches_direct_evaluation() {
        for n in [1e-4, 0.05, 0.3, 2.0, 12.5] {
            assert_relative_eq!(kaimal_psd(n, &site()).unwrap(), kaimal_by_hand(n), max_relative = 1e-13);
        }
        // Independent script value at n = 0.05 Hz.
        assert_relative_eq!(kaimal_psd(0.05, &site()).unwrap(), 34.342_758_433_990_8, max_relative = 1e-12);
    }

    #[test]
    fn kaimal_limits() {
        let uf2 = site().friction_velocity().powi(2);
        let low = 1e-9;
        assert!(low * kaimal_psd(low, &site()).unwrap() / uf2 < 1e-6);
        assert!(kaimal_psd(1e4, &site()).unwrap() < 1e-6);
        assert!(kaimal_psd(0.0, &site()).is_err());
        assert!(kaimal_psd(-1.0, &site()).is_err());
        let bad = WindSite { height: 0.01, ..site() };
        assert!(kaimal_psd(1.0, &bad).is_err());
    }

    #[test]
    fn davenport_at_x_equals_three() {
        let uf2 = site().friction_velocity().powi(2);
        let n = 0.05;
        let expected = 4.0 * 9.0 / 10f64.powf(4.0 / 3.0);
        assert_relative_eq!(n * davenport_psd(n, &site()).unwrap() / uf2, expected, max_relative = 1e-13);
        assert!(1e-9 * davenport_psd(1e-9, &site()).unwrap() / uf2 < 1e-9);
    }

    #[test]
    fn davenport_has_interior_peak() {
        // Scan n·S(n) on a log grid; the maximum must be strictly inside.
        let grid: Vec<f64> = (0..400).map(|i| 10f64.powf(-5.0 + i as f64 * 0.02)).collect();
        let vals: Vec<f64> = grid.iter().map(|&n| n * davenport_psd(n, &site()).unwrap()).collect();
        let (imax, _) = vals
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert!(imax > 0 && imax < grid.len() - 1);
        // x = 1200 n / U peaks at x² = 3 for 4x²/(1+x²)^(4/3).
        let n_peak = 3f64.sqrt() * 20.0 / 1200.0;
        assert!((grid[imax] / n_peak).ln().abs() < 0.05);
    }

    #[test]
    fn white_noise_variance_and_zero_mean() {
        let model = SpectrumModel::WhiteNoise(WhiteNoiseParams { power_dbw: 30.0f64 });
        let cfg = SynthesisConfig { sample_rate_hz: 25.0, duration_s: 3600.0, seed: 7 };
        let s = synthesize_series(&model, &cfg).unwrap();
        assert_eq!(s.len(), 90_000);
        assert!((s.variance() / 1000.0 - 1.0).abs() < 0.05);
        assert!(s.mean().abs() < 1e-9);
        assert_relative_eq!(expected_variance(&model, &cfg).unwrap(), 1000.0, max_relative = 1e-12);
    }

    #[test]
    fn kaimal_mean_is_configured_speed() {
        let model = SpectrumModel::Kaimal(site());
        let cfg = SynthesisConfig { sample_rate_hz: 25.0, duration_s: 3600.0, seed: 11 };
        let s = synthesize_series(&model, &cfg).unwrap();
        assert!((s.mean() - 20.0).abs() < 0.5);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let model = SpectrumModel::Davenport(site());
        let cfg = SynthesisConfig { sample_rate_hz: 25.0, duration_s: 120.0, seed: 5 };
        let a = synthesize_series(&model, &cfg).unwrap();
        let b = synthesize_series(&model, &cfg).unwrap();
        assert_eq!(a.samples(), b.samples());
        let c = synthesize_series(&model, &SynthesisConfig { seed: 6, ..cfg }).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn hermitian_and_parseval() {
        for n_dur in [120.0, 120.04] {
            let model = SpectrumModel::Kaimal(site());
            let cfg = SynthesisConfig { sample_rate_hz: 25.0, duration_s: n_dur, seed: 9 };
            let spec = synthesize_spectrum(&model, &cfg).unwrap();
            assert_eq!(spec.hermitian_defect(), 0.0);
            let (x, imag) = spec.inverse();
            assert!(imag < 1e-9, "imaginary residue {imag}");
            let m = x.iter().sum::<f64>() / x.len() as f64;
            let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64;
            assert_relative_eq!(var, spec.ac_power(), max_relative = 1e-9);
        }
    }

    #[test]
    fn angular_argument_keeps_variance_and_cuts_high_band() {
        let cfg = SynthesisConfig { sample_rate_hz: 25.0, duration_s: 3600.0, seed: 0 };
        let hz = SpectrumModel::Kaimal(site());
        let ang = SpectrumModel::Kaimal(WindSite { frequency_argument: FrequencyArgument::Angular, ..site() });
        let (vh, va) = (expected_variance(&hz, &cfg).unwrap(), expected_variance(&ang, &cfg).unwrap());
        assert!((va / vh - 1.0).abs() < 0.03, "{vh} vs {va}");
        let ratio = ang.one_sided_psd(12.0, 25.0).unwrap() / hz.one_sided_psd(12.0, 25.0).unwrap();
        assert!((ratio / std::f64::consts::TAU.powf(-2.0 / 3.0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn sample_count_must_be_integral() {
        let cfg = SynthesisConfig { sample_rate_hz: 25.0, duration_s: 0.03, seed: 0 };
        assert!(cfg.sample_count().is_err());
        let cfg = SynthesisConfig { sample_rate_hz: 25.0, duration_s: 3600.0, seed: 0 };
        assert_eq!(cfg.sample_count().unwrap(), 90_000);
    }

    #[test]
    fn wind_force_values() {
        let v = TimeSeries::new(vec![0.0, 20.0, -20.0], 25.0, Units::MetersPerSecond, 0).unwrap();
        let f = wind_to_force(&v, &WindLoadParams::default()).unwrap();
        assert_eq!(f.samples(), &[0.0, 250.0, 250.0]);
        assert_eq!(f.units(), Units::Newton);
        assert!(wind_to_force(&f, &WindLoadParams::default()).is_err());
    }

    #[test]
    fn member_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| member_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(member_seed(1, 0), member_seed(2, 0));
    }

    #[test]
    fn single_precision_synthesis() {
        let model = SpectrumModel::Kaimal(WindSite::<f32>::default());
        let cfg = SynthesisConfig { sample_rate_hz: 25.0f32, duration_s: 600.0, seed: 3 };
        let s = synthesize_series(&model, &cfg).unwrap();
        assert!((s.mean() - 20.0f32).abs() < 0.5);
    }
}
