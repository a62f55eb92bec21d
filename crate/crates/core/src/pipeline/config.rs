use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dynamics::{HarvesterParams, IntegratorConfig, OscillatorParams};
use crate::error::{Error, Result};
use crate::series::read_json;
use crate::spectra::{expected_variance, SpectrumModel, SynthesisConfig, WindLoadParams};

/// Return-curve grid over voltage return levels. Levels are taken at
/// return periods log-spaced from `1/lambda` to `max_observations`, unless
/// `levels` lists them explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurveGrid {
    pub points: usize,
    pub max_observations: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
}

impl Default for CurveGrid {
    fn default() -> Self {
        Self {
            points: 40,
            max_observations: 1e9,
            levels: None,
        }
    }
}

/// One end-to-end run. Every field except `spectrum` has a default, and
/// the defaults follow the reference protocol: 25 Hz for 3600 s, 50
/// members, a 0.95 percentile threshold and a 10 s trim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spectrum: SpectrumModel<f64>,
    #[serde(default)]
    pub wind_load: WindLoadParams<f64>,
    #[serde(default)]
    pub oscillator: OscillatorParams<f64>,
    #[serde(default)]
    pub harvester: HarvesterParams<f64>,
    #[serde(default)]
    pub integrator: IntegratorConfig<f64>,
    #[serde(default = "defaults::sample_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "defaults::duration")]
    pub duration_s: f64,
    #[serde(default = "defaults::ensemble")]
    pub ensemble_size: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "defaults::percentile")]
    pub percentile: f64,
    #[serde(default = "defaults::trim")]
    pub trim_s: f64,
    /// When set, the mean wind speed is solved for so that the predicted
    /// wind-speed threshold equals this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrate_wind_threshold: Option<f64>,
    #[serde(default)]
    pub return_curve: CurveGrid,
    #[serde(default)]
    pub per_member_fits: bool,
    #[serde(default)]
    pub write_member_series: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

mod defaults {
    pub fn sample_rate() -> f64 {
        25.0
    }
    pub fn duration() -> f64 {
        3600.0
    }
    pub fn ensemble() -> usize {
        50
    }
    pub fn percentile() -> f64 {
        0.95
    }
    pub fn trim() -> f64 {
        10.0
    }
}

impl RunConfig {
    pub fn new(spectrum: SpectrumModel<f64>) -> Self {
        Self {
            spectrum,
            wind_load: Default::default(),
            oscillator: Default::default(),
            harvester: Default::default(),
            integrator: Default::default(),
            sample_rate_hz: defaults::sample_rate(),
            duration_s: defaults::duration(),
            ensemble_size: defaults::ensemble(),
            base_seed: 0,
            percentile: defaults::percentile(),
            trim_s: defaults::trim(),
            calibrate_wind_threshold: None,
            return_curve: CurveGrid::default(),
            per_member_fits: false,
            write_member_series: false,
            output_dir: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn synthesis(&self, seed: u64) -> SynthesisConfig<f64> {
        SynthesisConfig {
            sample_rate_hz: self.sample_rate_hz,
            duration_s: self.duration_s,
            seed,
        }
    }

    /// Checks every section; failures are reported as usage errors.
    pub fn validate(&self) -> Result<()> {
        let invalid = |e: Error| Error::usage(format!("invalid config: {e}"));
        self.spectrum.validate().map_err(invalid)?;
        self.oscillator.validate().map_err(invalid)?;
        self.harvester.validate().map_err(invalid)?;
        let n = self.synthesis(0).sample_count().map_err(invalid)?;
        if self.ensemble_size == 0 {
            return Err(Error::usage("invalid config: ensemble_size must be at least 1"));
        }
        if !(self.percentile > 0.0 && self.percentile < 1.0) {
            return Err(Error::usage(format!(
                "invalid config: percentile must lie in (0, 1), got {}",
                self.percentile
            )));
        }
        let kept = n as f64 - (self.trim_s * self.sample_rate_hz).round();
        if !(self.trim_s >= 0.0) || kept < 2.0 {
            return Err(Error::usage(format!(
                "invalid config: trim_s = {} leaves fewer than 2 samples per member",
                self.trim_s
            )));
        }
        let ig = &self.integrator;
        if !(ig.rel_tol > 0.0 && ig.abs_tol > 0.0 && ig.max_step > 0.0) {
            return Err(Error::usage("invalid config: integrator tolerances and max_step must be positive"));
        }
        if let Some(target) = self.calibrate_wind_threshold {
            if !self.spectrum.is_wind() {
                return Err(Error::usage("invalid config: calibrate_wind_threshold needs a wind spectrum"));
            }
            if !(target > 0.0 && target.is_finite()) {
                return Err(Error::usage("invalid config: calibrate_wind_threshold must be positive"));
            }
        }
        if self.return_curve.points < 2 && self.return_curve.levels.is_none() {
            return Err(Error::usage("invalid config: return_curve.points must be at least 2"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, with the output directory left
    /// out so the hash depends only on what is computed.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let text = serde_json::to_string(&canonical).expect("config serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Mean wind speed whose predicted `percentile` point equals `target`,
/// treating the synthesised speed as Gaussian with the band-limited
/// variance of the model. The spectrum's other parameters are kept.
pub fn calibrate_mean_wind_speed(
    model: &SpectrumModel<f64>,
    synthesis: &SynthesisConfig<f64>,
    percentile: f64,
    target: f64,
) -> Result<f64> {
    if model.wind_site().is_none() {
        return Err(Error::usage("calibration needs a wind spectrum"));
    }
    let z = Normal::new(0.0, 1.0)
        .map_err(|e| Error::domain(e.to_string()))?
        .inverse_cdf(percentile);
    let predicted = |u: f64| -> Result<f64> {
        let mut m = *model;
        m.wind_site_mut().expect("wind").mean_wind_speed = u;
        Ok(u + z * expected_variance(&m, synthesis)?.sqrt())
    };
    // The predicted threshold grows monotonically with U.
    let (mut lo, mut hi) = (1e-3 * target, target);
    let f_lo = predicted(lo)? - target;
    let f_hi = predicted(hi)? - target;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::domain(format!(
            "no mean wind speed below {target} m/s reaches a threshold of {target} m/s"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (predicted(mid)? - target).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::WindSite;

    #[test]
    fn defaults_follow_protocol() {
        let cfg: RunConfig = serde_json::from_str(r#"{"spectrum": {"model": "kaimal", "mean_wind_speed": 20.0, "height": 10.0, "roughness_length": 0.025}}"#).unwrap();
        assert_eq!(cfg.sample_rate_hz, 25.0);
        assert_eq!(cfg.duration_s, 3600.0);
        assert_eq!(cfg.ensemble_size, 50);
        assert_eq!(cfg.percentile, 0.95);
        assert_eq!(cfg.trim_s, 10.0);
        assert_eq!(cfg, RunConfig::new(SpectrumModel::Kaimal(WindSite::default())));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let r: std::result::Result<RunConfig, _> =
            serde_json::from_str(r#"{"spectrum": {"model": "white_noise", "power_dbw": 30.0}, "ensemble": 3}"#);
        assert!(r.is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let mut a = RunConfig::new(SpectrumModel::Kaimal(WindSite::default()));
        let h = a.hash();
        a.output_dir = Some("/tmp/x".into());
        assert_eq!(a.hash(), h);
        a.base_seed = 1;
        assert_ne!(a.hash(), h);
        assert_eq!(h.len(), 64);
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let mut cfg = RunConfig::new(SpectrumModel::Kaimal(WindSite::default()));
        cfg.percentile = 1.0;
        assert!(cfg.validate().unwrap_err().is_usage());
        cfg.percentile = 0.95;
        cfg.trim_s = 4000.0;
        assert!(cfg.validate().unwrap_err().is_usage());
    }

    #[test]
    fn calibration_hits_target() {
        let model = SpectrumModel::Kaimal(WindSite::default());
        let syn = SynthesisConfig {
            sample_rate_hz: 25.0,
            duration_s: 3600.0,
            seed: 0,
        };
        let u = calibrate_mean_wind_speed(&model, &syn, 0.95, 24.75).unwrap();
        let mut m = model;
        m.wind_site_mut().unwrap().mean_wind_speed = u;
        let sd = expected_variance(&m, &syn).unwrap().sqrt();
        assert!((u + 1.6448536269514722 * sd - 24.75).abs() < 1e-9);
        assert!(u > 15.0 && u < 24.75);
    }
}
