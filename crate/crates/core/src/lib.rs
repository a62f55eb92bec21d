//! Extreme-value analysis of wind-excited structures through the voltage of
//! an attached piezoelectric harvester.
//!
//! The numerical modules are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix them to `f64`, which is what the pipeline and CLI use.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod dynamics;
pub mod error;
pub mod evt;
pub mod pipeline;
pub mod scalar;
pub mod series;
pub mod spectra;

pub use error::{Error, Result};
pub use scalar::Real;
pub use series::Units;

pub type TimeSeries = series::TimeSeries<f64>;
pub type WindSite = spectra::WindSite<f64>;
pub type SpectrumModel = spectra::SpectrumModel<f64>;
pub type SynthesisConfig = spectra::SynthesisConfig<f64>;
pub type WindLoadParams = spectra::WindLoadParams<f64>;
pub type OscillatorParams = dynamics::OscillatorParams<f64>;
pub type HarvesterParams = dynamics::HarvesterParams<f64>;
pub type IntegratorConfig = dynamics::IntegratorConfig<f64>;
pub type GpdFit = evt::GpdFit<f64>;
pub type ReturnLevelMap = evt::ReturnLevelMap<f64>;
pub type EmpiricalCdf = evt::EmpiricalCdf<f64>;

pub use pipeline::{run_pipeline, RunConfig, RunReport};
