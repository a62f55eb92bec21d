//! Ensemble orchestration: synthesise → load → host → harvester → pool → fit.

mod config;
mod report;

pub use config::{calibrate_mean_wind_speed, CurveGrid, RunConfig};
pub use report::{
    curve_levels, emit_return_curves, render_table, write_return_curves, CurveRow, MemberFits, QuantityReport,
    RunReport,
};

use std::path::Path;

use rayon::prelude::*;

use crate::dynamics::{simulate_harvester, simulate_sdof};
use crate::error::{Error, Result, Stage};
use crate::evt::{diagnostics, exceedances, fit_peaks_over_threshold, write_diagnostics, GpdFit};
use crate::series::{write_json, write_series, Manifest, TimeSeries, Units};
use crate::spectra::{member_seed, synthesize_series, wind_to_force, SpectrumModel};

/// Environment variable overriding the worker-thread count.
pub const WORKERS_ENV: &str = "HARVEST_EVT_WORKERS";

/// Steady-state series of one ensemble member, after the trim.
#[derive(Debug, Clone)]
pub struct MemberOutput {
    pub member: usize,
    pub seed: u64,
    /// Wind speed for wind models, the applied force for white noise.
    pub excitation: TimeSeries<f64>,
    pub acceleration: TimeSeries<f64>,
    pub voltage: TimeSeries<f64>,
}

/// Model actually simulated: the configured one, with the mean wind speed
/// replaced when calibration is requested.
pub fn effective_model(cfg: &RunConfig) -> Result<SpectrumModel<f64>> {
    let mut model = cfg.spectrum;
    if let Some(target) = cfg.calibrate_wind_threshold {
        let u = calibrate_mean_wind_speed(&model, &cfg.synthesis(0), cfg.percentile, target)?;
        if let Some(site) = model.wind_site_mut() {
            site.mean_wind_speed = u;
        }
    }
    Ok(model)
}

/// Runs one member from synthesis to trimmed harvester voltage.
pub fn simulate_member(cfg: &RunConfig, model: &SpectrumModel<f64>, member: usize) -> Result<MemberOutput> {
    let seed = member_seed(cfg.base_seed, member as u64);
    let at = |stage: Stage| {
        move |e: Error| Error::Member {
            member,
            stage,
            source: Box::new(e),
        }
    };
    let excitation = synthesize_series(model, &cfg.synthesis(seed)).map_err(at(Stage::Synthesis))?;
    let force = if model.is_wind() {
        wind_to_force(&excitation, &cfg.wind_load).map_err(at(Stage::Force))?
    } else {
        excitation.clone()
    };
    let host = simulate_sdof(&force, &cfg.oscillator, &cfg.integrator).map_err(at(Stage::Host))?;
    let harvester =
        simulate_harvester(&host.acceleration, &cfg.harvester, &cfg.integrator).map_err(at(Stage::Harvester))?;
    let trim = |s: &TimeSeries<f64>| s.trim_start(cfg.trim_s).map_err(at(Stage::Output));
    Ok(MemberOutput {
        member,
        seed,
        excitation: trim(&excitation)?,
        acceleration: trim(&host.acceleration)?,
        voltage: trim(&harvester.voltage)?,
    })
}

fn worker_pool() -> Result<Option<rayon::ThreadPool>> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::usage(format!("{WORKERS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| Error::usage(format!("cannot start {n} workers: {e}")))
}

/// Simulates every member, in parallel, returning them in member order.
pub fn simulate_ensemble(cfg: &RunConfig, model: &SpectrumModel<f64>) -> Result<Vec<MemberOutput>> {
    let run = || {
        (0..cfg.ensemble_size)
            .into_par_iter()
            .map(|m| simulate_member(cfg, model, m))
            .collect::<Result<Vec<_>>>()
    };
    match worker_pool()? {
        Some(pool) => pool.install(run),
        None => run(),
    }
}

fn pool(members: &[MemberOutput], pick: impl Fn(&MemberOutput) -> &TimeSeries<f64>) -> Vec<f64> {
    members.iter().flat_map(|m| pick(m).samples().iter().copied()).collect()
}

/// Mean, standard deviation and excess kurtosis.
pub fn moments(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (m2, m4) = xs.iter().fold((0.0, 0.0), |(a, b), &x| {
        let d = (x - mean) * (x - mean);
        (a + d, b + d * d)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    (mean, m2.sqrt(), m4 / (m2 * m2) - 3.0)
}

fn quantity(samples: &[f64], percentile: f64, rectify: bool, units: Units) -> Result<QuantityReport> {
    let fit = fit_peaks_over_threshold(samples, percentile, rectify, units)?;
    let (mean, std_dev, excess_kurtosis) = moments(samples);
    Ok(QuantityReport {
        low_confidence: fit.is_low_confidence(),
        fit,
        mean,
        std_dev,
        excess_kurtosis,
    })
}

/// Pools members in order and fits every quantity.
pub fn summarise(cfg: &RunConfig, model: &SpectrumModel<f64>, members: &[MemberOutput]) -> Result<RunReport> {
    let p = cfg.percentile;
    let excitation = pool(members, |m| &m.excitation);
    let accel = pool(members, |m| &m.acceleration);
    let volt = pool(members, |m| &m.voltage);

    let ((exc, acceleration), voltage) = rayon::join(
        || {
            rayon::join(
                || quantity(&excitation, p, false, model.units()),
                || quantity(&accel, p, true, Units::MetersPerSecondSquared),
            )
        },
        || quantity(&volt, p, true, Units::Volt),
    );
    let (exc, acceleration, voltage) = (exc?, acceleration?, voltage?);
    let (wind, force) = if model.is_wind() {
        (Some(exc), None)
    } else {
        (None, Some(exc))
    };

    let levels = curve_levels(&voltage.fit, &cfg.return_curve)?;
    let return_curves = emit_return_curves(
        &voltage.fit,
        &acceleration.fit,
        wind.as_ref().map(|w| &w.fit),
        &levels,
    )?;

    let member_fits = if cfg.per_member_fits {
        members
            .par_iter()
            .map(|m| {
                let fit = |s: &TimeSeries<f64>, rectify: bool| {
                    fit_peaks_over_threshold(s.samples(), p, rectify, s.units()).ok()
                };
                MemberFits {
                    member: m.member,
                    seed: m.seed,
                    wind: if model.is_wind() { fit(&m.excitation, false) } else { None },
                    acceleration: fit(&m.acceleration, true),
                    voltage: fit(&m.voltage, true),
                }
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        model: model.name().to_string(),
        base_seed: cfg.base_seed,
        member_seeds: members.iter().map(|m| m.seed).collect(),
        mean_wind_speed: model.wind_site().map(|s| s.mean_wind_speed),
        sample_rate_hz: cfg.sample_rate_hz,
        samples_per_member: members.first().map_or(0, |m| m.voltage.len()),
        percentile: p,
        wind,
        force,
        acceleration,
        voltage,
        return_curves,
        member_fits,
    })
}

/// Full run. Artifacts are written when `cfg.output_dir` is set; the
/// effective config is written first so a failed run still leaves it.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(&dir.join("config.json"), cfg)?;
    }
    let model = effective_model(cfg)?;
    log::info!(
        "{}: {} members of {} s at {} Hz",
        model.name(),
        cfg.ensemble_size,
        cfg.duration_s,
        cfg.sample_rate_hz
    );
    let members = simulate_ensemble(cfg, &model)?;
    if let (Some(dir), true) = (&cfg.output_dir, cfg.write_member_series) {
        write_member_series(dir, cfg, &model, &members)?;
    }
    let report = summarise(cfg, &model, &members)?;
    if let Some(dir) = &cfg.output_dir {
        write_artifacts(dir, &report, &members)?;
    }
    Ok(report)
}

fn write_member_series(dir: &Path, cfg: &RunConfig, model: &SpectrumModel<f64>, members: &[MemberOutput]) -> Result<()> {
    let hash = cfg.hash();
    for m in members {
        let params = serde_json::json!({
            "spectrum": model,
            "oscillator": cfg.oscillator,
            "harvester": cfg.harvester,
            "integrator": cfg.integrator,
            "member": m.member,
        });
        let series = [
            (model.name(), &m.excitation),
            ("acceleration", &m.acceleration),
            ("voltage", &m.voltage),
        ];
        for (name, s) in series {
            let manifest = Manifest {
                units: s.units(),
                sample_rate_hz: s.sample_rate_hz(),
                seed: m.seed,
                model: model.name().to_string(),
                params: params.clone(),
                config_hash: Some(hash.clone()),
                trim_s: Some(cfg.trim_s),
            };
            write_series(&dir.join(format!("member{:03}_{name}.csv", m.member)), s, &manifest)?;
        }
    }
    Ok(())
}

fn write_artifacts(dir: &Path, report: &RunReport, members: &[MemberOutput]) -> Result<()> {
    write_json(&dir.join("report.json"), report)?;
    let table = render_table(std::slice::from_ref(report));
    let path = dir.join("report.txt");
    std::fs::write(&path, table).map_err(|e| Error::io(&path, e))?;
    write_return_curves(&dir.join("return_curves.csv"), &report.return_curves)?;

    let quantities: [(&str, Option<&QuantityReport>, fn(&MemberOutput) -> &TimeSeries<f64>, bool); 3] = [
        ("excitation", report.wind.as_ref().or(report.force.as_ref()), |m| &m.excitation, false),
        ("acceleration", Some(&report.acceleration), |m| &m.acceleration, true),
        ("voltage", Some(&report.voltage), |m| &m.voltage, true),
    ];
    for (name, q, pick, rectify) in quantities {
        let Some(q) = q else { continue };
        write_fit(&dir.join(format!("{name}_fit.json")), &q.fit)?;
        let ys = exceedances(&pool(members, pick), q.fit.threshold, rectify);
        let d = diagnostics(&q.fit, &ys)?;
        write_diagnostics(dir, name, &d)?;
    }
    Ok(())
}

pub fn write_fit(path: &Path, fit: &GpdFit<f64>) -> Result<()> {
    write_json(path, fit)
}
