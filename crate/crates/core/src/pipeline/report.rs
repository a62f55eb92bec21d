use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::{GpdFit, ReturnLevelMap};

use super::config::CurveGrid;

/// Pooled summary of one quantity and its tail fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityReport {
    pub fit: GpdFit<f64>,
    pub low_confidence: bool,
    pub mean: f64,
    pub std_dev: f64,
    pub excess_kurtosis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberFits {
    pub member: usize,
    pub seed: u64,
    pub wind: Option<GpdFit<f64>>,
    pub acceleration: Option<GpdFit<f64>>,
    pub voltage: Option<GpdFit<f64>>,
}

/// Voltage level and the acceleration and wind-speed levels exceeded
/// equally often.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub z_v: f64,
    pub z_a: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_w: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config_hash: String,
    pub model: String,
    pub base_seed: u64,
    pub member_seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_wind_speed: Option<f64>,
    pub sample_rate_hz: f64,
    pub samples_per_member: usize,
    pub percentile: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wind: Option<QuantityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force: Option<QuantityReport>,
    pub acceleration: QuantityReport,
    pub voltage: QuantityReport,
    pub return_curves: Vec<CurveRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub member_fits: Vec<MemberFits>,
}

impl RunReport {
    pub fn voltage_to_acceleration(&self) -> Result<ReturnLevelMap<f64>> {
        ReturnLevelMap::new(self.voltage.fit, self.acceleration.fit)
    }

    pub fn voltage_to_wind(&self) -> Option<Result<ReturnLevelMap<f64>>> {
        self.wind
            .as_ref()
            .map(|w| ReturnLevelMap::new(self.voltage.fit, w.fit))
    }
}

/// Voltage levels for the curve tables.
pub fn curve_levels(voltage: &GpdFit<f64>, grid: &CurveGrid) -> Result<Vec<f64>> {
    if let Some(levels) = &grid.levels {
        return Ok(levels.clone());
    }
    let t0 = 1.0 / voltage.exceed_rate;
    if !(grid.max_observations > t0) {
        return Err(Error::usage(format!(
            "return_curve.max_observations must exceed 1/lambda = {t0}"
        )));
    }
    let span = (grid.max_observations / t0).ln();
    (0..grid.points)
        .map(|i| voltage.return_level_at_log_ratio(span * i as f64 / (grid.points - 1) as f64))
        .collect()
}

/// Maps each voltage level to acceleration and, when a wind fit exists, wind
/// speed. Levels outside the voltage support are skipped with a warning.
pub fn emit_return_curves(
    voltage: &GpdFit<f64>,
    acceleration: &GpdFit<f64>,
    wind: Option<&GpdFit<f64>>,
    levels: &[f64],
) -> Result<Vec<CurveRow>> {
    let to_a = ReturnLevelMap::new(*voltage, *acceleration)?;
    let to_w = wind.map(|w| ReturnLevelMap::new(*voltage, *w)).transpose()?;
    let mut rows = Vec::with_capacity(levels.len());
    for &z_v in levels {
        let z_a = match to_a.map(z_v) {
            Ok(z) => z,
            Err(e @ Error::OutsideSupport { .. }) => {
                log::warn!("skipping voltage level {z_v}: {e}");
                continue;
            }
            Err(e) => return Err(e),
        };
        let z_w = to_w.as_ref().map(|m| m.map(z_v)).transpose()?;
        rows.push(CurveRow { z_v, z_a, z_w });
    }
    Ok(rows)
}

pub fn write_return_curves(path: &Path, rows: &[CurveRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let with_wind = rows.iter().any(|r| r.z_w.is_some());
    if with_wind {
        w.write_record(["z_v", "z_a", "z_w"])?;
    } else {
        w.write_record(["z_v", "z_a"])?;
    }
    for r in rows {
        let mut rec = vec![r.z_v.to_string(), r.z_a.to_string()];
        if with_wind {
            rec.push(r.z_w.map_or(String::new(), |z| z.to_string()));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Thresholds and fitted parameters, one column per report.
pub fn render_table(reports: &[RunReport]) -> String {
    type Cell = fn(&RunReport) -> Option<f64>;
    let rows: [(&str, Option<Cell>); 12] = [
        ("Threshold", None),
        ("Wind-speed (m/s)", Some(|r| r.wind.as_ref().map(|q| q.fit.threshold))),
        ("Acceleration (m/s^2)", Some(|r| Some(r.acceleration.fit.threshold))),
        ("Voltage (V)", Some(|r| Some(r.voltage.fit.threshold))),
        ("GPD fit", None),
        ("Shape parameter - Wind-speed", Some(|r| r.wind.as_ref().map(|q| q.fit.xi))),
        ("Shape parameter - Acceleration", Some(|r| Some(r.acceleration.fit.xi))),
        ("Shape parameter - Voltage", Some(|r| Some(r.voltage.fit.xi))),
        ("Scale parameter - Wind-speed", Some(|r| r.wind.as_ref().map(|q| q.fit.sigma))),
        ("Scale parameter - Acceleration", Some(|r| Some(r.acceleration.fit.sigma))),
        ("Scale parameter - Voltage", Some(|r| Some(r.voltage.fit.sigma))),
        ("Exceedance rate", Some(|r| Some(r.voltage.fit.exceed_rate))),
    ];
    let label_w = 32;
    let col_w = 12;
    let mut out = String::new();
    let _ = write!(out, "{:<label_w$}", "Parameters");
    for r in reports {
        let _ = write!(out, "{:>col_w$}", r.model);
    }
    out.push('\n');
    for (label, cell) in rows {
        let _ = write!(out, "{:<label_w$}", label);
        if let Some(cell) = cell {
            for r in reports {
                match cell(r) {
                    Some(v) => {
                        let _ = write!(out, "{:>col_w$.4}", v);
                    }
                    None => {
                        let _ = write!(out, "{:>col_w$}", "-");
                    }
                }
            }
        }
        out.push('\n');
    }
    for r in reports {
        let flagged: Vec<&str> = [
            ("wind", r.wind.as_ref()),
            ("acceleration", Some(&r.acceleration)),
            ("voltage", Some(&r.voltage)),
        ]
        .into_iter()
        .filter_map(|(name, q)| q.filter(|q| q.low_confidence).map(|_| name))
        .collect();
        if !flagged.is_empty() {
            let _ = writeln!(
                out,
                "note: {} fit for {} is low-confidence (few exceedances)",
                r.model,
                flagged.join(", ")
            );
        }
    }
    out
}
