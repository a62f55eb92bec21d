//! Uniformly sampled signals and their CSV + JSON-manifest persistence.
//!
//! A series is stored as `<name>.csv` with header `t,value` (seconds, SI
//! units) and a sidecar `<name>.manifest.json` describing where it came from.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Physical unit tag carried by every series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    #[serde(rename = "m/s")]
    MetersPerSecond,
    #[serde(rename = "N")]
    Newton,
    #[serde(rename = "m/s^2")]
    MetersPerSecondSquared,
    #[serde(rename = "V")]
    Volt,
    #[serde(rename = "m")]
    Meter,
}

impl std::fmt::Display for Units {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Units::MetersPerSecond => "m/s",
            Units::Newton => "N",
            Units::MetersPerSecondSquared => "m/s^2",
            Units::Volt => "V",
            Units::Meter => "m",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Units {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m/s" => Ok(Units::MetersPerSecond),
            "N" => Ok(Units::Newton),
            "m/s^2" | "m/s2" | "m/s²" => Ok(Units::MetersPerSecondSquared),
            "V" => Ok(Units::Volt),
            "m" => Ok(Units::Meter),
            other => Err(Error::usage(format!("unknown units tag `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    samples: Vec<T>,
    sample_rate_hz: T,
    units: Units,
    seed: u64,
}

impl<T: Real> TimeSeries<T> {
    /// Builds a series, rejecting non-finite samples, fewer than two samples,
    /// or a non-positive sample rate.
    pub fn new(samples: Vec<T>, sample_rate_hz: T, units: Units, seed: u64) -> Result<Self> {
        if !(sample_rate_hz > T::zero()) || !sample_rate_hz.is_finite() {
            return Err(Error::domain(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if samples.len() < 2 {
            return Err(Error::domain(format!(
                "a time series needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::domain(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            units,
            seed,
        })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> T {
        self.sample_rate_hz
    }

    pub fn dt(&self) -> T {
        T::one() / self.sample_rate_hz
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn duration_s(&self) -> T {
        T::from_usize_lossy(self.samples.len()) / self.sample_rate_hz
    }

    /// Time stamp of sample `i`.
    pub fn time(&self, i: usize) -> T {
        T::from_usize_lossy(i) / self.sample_rate_hz
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.samples.len()).map(|i| self.time(i)).collect()
    }

    pub fn mean(&self) -> T {
        mean(&self.samples)
    }

    /// Population variance (divides by N).
    pub fn variance(&self) -> T {
        let m = self.mean();
        self.samples
            .iter()
            .map(|&x| (x - m) * (x - m))
            .sum::<T>()
            / T::from_usize_lossy(self.samples.len())
    }

    /// Drops the first `seconds` of the series. The result keeps the sample
    /// rate; at least two samples must remain.
    pub fn trim_start(&self, seconds: T) -> Result<Self> {
        if seconds < T::zero() {
            return Err(Error::domain("trim length must be non-negative"));
        }
        let skip = (seconds * self.sample_rate_hz).round().to_usize().unwrap_or(usize::MAX);
        if skip + 2 > self.samples.len() {
            return Err(Error::domain(format!(
                "trimming {skip} samples leaves fewer than 2 of {}",
                self.samples.len()
            )));
        }
        Ok(Self {
            samples: self.samples[skip..].to_vec(),
            ..self.clone()
        })
    }

    pub fn map(&self, units: Units, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(
            self.samples.iter().map(|&x| f(x)).collect(),
            self.sample_rate_hz,
            units,
            self.seed,
        )
    }

    pub fn with_units(mut self, units: Units) -> Self {
        self.units = units;
        self
    }
}

pub(crate) fn mean<T: Real>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len())
}

/// Sidecar metadata written next to every CSV series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub units: Units,
    pub sample_rate_hz: f64,
    pub seed: u64,
    pub model: String,
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trim_s: Option<f64>,
}

/// `foo.csv` → `foo.manifest.json`.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("manifest.json")
}

pub fn write_csv<T: Real>(path: &Path, series: &TimeSeries<T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "t,value").map_err(io)?;
    for (i, x) in series.samples().iter().enumerate() {
        writeln!(out, "{},{}", series.time(i).to_f64_lossy(), x.to_f64_lossy()).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_series<T: Real>(path: &Path, series: &TimeSeries<T>, manifest: &Manifest) -> Result<()> {
    write_csv(path, series)?;
    write_json(&manifest_path(path), manifest)
}

/// Reads a `t,value` CSV. Units, seed and sample rate come from the sidecar
/// manifest when present; otherwise the rate is inferred from the time
/// column and `fallback_units` is used.
pub fn read_series<T: Real>(path: &Path, fallback_units: Option<Units>) -> Result<TimeSeries<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let headers = reader.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
        return Err(Error::usage(format!(
            "{}: expected header `t,value`, found `{}`",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::usage(format!("{}: bad number `{s}`", path.display())))
        };
        times.push(parse(&record[0])?);
        values.push(T::lit(parse(&record[1])?));
    }

    let manifest: Option<Manifest> = {
        let mp = manifest_path(path);
        if mp.exists() {
            Some(read_json(&mp)?)
        } else {
            None
        }
    };
    let (units, rate, seed) = match manifest {
        Some(m) => (m.units, m.sample_rate_hz, m.seed),
        None => {
            let units = fallback_units.ok_or_else(|| {
                Error::usage(format!(
                    "{}: no manifest found; pass the units explicitly",
                    path.display()
                ))
            })?;
            if times.len() < 2 {
                return Err(Error::domain("a time series needs at least 2 samples"));
            }
            let span = times[times.len() - 1] - times[0];
            let rate = (times.len() - 1) as f64 / span;
            (units, rate, 0)
        }
    };
    TimeSeries::new(values, T::lit(rate), units, seed)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<S: for<'de> Deserialize<'de>>(path: &Path) -> Result<S> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
