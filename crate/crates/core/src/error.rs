use std::path::PathBuf;

use thiserror::Error;

/// Which end of a distribution's support was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Lower,
    Upper,
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Lower => f.write_str("lower endpoint (threshold)"),
            Endpoint::Upper => f.write_str("upper endpoint (u - sigma/xi)"),
        }
    }
}

/// Pipeline stage names used when a member fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Synthesis,
    Force,
    Host,
    Harvester,
    Fit,
    Output,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::Synthesis => "synthesis",
            Stage::Force => "wind-to-force",
            Stage::Host => "host oscillator",
            Stage::Harvester => "harvester",
            Stage::Fit => "extreme-value fit",
            Stage::Output => "artifact output",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("integrator step size {step:e} fell below minimum at t = {t} s")]
    StepUnderflow { t: f64, step: f64 },

    #[error("integrator exceeded {max_steps} steps before t = {t} s")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error(
        "maximum likelihood search did not converge after {iterations} iterations \
         (best xi = {xi}, sigma = {sigma}, spread = {spread:e})"
    )]
    NonConvergence {
        xi: f64,
        sigma: f64,
        iterations: usize,
        spread: f64,
    },

    #[error("level {value} lies outside the support: beyond the {endpoint} at {bound}")]
    OutsideSupport {
        value: f64,
        bound: f64,
        endpoint: Endpoint,
    },

    #[error("exceedance rates differ ({from} vs {to}); return-level maps need a shared rate")]
    RateMismatch { from: f64, to: f64 },

    #[error("member {member}: {stage} stage failed: {source}")]
    Member {
        member: usize,
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by bad input or invocation rather than numerics.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Usage(_) | Error::Io { .. } | Error::Json(_) | Error::Csv(_) => true,
            Error::Member { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
