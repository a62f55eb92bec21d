//! Host oscillator and piezoelectric harvester response to sampled forcing.
//!
//! The host is a linear SDOF oscillator driven by a force series. Its
//! acceleration is the base excitation of a cantilever harvester modelled
//! with the corrected lumped-parameter equations
//!
//! ```text
//! m_h z'' + c_h z' + k_h z − θ V = −μ m_h y''
//! θ z' + C_p V' + V / R_l = 0
//! ```
//!
//! Both stages start from rest. Forcing between samples is interpolated
//! (linear by default) and every sample interval is integrated as its own
//! segment, so outputs land exactly on the forcing time base.

pub mod ode;
pub mod psd;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::series::{TimeSeries, Units};
use ode::{DormandPrince, OdeSystem, Stats};

pub use psd::{estimate_psd, Psd};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams<T> {
    pub mass: T,
    pub damping_ratio: T,
    pub natural_frequency_hz: T,
}

impl<T: Real> Default for OscillatorParams<T> {
    fn default() -> Self {
        Self {
            mass: T::one(),
            damping_ratio: T::lit(0.02148),
            natural_frequency_hz: T::lit(12.79),
        }
    }
}

impl<T: Real> OscillatorParams<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.mass > T::zero()
            && self.damping_ratio > T::zero()
            && self.damping_ratio < T::one()
            && self.natural_frequency_hz > T::zero()
            && self.mass.is_finite()
            && self.natural_frequency_hz.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::domain(
                "oscillator needs positive mass and frequency and 0 < damping ratio < 1",
            ))
        }
    }

    pub fn omega(&self) -> T {
        T::TAU() * self.natural_frequency_hz
    }

    /// Steady-state displacement amplitude under `F₀ sin(Ωt)`.
    pub fn harmonic_amplitude(&self, force_amplitude: T, omega: T) -> T {
        let w = self.omega();
        let two = T::lit(2.0);
        let re = w * w - omega * omega;
        let im = two * self.damping_ratio * w * omega;
        force_amplitude / self.mass / (re * re + im * im).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarvesterParams<T> {
    /// Tip mass M_t, kg.
    pub tip_mass: T,
    /// Beam mass m, kg.
    pub beam_mass: T,
    pub damping_ratio: T,
    /// Load resistance R_l, Ω.
    pub load_resistance: T,
    /// Piezo capacitance C_p, F.
    pub capacitance: T,
    pub natural_frequency_hz: T,
    /// Electromechanical coupling θ, C/m.
    pub coupling: T,
}

impl<T: Real> Default for HarvesterParams<T> {
    fn default() -> Self {
        Self {
            tip_mass: T::lit(0.03),
            beam_mass: T::lit(0.01365),
            damping_ratio: T::lit(0.04),
            load_resistance: T::lit(1.0e6),
            capacitance: T::lit(1.966e-9),
            natural_frequency_hz: T::lit(12.79),
            coupling: T::lit(1.289e-6),
        }
    }
}

impl<T: Real> HarvesterParams<T> {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.tip_mass,
            self.beam_mass,
            self.damping_ratio,
            self.load_resistance,
            self.capacitance,
            self.natural_frequency_hz,
        ];
        // The coupling sign only sets the voltage polarity.
        let coupling_ok = self.coupling != T::zero() && self.coupling.is_finite();
        if fields.iter().all(|&v| v > T::zero() && v.is_finite()) && coupling_ok {
            Ok(())
        } else {
            Err(Error::domain(
                "harvester masses, damping, R_l, C_p and frequency must be positive; θ finite and non-zero",
            ))
        }
    }

    pub fn omega(&self) -> T {
        T::TAU() * self.natural_frequency_hz
    }

    /// Rayleigh equivalent mass of a tip-loaded cantilever, `M_t + 33/140 m`.
    pub fn equivalent_mass(&self) -> T {
        self.tip_mass + T::lit(33.0 / 140.0) * self.beam_mass
    }

    pub fn stiffness(&self) -> T {
        let w = self.omega();
        self.equivalent_mass() * w * w
    }

    pub fn damping(&self) -> T {
        T::lit(2.0) * self.damping_ratio * self.equivalent_mass() * self.omega()
    }

    pub fn correction_factor(&self) -> T {
        // Validated params never hit the error path.
        correction_factor(self.tip_mass, self.beam_mass).unwrap_or_else(|_| T::one())
    }
}

/// Base-excitation correction factor for a cantilever with tip mass `M_t`
/// and beam mass `m`:
/// `μ = (r² + 0.603 r + 0.08955) / (r² + 0.4637 r + 0.05718)`, `r = M_t / m`.
pub fn correction_factor<T: Real>(tip_mass: T, beam_mass: T) -> Result<T> {
    if !(beam_mass > T::zero()) || !(tip_mass >= T::zero()) {
        return Err(Error::domain(format!(
            "correction factor needs M_t ≥ 0 and m > 0 (got {tip_mass}, {beam_mass})"
        )));
    }
    let r = tip_mass / beam_mass;
    if r <= T::one() {
        let num = r * r + T::lit(0.603) * r + T::lit(0.08955);
        let den = r * r + T::lit(0.4637) * r + T::lit(0.05718);
        return Ok(num / den);
    }
    // Divided through by r² so large mass ratios cannot overflow.
    let s = T::one() / r;
    let num = T::one() + (T::lit(0.603) + T::lit(0.08955) * s) * s;
    let den = T::one() + (T::lit(0.4637) + T::lit(0.05718) * s) * s;
    Ok(num / den)
}

/// How a sampled excitation is evaluated between its samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Zero-order hold.
    Hold,
    #[default]
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Largest step the integrator may take, seconds.
    pub max_step: T,
    #[serde(default)]
    pub forcing_interpolation: Interpolation,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-6),
            abs_tol: T::lit(1e-9),
            max_step: T::lit(0.01),
            forcing_interpolation: Interpolation::Linear,
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn solver(&self) -> DormandPrince<T> {
        DormandPrince {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            max_steps: usize::MAX,
        }
    }
}

/// Host outputs on the forcing time base.
#[derive(Debug, Clone, PartialEq)]
pub struct HostResponse<T> {
    pub displacement: TimeSeries<T>,
    pub velocity: TimeSeries<T>,
    pub acceleration: TimeSeries<T>,
}

/// Harvester outputs on the base-acceleration time base.
#[derive(Debug, Clone, PartialEq)]
pub struct HarvesterResponse<T> {
    pub rel_displacement: TimeSeries<T>,
    pub voltage: TimeSeries<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput<T> {
    pub host: HostResponse<T>,
    pub harvester: HarvesterResponse<T>,
}

impl<T: Real> SimulationOutput<T> {
    /// Drops the first `seconds` from every output.
    pub fn trim_start(&self, seconds: T) -> Result<Self> {
        Ok(Self {
            host: HostResponse {
                displacement: self.host.displacement.trim_start(seconds)?,
                velocity: self.host.velocity.trim_start(seconds)?,
                acceleration: self.host.acceleration.trim_start(seconds)?,
            },
            harvester: HarvesterResponse {
                rel_displacement: self.harvester.rel_displacement.trim_start(seconds)?,
                voltage: self.harvester.voltage.trim_start(seconds)?,
            },
        })
    }
}

/// Excitation over one sample interval: `value + slope·(t − start)`.
#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    start: T,
    value: T,
    slope: T,
}

impl<T: Real> Segment<T> {
    #[inline]
    fn at(&self, t: T) -> T {
        self.value + self.slope * (t - self.start)
    }
}

struct Sdof<T, F> {
    two_zeta_omega: T,
    omega_sq: T,
    inv_mass: T,
    force: F,
}

impl<T: Real, F: Fn(T) -> T> OdeSystem<T, 2> for Sdof<T, F> {
    #[inline]
    fn rhs(&self, t: T, y: &[T; 2]) -> [T; 2] {
        [
            y[1],
            (self.force)(t) * self.inv_mass - self.two_zeta_omega * y[1] - self.omega_sq * y[0],
        ]
    }
}

impl<T: Real> Sdof<T, ()> {
    fn coefficients(p: &OscillatorParams<T>) -> (T, T, T) {
        let w = p.omega();
        (T::lit(2.0) * p.damping_ratio * w, w * w, T::one() / p.mass)
    }
}

struct Harvester<T, F> {
    inv_mass: T,
    damping: T,
    stiffness: T,
    coupling: T,
    mu: T,
    inv_cap: T,
    inv_rc: T,
    base_accel: F,
}

impl<T: Real> Harvester<T, ()> {
    fn new(p: &HarvesterParams<T>) -> Harvester<T, ()> {
        Harvester {
            inv_mass: T::one() / p.equivalent_mass(),
            damping: p.damping(),
            stiffness: p.stiffness(),
            coupling: p.coupling,
            mu: p.correction_factor(),
            inv_cap: T::one() / p.capacitance,
            inv_rc: T::one() / (p.load_resistance * p.capacitance),
            base_accel: (),
        }
    }

    fn with<F>(&self, base_accel: F) -> Harvester<T, F> {
        Harvester {
            inv_mass: self.inv_mass,
            damping: self.damping,
            stiffness: self.stiffness,
            coupling: self.coupling,
            mu: self.mu,
            inv_cap: self.inv_cap,
            inv_rc: self.inv_rc,
            base_accel,
        }
    }
}

impl<T: Real, F: Fn(T) -> T> OdeSystem<T, 3> for Harvester<T, F> {
    // State (z, z', V).
    #[inline]
    fn rhs(&self, t: T, y: &[T; 3]) -> [T; 3] {
        let (z, zd, v) = (y[0], y[1], y[2]);
        let zdd = (-self.damping * zd - self.stiffness * z + self.coupling * v) * self.inv_mass
            - self.mu * (self.base_accel)(t);
        let vd = -self.coupling * zd * self.inv_cap - v * self.inv_rc;
        [zd, zdd, vd]
    }
}

/// Integrates `build(segment)` across every sample interval of `samples`.
fn integrate_sampled<T, S, B, const D: usize>(
    cfg: &IntegratorConfig<T>,
    samples: &[T],
    sample_rate_hz: T,
    build: B,
) -> Result<(Vec<[T; D]>, Stats)>
where
    T: Real,
    S: OdeSystem<T, D>,
    B: Fn(Segment<T>) -> S,
{
    let solver = cfg.solver();
    solver.validate()?;
    let mut out = Vec::with_capacity(samples.len());
    let mut stats = Stats::default();
    let mut y = [T::zero(); D];
    out.push(y);
    let mut h = T::zero();
    for j in 0..samples.len() - 1 {
        let t0 = T::from_usize_lossy(j) / sample_rate_hz;
        let t1 = T::from_usize_lossy(j + 1) / sample_rate_hz;
        let slope = match cfg.forcing_interpolation {
            Interpolation::Hold => T::zero(),
            Interpolation::Linear => (samples[j + 1] - samples[j]) / (t1 - t0),
        };
        let sys = build(Segment {
            start: t0,
            value: samples[j],
            slope,
        });
        y = solver.advance(&sys, t0, y, t1, &mut h, &mut stats)?;
        out.push(y);
    }
    Ok((out, stats))
}

fn check_input<T: Real>(series: &TimeSeries<T>, expected: Units, what: &str) -> Result<()> {
    if series.units() != expected {
        return Err(Error::usage(format!(
            "{what} expects a series in {expected}, got {}",
            series.units()
        )));
    }
    Ok(())
}

/// Host response `x'' + 2ζω x' + ω² x = F/M` to a sampled force, from rest.
/// Acceleration is evaluated from the equation of motion at each sample.
pub fn simulate_sdof<T: Real>(
    force: &TimeSeries<T>,
    p: &OscillatorParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<HostResponse<T>> {
    check_input(force, Units::Newton, "simulate_sdof")?;
    p.validate()?;
    let (c, k, inv_m) = Sdof::coefficients(p);
    let samples = force.samples();
    let (states, _) = integrate_sampled(cfg, samples, force.sample_rate_hz(), |seg| Sdof {
        two_zeta_omega: c,
        omega_sq: k,
        inv_mass: inv_m,
        force: move |t| seg.at(t),
    })?;
    let accel: Vec<T> = states
        .iter()
        .zip(samples)
        .map(|(y, &f)| f * inv_m - c * y[1] - k * y[0])
        .collect();
    let fs = force.sample_rate_hz();
    let seed = force.seed();
    Ok(HostResponse {
        displacement: TimeSeries::new(states.iter().map(|y| y[0]).collect(), fs, Units::Meter, seed)?,
        velocity: TimeSeries::new(states.iter().map(|y| y[1]).collect(), fs, Units::MetersPerSecond, seed)?,
        acceleration: TimeSeries::new(accel, fs, Units::MetersPerSecondSquared, seed)?,
    })
}

/// Host response to a continuous force `F(t)`, sampled on `grid` with the
/// integrator's dense output. Returns `[x, x', x'']` per grid point.
pub fn simulate_sdof_continuous<T: Real>(
    force: impl Fn(T) -> T,
    grid: &[T],
    p: &OscillatorParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Vec<[T; 3]>> {
    p.validate()?;
    let (c, k, inv_m) = Sdof::coefficients(p);
    let sys = Sdof {
        two_zeta_omega: c,
        omega_sq: k,
        inv_mass: inv_m,
        force: &force,
    };
    let (states, _) = cfg.solver().integrate_on_grid(&sys, [T::zero(); 2], grid)?;
    Ok(states
        .iter()
        .zip(grid)
        .map(|(y, &t)| [y[0], y[1], force(t) * inv_m - c * y[1] - k * y[0]])
        .collect())
}

/// Harvester response to a sampled base acceleration, from rest.
pub fn simulate_harvester<T: Real>(
    base_accel: &TimeSeries<T>,
    p: &HarvesterParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<HarvesterResponse<T>> {
    check_input(base_accel, Units::MetersPerSecondSquared, "simulate_harvester")?;
    p.validate()?;
    let proto = Harvester::new(p);
    let (states, _) = integrate_sampled(cfg, base_accel.samples(), base_accel.sample_rate_hz(), |seg| {
        proto.with(move |t| seg.at(t))
    })?;
    let fs = base_accel.sample_rate_hz();
    let seed = base_accel.seed();
    Ok(HarvesterResponse {
        rel_displacement: TimeSeries::new(states.iter().map(|y| y[0]).collect(), fs, Units::Meter, seed)?,
        voltage: TimeSeries::new(states.iter().map(|y| y[2]).collect(), fs, Units::Volt, seed)?,
    })
}

/// Harvester response to a continuous base acceleration; `[z, z', V]` per grid point.
pub fn simulate_harvester_continuous<T: Real>(
    base_accel: impl Fn(T) -> T,
    grid: &[T],
    p: &HarvesterParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Vec<[T; 3]>> {
    p.validate()?;
    let sys = Harvester::new(p).with(&base_accel);
    let (states, _) = cfg.solver().integrate_on_grid(&sys, [T::zero(); 3], grid)?;
    Ok(states)
}

/// Force → host → harvester, both stages from rest.
pub fn simulate_chain<T: Real>(
    force: &TimeSeries<T>,
    host: &OscillatorParams<T>,
    harvester: &HarvesterParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<SimulationOutput<T>> {
    let host_out = simulate_sdof(force, host, cfg)?;
    let harvester_out = simulate_harvester(&host_out.acceleration, harvester, cfg)?;
    Ok(SimulationOutput {
        host: host_out,
        harvester: harvester_out,
    })
}

/// Voltage per unit base acceleration under harmonic excitation at `omega`:
///
/// `α(ω) = iωθμm_h / [(iωC_p + 1/R_l)(k_h − m_h ω² + iωc_h) + iωθ²]`
pub fn voltage_frf<T: Real>(omega: T, p: &HarvesterParams<T>) -> Complex<T> {
    let i = Complex::new(T::zero(), T::one());
    let m = p.equivalent_mass();
    let jw = i * omega;
    let electrical = jw * p.capacitance + T::one() / p.load_resistance;
    let mechanical = Complex::new(p.stiffness() - m * omega * omega, T::zero()) + jw * p.damping();
    let den = electrical * mechanical + jw * p.coupling * p.coupling;
    jw * p.coupling * p.correction_factor() * m / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn correction_factor_values() {
        assert_relative_eq!(correction_factor(0.0, 1.0).unwrap(), 0.08955 / 0.05718, max_relative = 1e-15);
        assert_relative_eq!(correction_factor(0.0, 1.0).unwrap(), 1.566_107_030_430_22, max_relative = 1e-12);
        let r: f64 = 0.03 / 0.01365;
        let direct = (r * r + 0.603 * r + 0.08955) / (r * r + 0.4637 * r + 0.05718);
        assert_relative_eq!(correction_factor(0.03, 0.01365).unwrap(), direct, max_relative = 1e-12);
        assert!((correction_factor(1e9f64, 1.0).unwrap() - 1.0).abs() < 1e-9);
        assert!((correction_factor(1.0, f64::MIN_POSITIVE).unwrap() - 1.0).abs() < 1e-15);
        assert!(correction_factor(0.03, 0.0).is_err());
        assert!(correction_factor(-0.1, 1.0).is_err());
    }

    #[test]
    fn equivalent_parameters() {
        let p = HarvesterParams::<f64>::default();
        assert_relative_eq!(p.equivalent_mass(), 0.03 + 33.0 / 140.0 * 0.01365, max_relative = 1e-15);
        let w = 2.0 * std::f64::consts::PI * 12.79;
        assert_relative_eq!(p.stiffness(), p.equivalent_mass() * w * w, max_relative = 1e-14);
        assert_relative_eq!(p.damping(), 2.0 * 0.04 * p.equivalent_mass() * w, max_relative = 1e-14);
    }

    #[test]
    fn frf_limits() {
        let p = HarvesterParams::<f64>::default();
        assert_eq!(voltage_frf(0.0, &p).norm(), 0.0);
        assert!(voltage_frf(1e7, &p).norm() < 1e-6);
        let peak = voltage_frf(p.omega(), &p).norm();
        assert!(peak > voltage_frf(0.5 * p.omega(), &p).norm());
        assert!(peak > voltage_frf(1.5 * p.omega(), &p).norm());
    }

    #[test]
    fn zero_forcing_stays_at_rest() {
        let f = TimeSeries::new(vec![0.0; 500], 25.0, Units::Newton, 0).unwrap();
        let out = simulate_chain(&f, &Default::default(), &Default::default(), &Default::default()).unwrap();
        assert!(out.host.displacement.samples().iter().all(|&x| x == 0.0));
        assert!(out.harvester.voltage.samples().iter().all(|&x| x == 0.0));
        assert_eq!(out.harvester.voltage.len(), 500);
    }

    #[test]
    fn step_force_settles_to_static_deflection() {
        let p = OscillatorParams::<f64>::default();
        let f = TimeSeries::new(vec![10.0; 25 * 60], 25.0, Units::Newton, 0).unwrap();
        let out = simulate_sdof(&f, &p, &IntegratorConfig::default()).unwrap();
        let x_end = *out.displacement.samples().last().unwrap();
        let x_static = 10.0 / (p.mass * p.omega() * p.omega());
        assert_relative_eq!(x_end, x_static, max_relative = 1e-5);
        assert!(out.acceleration.samples().last().unwrap().abs() < 1e-3);
    }

    #[test]
    fn wrong_units_are_rejected() {
        let f = TimeSeries::new(vec![0.0; 10], 25.0, Units::Volt, 0).unwrap();
        assert!(simulate_sdof(&f, &Default::default(), &Default::default()).is_err());
        assert!(simulate_harvester(&f, &Default::default(), &Default::default()).is_err());
    }

    #[test]
    fn coupling_sign_flips_voltage() {
        let a: Vec<f64> = (0..2500).map(|i| (i as f64 * 0.37).sin() * 5.0 + (i as f64 * 0.011).cos()).collect::<Vec<f64>>();
        let a = TimeSeries::new(a, 250.0, Units::MetersPerSecondSquared, 0).unwrap();
        let p = HarvesterParams::<f64>::default();
        let q = HarvesterParams { coupling: -p.coupling, ..p };
        let cfg = IntegratorConfig::default();
        let vp = simulate_harvester(&a, &p, &cfg).unwrap().voltage;
        let vq = simulate_harvester(&a, &q, &cfg).unwrap().voltage;
        let scale = vp.samples().iter().fold(0.0f64, |m, v: &f64| m.max(v.abs()));
        for (x, y) in vp.samples().iter().zip(vq.samples()) {
            assert!((x + y).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn hold_and_linear_differ_but_both_run() {
        let f: Vec<f64> = (0..500).map(|i| (i as f64 * 0.9).sin()).collect();
        let f = TimeSeries::new(f, 25.0, Units::Newton, 0).unwrap();
        let p = OscillatorParams::default();
        let lin = simulate_sdof(&f, &p, &IntegratorConfig::default()).unwrap();
        let hold_cfg = IntegratorConfig { forcing_interpolation: Interpolation::Hold, ..Default::default() };
        let hold = simulate_sdof(&f, &p, &hold_cfg).unwrap();
        assert_ne!(lin.displacement.samples(), hold.displacement.samples());
    }
}
