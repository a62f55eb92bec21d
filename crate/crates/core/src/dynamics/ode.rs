//! Dormand–Prince 5(4) explicit Runge–Kutta integrator with dense output.
//!
//! Seven stages with the first-same-as-last property, error control on the
//! embedded fourth-order solution (local extrapolation), and Hairer's
//! fourth-order continuous extension for sampling between steps.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Right-hand side of `y' = f(t, y)` on a fixed-size state.
pub trait OdeSystem<T, const D: usize> {
    fn rhs(&self, t: T, y: &[T; D]) -> [T; D];
}

impl<T, const D: usize, F> OdeSystem<T, D> for F
where
    F: Fn(T, &[T; D]) -> [T; D],
{
    fn rhs(&self, t: T, y: &[T; D]) -> [T; D] {
        self(t, y)
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense output.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DormandPrince<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Upper bound on the step size, seconds.
    pub max_step: T,
    pub max_steps: usize,
}

impl<T: Real> Default for DormandPrince<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-6),
            abs_tol: T::lit(1e-9),
            max_step: T::infinity(),
            max_steps: usize::MAX,
        }
    }
}

/// Step statistics for a completed integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[inline]
fn axpy<T: Real, const D: usize>(y: &[T; D], terms: &[(T, &[T; D])]) -> [T; D] {
    let mut out = *y;
    for (coef, k) in terms {
        for i in 0..D {
            out[i] += *coef * k[i];
        }
    }
    out
}

struct Step<T, const D: usize> {
    y_new: [T; D],
    k7: [T; D],
    err: T,
    cont: [[T; D]; 5],
}

impl<T: Real> DormandPrince<T> {
    pub fn validate(&self) -> Result<()> {
        if self.rel_tol > T::zero() && self.abs_tol > T::zero() && self.max_step > T::zero() {
            Ok(())
        } else {
            Err(Error::domain("integrator tolerances and max_step must be positive"))
        }
    }

    fn step<S: OdeSystem<T, D>, const D: usize>(
        &self,
        sys: &S,
        t: T,
        y: &[T; D],
        k1: &[T; D],
        h: T,
    ) -> Step<T, D> {
        let l = T::lit;
        let k2 = sys.rhs(t + l(C2) * h, &axpy(y, &[(h * l(A21), k1)]));
        let k3 = sys.rhs(t + l(C3) * h, &axpy(y, &[(h * l(A31), k1), (h * l(A32), &k2)]));
        let k4 = sys.rhs(
            t + l(C4) * h,
            &axpy(y, &[(h * l(A41), k1), (h * l(A42), &k2), (h * l(A43), &k3)]),
        );
        let k5 = sys.rhs(
            t + l(C5) * h,
            &axpy(
                y,
                &[(h * l(A51), k1), (h * l(A52), &k2), (h * l(A53), &k3), (h * l(A54), &k4)],
            ),
        );
        let k6 = sys.rhs(
            t + h,
            &axpy(
                y,
                &[
                    (h * l(A61), k1),
                    (h * l(A62), &k2),
                    (h * l(A63), &k3),
                    (h * l(A64), &k4),
                    (h * l(A65), &k5),
                ],
            ),
        );
        let y_new = axpy(
            y,
            &[
                (h * l(A71), k1),
                (h * l(A73), &k3),
                (h * l(A74), &k4),
                (h * l(A75), &k5),
                (h * l(A76), &k6),
            ],
        );
        let k7 = sys.rhs(t + h, &y_new);

        let mut acc = T::zero();
        for i in 0..D {
            let e = h
                * (l(E1) * k1[i] + l(E3) * k3[i] + l(E4) * k4[i] + l(E5) * k5[i] + l(E6) * k6[i]
                    + l(E7) * k7[i]);
            let scale = self.abs_tol + self.rel_tol * y[i].abs().max(y_new[i].abs());
            acc += (e / scale) * (e / scale);
        }
        let err = (acc / T::from_usize_lossy(D)).sqrt();

        let mut cont = [[T::zero(); D]; 5];
        for i in 0..D {
            let diff = y_new[i] - y[i];
            let bspl = h * k1[i] - diff;
            cont[0][i] = y[i];
            cont[1][i] = diff;
            cont[2][i] = bspl;
            cont[3][i] = diff - h * k7[i] - bspl;
            cont[4][i] = h
                * (l(D1) * k1[i] + l(D3) * k3[i] + l(D4) * k4[i] + l(D5) * k5[i] + l(D6) * k6[i]
                    + l(D7) * k7[i]);
        }
        Step { y_new, k7, err, cont }
    }

    fn initial_step<S: OdeSystem<T, D>, const D: usize>(
        &self,
        sys: &S,
        t: T,
        y: &[T; D],
        f0: &[T; D],
        span: T,
    ) -> T {
        let l = T::lit;
        let norm = |v: &[T; D]| {
            let s: T = (0..D)
                .map(|i| {
                    let sc = self.abs_tol + self.rel_tol * y[i].abs();
                    (v[i] / sc) * (v[i] / sc)
                })
                .sum();
            (s / T::from_usize_lossy(D)).sqrt()
        };
        let d0 = norm(y);
        let d1 = norm(f0);
        let mut h0 = if d0 < l(1e-5) || d1 < l(1e-5) { l(1e-6) } else { l(0.01) * d0 / d1 };
        h0 = h0.min(self.max_step).min(span);
        let y1 = axpy(y, &[(h0, f0)]);
        let f1 = sys.rhs(t + h0, &y1);
        let mut df = *f0;
        for i in 0..D {
            df[i] = f1[i] - f0[i];
        }
        let d2 = norm(&df) / h0;
        let dmax = d1.max(d2);
        let h1 = if dmax <= l(1e-15) {
            (h0 * l(1e-3)).max(l(1e-6))
        } else {
            (l(0.01) / dmax).powf(l(0.2))
        };
        (l(100.0) * h0).min(h1).min(self.max_step).min(span)
    }

    /// Advances `y` from `t0` to exactly `t1`. `h` carries the step-size
    /// proposal in and out so consecutive calls keep their rhythm.
    pub fn advance<S: OdeSystem<T, D>, const D: usize>(
        &self,
        sys: &S,
        t0: T,
        y0: [T; D],
        t1: T,
        h: &mut T,
        stats: &mut Stats,
    ) -> Result<[T; D]> {
        let k1 = sys.rhs(t0, &y0);
        stats.evaluations += 1;
        if !(*h > T::zero()) || !h.is_finite() {
            *h = self.initial_step(sys, t0, &y0, &k1, t1 - t0);
            stats.evaluations += 1;
        }
        let mut noop = |_: &Step<T, D>, _: T, _: T| {};
        self.drive(sys, t0, y0, k1, t1, h, stats, &mut noop)
            .map(|(y, _)| y)
    }

    /// Core adaptive loop from `t0` to `t1`. `on_accept` sees every accepted
    /// step together with its start time and length.
    #[allow(clippy::too_many_arguments)]
    fn drive<S, F, const D: usize>(
        &self,
        sys: &S,
        t0: T,
        y0: [T; D],
        k1_0: [T; D],
        t1: T,
        h: &mut T,
        stats: &mut Stats,
        on_accept: &mut F,
    ) -> Result<([T; D], [T; D])>
    where
        S: OdeSystem<T, D>,
        F: FnMut(&Step<T, D>, T, T),
    {
        let l = T::lit;
        let eps = T::epsilon();
        let mut t = t0;
        let mut y = y0;
        let mut k1 = k1_0;
        while t < t1 {
            let remaining = t1 - t;
            let mut h_try = h.min(self.max_step);
            let mut last = false;
            if h_try >= remaining * (T::one() - l(1e-10)) {
                h_try = remaining;
                last = true;
            }
            let min_step = l(16.0) * eps * t.abs().max(T::one());
            if h_try < min_step {
                return Err(Error::StepUnderflow {
                    t: t.to_f64_lossy(),
                    step: h_try.to_f64_lossy(),
                });
            }
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::TooManySteps {
                    t: t.to_f64_lossy(),
                    max_steps: self.max_steps,
                });
            }

            let step = self.step(sys, t, &y, &k1, h_try);
            stats.evaluations += 6;
            let err = step.err;
            if !err.is_finite() {
                stats.rejected += 1;
                *h = h_try * l(0.1);
                continue;
            }
            let factor = if err == T::zero() {
                l(5.0)
            } else {
                (l(0.9) * err.powf(l(-0.2))).max(l(0.2)).min(l(5.0))
            };
            if err <= T::one() {
                stats.accepted += 1;
                on_accept(&step, t, h_try);
                t = if last { t1 } else { t + h_try };
                y = step.y_new;
                k1 = step.k7;
                // A short final step to `t1` should not shrink the proposal
                // for whatever comes next.
                let proposed = h_try * factor;
                *h = if last { proposed.max(*h) } else { proposed };
            } else {
                stats.rejected += 1;
                *h = h_try * factor.min(T::one());
            }
        }
        Ok((y, k1))
    }

    /// Integrates from `grid[0]` and returns the state at every grid time,
    /// sampling between steps with the continuous extension.
    pub fn integrate_on_grid<S: OdeSystem<T, D>, const D: usize>(
        &self,
        sys: &S,
        y0: [T; D],
        grid: &[T],
    ) -> Result<(Vec<[T; D]>, Stats)> {
        self.validate()?;
        let mut out = Vec::with_capacity(grid.len());
        let mut stats = Stats::default();
        if grid.is_empty() {
            return Ok((out, stats));
        }
        out.push(y0);
        if grid.len() == 1 {
            return Ok((out, stats));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("output grid must be strictly increasing"));
        }
        let t0 = grid[0];
        let t_end = grid[grid.len() - 1];
        let k1 = sys.rhs(t0, &y0);
        stats.evaluations += 1;
        let mut h = self.initial_step(sys, t0, &y0, &k1, t_end - t0);
        stats.evaluations += 1;

        let mut next = 1;
        let mut dense = |step: &Step<T, D>, t: T, h: T| {
            let t_new = t + h;
            while next < grid.len() - 1 && grid[next] <= t_new {
                let theta = (grid[next] - t) / h;
                out.push(step.interpolate(theta));
                next += 1;
            }
        };
        let (y_end, _) = self.drive(sys, t0, y0, k1, t_end, &mut h, &mut stats, &mut dense)?;
        out.push(y_end);
        Ok((out, stats))
    }
}

impl<T: Real, const D: usize> Step<T, D> {
    fn interpolate(&self, theta: T) -> [T; D] {
        let one_m = T::one() - theta;
        let c = &self.cont;
        let mut y = [T::zero(); D];
        for i in 0..D {
            y[i] = c[0][i] + theta * (c[1][i] + one_m * (c[2][i] + theta * (c[3][i] + one_m * c[4][i])));
        }
        y
    }
}
