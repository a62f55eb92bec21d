//! Nelder–Mead simplex minimiser.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions<T> {
    pub max_iterations: usize,
    /// Largest vertex offset from the best vertex, per coordinate.
    pub x_tol: T,
    /// Objective spread across the simplex.
    pub f_tol: T,
}

impl<T: Real> Default for SimplexOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            x_tol: T::epsilon().sqrt() * T::lit(0.1),
            f_tol: T::epsilon() * T::lit(1e4),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOutcome<T, const N: usize> {
    pub x: [T; N],
    pub f: T,
    pub iterations: usize,
    pub converged: bool,
    /// Objective spread at termination.
    pub spread: T,
}

/// Minimises `f` from `x0`, building the initial simplex by offsetting each
/// coordinate by `step`. NaN objective values count as +inf.
pub fn nelder_mead<T: Real, const N: usize>(
    f: impl Fn(&[T; N]) -> T,
    x0: [T; N],
    step: [T; N],
    opts: SimplexOptions<T>,
) -> SimplexOutcome<T, N> {
    let eval = |x: &[T; N]| {
        let v = f(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    };
    let half = T::lit(0.5);
    let two = T::lit(2.0);

    let mut pts: Vec<([T; N], T)> = Vec::with_capacity(N + 1);
    pts.push((x0, eval(&x0)));
    for i in 0..N {
        let mut x = x0;
        x[i] += step[i];
        pts.push((x, eval(&x)));
    }

    let mut iterations = 0;
    loop {
        pts.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("no NaN"));
        let spread = pts[N].1 - pts[0].1;
        let diameter = pts[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&pts[0].0).map(|(a, b)| (*a - *b).abs()))
            .fold(T::zero(), T::max);
        let converged = pts[0].1.is_finite() && spread <= opts.f_tol && diameter <= opts.x_tol;
        if converged || iterations >= opts.max_iterations {
            return SimplexOutcome {
                x: pts[0].0,
                f: pts[0].1,
                iterations,
                converged,
                spread,
            };
        }
        iterations += 1;

        let mut centroid = [T::zero(); N];
        for (x, _) in &pts[..N] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += *v;
            }
        }
        let nf = T::from_usize_lossy(N);
        centroid.iter_mut().for_each(|c| *c /= nf);
        let worst = pts[N];
        // c + t (w - c)
        let along = |t: T| {
            let mut x = centroid;
            for (xi, w) in x.iter_mut().zip(&worst.0) {
                *xi += t * (*w - *xi);
            }
            x
        };

        let xr = along(-T::one());
        let fr = eval(&xr);
        if fr < pts[0].1 {
            let xe = along(-two);
            let fe = eval(&xe);
            pts[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < pts[N - 1].1 {
            pts[N] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let x = along(-half);
            (x, eval(&x))
        } else {
            let x = along(half);
            (x, eval(&x))
        };
        if fc < fr.min(worst.1) {
            pts[N] = (xc, fc);
            continue;
        }
        let best = pts[0].0;
        for (x, fx) in pts[1..].iter_mut() {
            for (v, b) in x.iter_mut().zip(&best) {
                *v = *b + half * (*v - *b);
            }
            *fx = eval(x);
        }
    }
}
