//! Goodness-of-fit plot data: density histogram, probability plot, QQ plot.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::gpd::{gpd_cdf, gpd_pdf, gpd_quantile};
use super::GpdFit;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPoint<T> {
    /// Bin centre, as an exceedance above the threshold.
    pub y: T,
    pub histogram: T,
    pub model: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics<T> {
    pub density: Vec<DensityPoint<T>>,
    pub bin_width: T,
    /// (empirical plotting position, model CDF) at each sorted exceedance.
    pub probability: Vec<(T, T)>,
    /// (empirical quantile, model quantile).
    pub qq: Vec<(T, T)>,
}

pub fn diagnostics<T: Real>(fit: &GpdFit<T>, exceedances: &[T]) -> Result<Diagnostics<T>> {
    fit.validate()?;
    if exceedances.len() < 2 {
        return Err(Error::domain("diagnostics need at least 2 exceedances"));
    }
    let mut ys = exceedances.to_vec();
    ys.sort_by(|a, b| a.partial_cmp(b).expect("finite exceedances"));
    let n = ys.len();
    let nf = T::from_usize_lossy(n);
    let (xi, sigma) = (fit.xi, fit.sigma);

    let bins = ((2.0 * (n as f64).cbrt()).ceil() as usize).clamp(10, 100);
    let top = ys[n - 1];
    let width = top / T::from_usize_lossy(bins);
    let mut counts = vec![0usize; bins];
    for &y in &ys {
        let k = (y / width).to_usize().unwrap_or(bins - 1).min(bins - 1);
        counts[k] += 1;
    }
    let density = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let y = (T::from_usize_lossy(k) + T::lit(0.5)) * width;
            Ok(DensityPoint {
                y,
                histogram: T::from_usize_lossy(c) / (nf * width),
                model: gpd_pdf(y, xi, sigma)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut probability = Vec::with_capacity(n);
    let mut qq = Vec::with_capacity(n);
    for (i, &y) in ys.iter().enumerate() {
        let p = T::from_usize_lossy(i + 1) / (nf + T::one());
        probability.push((p, gpd_cdf(y.max(T::zero()), xi, sigma)?));
        qq.push((y, gpd_quantile(p, xi, sigma)?));
    }
    Ok(Diagnostics {
        density,
        bin_width: width,
        probability,
        qq,
    })
}

/// Writes `<prefix>_density.csv`, `<prefix>_probability.csv` and
/// `<prefix>_qq.csv` into `dir`, returning the paths.
pub fn write_diagnostics<T: Real>(dir: &Path, prefix: &str, d: &Diagnostics<T>) -> Result<Vec<PathBuf>> {
    let f = |x: T| x.to_f64_lossy().to_string();
    let tables: [(&str, [&str; 3], Vec<[String; 3]>); 3] = [
        (
            "density",
            ["y", "histogram", "model_pdf"],
            d.density.iter().map(|p| [f(p.y), f(p.histogram), f(p.model)]).collect(),
        ),
        (
            "probability",
            ["i", "empirical", "model"],
            d.probability
                .iter()
                .enumerate()
                .map(|(i, (e, m))| [(i + 1).to_string(), f(*e), f(*m)])
                .collect(),
        ),
        (
            "qq",
            ["i", "empirical", "model"],
            d.qq
                .iter()
                .enumerate()
                .map(|(i, (e, m))| [(i + 1).to_string(), f(*e), f(*m)])
                .collect(),
        ),
    ];
    let mut paths = Vec::new();
    for (name, header, rows) in tables {
        let path = dir.join(format!("{prefix}_{name}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::super::{fit_gpd_mle, Threshold};
    use super::*;
    use crate::series::Units;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn synthetic(n: usize) -> (GpdFit<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ys: Vec<f64> = (0..n)
            .map(|_| gpd_quantile(rng.gen::<f64>(), -0.15, 0.8).unwrap())
            .filter(|y| *y > 0.0)
            .collect();
        let est = fit_gpd_mle(&ys).unwrap();
        let th = Threshold {
            threshold: 3.0,
            exceed_rate: 0.05,
            n_exceed: ys.len(),
            n_total: ys.len() * 20,
        };
        (GpdFit::from_estimate(&th, &est, Units::Volt), ys)
    }

    #[test]
    fn probability_plot_hugs_diagonal() {
        let (fit, ys) = synthetic(4000);
        let d = diagnostics(&fit, &ys).unwrap();
        let band = 3.0 / (ys.len() as f64).sqrt();
        assert!(d.probability.iter().all(|(e, m)| (e - m).abs() < band));
    }

    #[test]
    fn model_density_integrates_to_one() {
        let (fit, ys) = synthetic(4000);
        let d = diagnostics(&fit, &ys).unwrap();
        let hist: f64 = d.density.iter().map(|p| p.histogram).sum::<f64>() * d.bin_width;
        assert!((hist - 1.0).abs() < 1e-12);
        // Midpoint rule over the full support.
        let top = -fit.sigma / fit.xi;
        let m = 200_000;
        let h = top / m as f64;
        let area: f64 = (0..m)
            .map(|k| gpd_pdf((k as f64 + 0.5) * h, fit.xi, fit.sigma).unwrap())
            .sum::<f64>()
            * h;
        assert!((area - 1.0).abs() < 1e-3, "{area}");
    }

    #[test]
    fn writes_three_files() {
        let (fit, ys) = synthetic(500);
        let d = diagnostics(&fit, &ys).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = write_diagnostics(dir.path(), "volt", &d).unwrap();
        assert_eq!(paths.len(), 3);
        let qq = std::fs::read_to_string(&paths[2]).unwrap();
        assert!(qq.starts_with("i,empirical,model\n"));
        assert_eq!(qq.lines().count(), ys.len() + 1);
    }
}
