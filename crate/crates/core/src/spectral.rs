//! Seasonal Fourier regression and the Lomb-Scargle periodogram.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::series::ObservedSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierFit {
    pub m: usize,
    /// `(a_j, b_j)` for `j = 1..=m`.
    pub coefficients: Vec<(f64, f64)>,
    /// Residuals at observed indices, on the input's missing pattern.
    pub residual_series: ObservedSeries,
    pub mse: f64,
    pub n_obs: usize,
}

fn check_times(series: &ObservedSeries, times: &[f64]) -> Result<()> {
    if times.len() != series.len() {
        return invalid(format!(
            "time axis has {} entries for a series of length {}",
            times.len(),
            series.len()
        ));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return invalid("time axis contains non-finite values");
    }
    Ok(())
}

/// Least squares fit of `x_t = Σ_j a_j cos(2jπt) + b_j sin(2jπt) + resid`
/// over the observed points, without intercept. Times are in years.
pub fn fourier_fit(series: &ObservedSeries, time_in_years: &[f64], m: usize) -> Result<FourierFit> {
    check_times(series, time_in_years)?;
    if m == 0 {
        return invalid("number of harmonics must be at least 1");
    }
    let obs: Vec<usize> = (0..series.len()).filter(|&i| series.is_observed(i)).collect();
    if obs.len() < 2 * m {
        return invalid(format!("{} observations cannot identify {} coefficients", obs.len(), 2 * m));
    }
    let y = series.values();
    let design = DMatrix::from_fn(obs.len(), 2 * m, |r, c| {
        let j = (c / 2 + 1) as f64;
        let arg = 2.0 * PI * j * time_in_years[obs[r]];
        if c % 2 == 0 { arg.cos() } else { arg.sin() }
    });
    let rhs = DVector::from_iterator(obs.len(), obs.iter().map(|&i| y[i]));
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let tol = (obs.len().max(2 * m) as f64) * f64::EPSILON * smax;
    if !(smin > tol) {
        return Err(Error::FitError(format!("rank-deficient design for M = {m}")));
    }
    let beta = svd.solve(&rhs, tol).map_err(|e| Error::FitError(e.to_string()))?;
    let fitted = &design * &beta;
    let mut resid = series.values().to_vec();
    let mut rss = 0.0;
    for (r, &i) in obs.iter().enumerate() {
        let e = y[i] - fitted[r];
        resid[i] = e;
        rss += e * e;
    }
    for (r, v) in resid.iter_mut().enumerate() {
        if !series.is_observed(r) {
            *v = 0.0;
        }
    }
    Ok(FourierFit {
        m,
        coefficients: (0..m).map(|j| (beta[2 * j], beta[2 * j + 1])).collect(),
        residual_series: series.with_values(resid)?,
        mse: rss / obs.len() as f64,
        n_obs: obs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoCriteria {
    pub aic: f64,
    pub bic: f64,
    pub mse: f64,
}

/// Gaussian log-likelihood criteria counting `2M + 1` parameters.
pub fn info_criteria(fit: &FourierFit) -> Result<InfoCriteria> {
    if !(fit.mse > 0.0 && fit.mse.is_finite()) {
        return Err(Error::UndefinedCriteria);
    }
    let n = fit.n_obs as f64;
    let k = (2 * fit.m + 1) as f64;
    let fit_term = n * (2.0 * PI * fit.mse).ln() + n;
    Ok(InfoCriteria {
        aic: fit_term + 2.0 * k,
        bic: fit_term + n.ln() * k,
        mse: fit.mse,
    })
}

/// Fits and criteria for `M = 1..=max_m`.
pub fn fourier_table(
    series: &ObservedSeries,
    time_in_years: &[f64],
    max_m: usize,
) -> Result<Vec<(FourierFit, InfoCriteria)>> {
    (1..=max_m)
        .map(|m| {
            let fit = fourier_fit(series, time_in_years, m)?;
            let ic = info_criteria(&fit)?;
            Ok((fit, ic))
        })
        .collect()
}

/// `M` minimizing `key` over a table; ties keep the smaller `M`.
pub fn argmin_m(table: &[(FourierFit, InfoCriteria)], key: impl Fn(&InfoCriteria) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (fit, ic) in table {
        let v = key(ic);
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((fit.m, v));
        }
    }
    best.map(|(m, _)| m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Periodogram {
    /// Cycles per year.
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
}

impl Periodogram {
    pub fn peak_frequency(&self) -> Option<f64> {
        self.power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| self.frequencies[i])
    }
}

/// Classical Lomb-Scargle periodogram of the observed points,
///
/// ```text
/// P(ω) = [ (Σ y_c cos ω(t-s))² / Σ cos² ω(t-s) + (Σ y_c sin ω(t-s))² / Σ sin² ω(t-s) ] / (2 σ̂²)
/// tan(2ωs) = Σ sin 2ωt / Σ cos 2ωt
/// ```
///
/// with `ω = 2π f`, `y_c` the mean-centered values and `σ̂²` their sample
/// variance (denominator `N - 1`). A constant series has zero power.
pub fn lomb_scargle(series: &ObservedSeries, time_in_years: &[f64], frequencies: &[f64]) -> Result<Periodogram> {
    check_times(series, time_in_years)?;
    if let Some(f) = frequencies.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
        return invalid(format!("frequency {f} must be positive"));
    }
    let obs: Vec<usize> = (0..series.len()).filter(|&i| series.is_observed(i)).collect();
    if obs.len() < 3 {
        return invalid("at least 3 observed points required");
    }
    let t: Vec<f64> = obs.iter().map(|&i| time_in_years[i]).collect();
    if t.iter().all(|&x| x == t[0]) {
        return invalid("all observation times are equal");
    }
    let y = series.values();
    let nobs = obs.len() as f64;
    let mean = obs.iter().map(|&i| y[i]).sum::<f64>() / nobs;
    let yc: Vec<f64> = obs.iter().map(|&i| y[i] - mean).collect();
    let var = yc.iter().map(|v| v * v).sum::<f64>() / (nobs - 1.0);
    let scale = var.abs().max(mean.abs().powi(2)).max(f64::MIN_POSITIVE);
    if var <= 1e-24 * scale {
        return Ok(Periodogram {
            frequencies: frequencies.to_vec(),
            power: vec![0.0; frequencies.len()],
        });
    }
    let power = frequencies
        .par_iter()
        .map(|&f| {
            let w = 2.0 * PI * f;
            let (s2, c2) = t.iter().fold((0.0, 0.0), |(s, c), &x| {
                let a = 2.0 * w * x;
                (s + a.sin(), c + a.cos())
            });
            let shift = s2.atan2(c2) / (2.0 * w);
            let (mut yc_cos, mut yc_sin, mut cc, mut ss) = (0.0, 0.0, 0.0, 0.0);
            for (&x, &v) in t.iter().zip(&yc) {
                let a = w * (x - shift);
                let (s, c) = a.sin_cos();
                yc_cos += v * c;
                yc_sin += v * s;
                cc += c * c;
                ss += s * s;
            }
            let tiny = 1e-12 * nobs;
            let mut p = 0.0;
            if cc > tiny {
                p += yc_cos * yc_cos / cc;
            }
            if ss > tiny {
                p += yc_sin * yc_sin / ss;
            }
            p / (2.0 * var)
        })
        .collect();
    Ok(Periodogram {
        frequencies: frequencies.to_vec(),
        power,
    })
}

/// `start, start + step, …` up to `stop` inclusive (within half a step).
pub fn frequency_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop >= start && step > 0.0) {
        return invalid("frequency grid needs 0 < start <= stop and step > 0");
    }
    let count = ((stop - start) / step + 0.5).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn irregular_times(n: usize) -> Vec<f64> {
        // deterministic irregular spacing over ~10 years
        let mut t = 0.0;
        (0..n)
            .map(|i| {
                t += 0.01 + 0.03 * (((i * 7919) % 97) as f64 / 97.0);
                t
            })
            .collect()
    }

    #[test]
    fn exact_cosine_is_recovered() {
        let times = irregular_times(500);
        let y: Vec<f64> = times.iter().map(|&t| (2.0 * PI * t).cos()).collect();
        let s = ObservedSeries::complete(y).unwrap();
        let fit = fourier_fit(&s, &times, 1).unwrap();
        assert!((fit.coefficients[0].0 - 1.0).abs() < 1e-10);
        assert!(fit.coefficients[0].1.abs() < 1e-10);
        assert!(fit.mse < 1e-20);
    }

    #[test]
    fn residuals_are_orthogonal() {
        let times = irregular_times(300);
        let y: Vec<f64> = times
            .iter()
            .enumerate()
            .map(|(i, &t)| 2.0 * (2.0 * PI * t).sin() + ((i * 31) % 17) as f64 / 17.0)
            .collect();
        let observed: Vec<bool> = (0..300).map(|i| i % 3 != 0).collect();
        let s = ObservedSeries::new(y, observed).unwrap();
        let fit = fourier_fit(&s, &times, 3).unwrap();
        let r = fit.residual_series.values();
        for j in 1..=3 {
            let a = 2.0 * PI * j as f64;
            let (mut ic, mut is) = (0.0, 0.0);
            for i in (0..300).filter(|&i| s.is_observed(i)) {
                ic += r[i] * (a * times[i]).cos();
                is += r[i] * (a * times[i]).sin();
            }
            assert!(ic.abs() < 1e-8 * 300.0 && is.abs() < 1e-8 * 300.0);
        }
        assert_eq!(fit.residual_series.observed(), s.observed());
    }

    #[test]
    fn fourier_guards() {
        let times = vec![0.0, 1.0, 2.0, 3.0];
        let s = ObservedSeries::complete(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        // integer years make every sine column vanish
        assert!(matches!(fourier_fit(&s, &times, 1), Err(Error::FitError(_))));
        assert!(fourier_fit(&s, &times, 0).is_err());
        assert!(fourier_fit(&s, &times, 3).is_err());
        assert!(fourier_fit(&s, &times[..3], 1).is_err());
    }

    #[test]
    fn criteria_penalties() {
        let s = ObservedSeries::complete(vec![0.0; 10]).unwrap();
        let mk = |m| FourierFit {
            m,
            coefficients: vec![(0.0, 0.0); m],
            residual_series: s.clone(),
            mse: 0.7,
            n_obs: 100,
        };
        let (a, b) = (info_criteria(&mk(2)).unwrap(), info_criteria(&mk(3)).unwrap());
        assert!(b.aic > a.aic && b.bic > a.bic);
        assert!(b.bic - a.bic > b.aic - a.aic);
        let f0 = FourierFit { mse: 0.0, ..mk(1) };
        assert_eq!(info_criteria(&f0), Err(Error::UndefinedCriteria));
    }

    #[test]
    fn periodogram_guards_and_constant() {
        let times = irregular_times(50);
        let s = ObservedSeries::complete(vec![3.0; 50]).unwrap();
        let p = lomb_scargle(&s, &times, &[0.5, 1.0, 2.0]).unwrap();
        assert!(p.power.iter().all(|&x| x.abs() < 1e-12));
        assert!(lomb_scargle(&s, &vec![1.0; 50], &[1.0]).is_err());
        assert!(lomb_scargle(&s, &times, &[0.0]).is_err());
        let tiny = ObservedSeries::complete(vec![1.0, 2.0]).unwrap();
        assert!(lomb_scargle(&tiny, &[0.0, 1.0], &[1.0]).is_err());
    }

    #[test]
    fn frequency_grid_endpoints() {
        let g = frequency_grid(0.01, 5.0, 0.01).unwrap();
        assert_eq!(g.len(), 500);
        assert!((g[99] - 1.0).abs() < 1e-12);
    }
}
