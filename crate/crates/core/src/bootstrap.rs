//! Wild bootstrap multipliers and the replicate loop.
//!
//! One replicate perturbs the pilot residuals with a multiplier sequence,
//! rebuilds the series on the original missing pattern, re-estimates the
//! trend with the estimation bandwidth and records the estimate centered at
//! the pilot trend.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimator::{residuals, KernelWindow, Residuals};
use crate::kernel::KernelSpec;
use crate::rng::substream;
use crate::series::{Bandwidth, EvalGrid, ObservedSeries, TrendCurve};

pub const DEFAULT_REPLICATIONS: usize = 999;
/// Constant `C` of the default oversmoothing bandwidth `C h^{5/9}`.
pub const DEFAULT_OVERSMOOTHING: f64 = 2.0;

/// `γ = θ^{1/ℓ}`.
pub fn gamma_from_ell(theta: f64, ell: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return invalid(format!("theta {theta} must lie in (0, 1)"));
    }
    if !(ell > 0.0 && ell.is_finite()) {
        return invalid(format!("block length {ell} must be positive"));
    }
    Ok((theta.ln() / ell).exp())
}

/// Inverse of [`gamma_from_ell`]: `ℓ = ln θ / ln γ`.
pub fn ell_from_gamma(theta: f64, gamma: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return invalid(format!("theta {theta} must lie in (0, 1)"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return invalid(format!("gamma {gamma} must lie in (0, 1)"));
    }
    Ok(theta.ln() / gamma.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AwbTuning {
    Gamma(f64),
    BlockLength { theta: f64, ell: f64 },
}

impl AwbTuning {
    pub fn gamma(&self) -> Result<f64> {
        match *self {
            AwbTuning::Gamma(g) if (0.0..1.0).contains(&g) => Ok(g),
            AwbTuning::Gamma(g) => invalid(format!("gamma {g} must lie in [0, 1)")),
            AwbTuning::BlockLength { theta, ell } => gamma_from_ell(theta, ell),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Autoregressive wild bootstrap.
    Awb(AwbTuning),
    /// Dependent wild bootstrap with Bartlett covariance and block length `ell`.
    Dwb { ell: f64 },
    /// Plain wild bootstrap with iid multipliers.
    Wb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub method: Method,
    pub replications: usize,
    pub h: Bandwidth,
    pub h_tilde: Bandwidth,
    pub seed: u64,
}

impl BootstrapConfig {
    /// Defaults: 999 replications, `h̃ = 2 h^{5/9}`, seed 0.
    pub fn new(method: Method, h: Bandwidth) -> Result<Self> {
        Ok(Self {
            method,
            replications: DEFAULT_REPLICATIONS,
            h,
            h_tilde: h.oversmoothed(DEFAULT_OVERSMOOTHING)?,
            seed: 0,
        })
    }

    pub fn with_replications(mut self, b: usize) -> Self {
        self.replications = b;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_h_tilde(mut self, h_tilde: Bandwidth) -> Self {
        self.h_tilde = h_tilde;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::InvalidConfig(format!(
                "at least 2 bootstrap replications required, got {}",
                self.replications
            )));
        }
        if self.h >= self.h_tilde {
            return Err(Error::InvalidConfig(format!(
                "pilot bandwidth {} must exceed the estimation bandwidth {}",
                self.h_tilde.get(),
                self.h.get()
            )));
        }
        MultiplierGenerator::prepare(self.method, 1).map(|_| ())
    }
}

/// AR(1) multipliers: `ξ_1 ~ N(0,1)`, `ξ_t = γ ξ_{t-1} + ν_t`, `ν_t ~ N(0, 1-γ²)`.
pub fn awb_multipliers<R: Rng + ?Sized>(n: usize, gamma: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&gamma) {
        return invalid(format!("gamma {gamma} must lie in [0, 1)"));
    }
    Ok(ar1_draw(n, gamma, rng))
}

fn ar1_draw<R: Rng + ?Sized>(n: usize, gamma: f64, rng: &mut R) -> Vec<f64> {
    let sd = (1.0 - gamma * gamma).sqrt();
    let mut xi = Vec::with_capacity(n);
    let mut prev = 0.0;
    for t in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        prev = if t == 0 { z } else { gamma * prev + sd * z };
        xi.push(prev);
    }
    xi
}

/// Bartlett covariance `max(0, 1 - |lag| / ℓ)` of the dependent multipliers.
pub fn bartlett(lag: usize, ell: f64) -> f64 {
    (1.0 - lag as f64 / ell).max(0.0)
}

/// Lower-triangular square root of the `n × n` dependent-multiplier covariance.
#[derive(Debug, Clone, PartialEq)]
pub enum DwbFactor {
    /// Banded Cholesky factor: `rows[i][k]` holds `L[i][i - bandwidth + k]`.
    Banded { n: usize, bandwidth: usize, rows: Vec<Vec<f64>> },
    /// Dense factor `V Λ₊^{1/2}` after eigenvalue clipping, row-major.
    Dense { n: usize, factor: Vec<f64> },
}

impl DwbFactor {
    pub fn new(n: usize, ell: f64) -> Result<Self> {
        if !(ell >= 1.0 && ell.is_finite()) {
            return invalid(format!("block length {ell} must be at least 1"));
        }
        // lags with non-zero covariance: 0 ..= ceil(ell) - 1
        let p = (ell.ceil() as usize).saturating_sub(1).min(n.saturating_sub(1));
        match banded_cholesky(n, p, |lag| bartlett(lag, ell)) {
            Some(rows) => Ok(DwbFactor::Banded { n, bandwidth: p, rows }),
            None => {
                let cov: Vec<f64> = (0..n * n)
                    .map(|k| bartlett((k / n).abs_diff(k % n), ell))
                    .collect();
                Ok(DwbFactor::Dense {
                    n,
                    factor: clipped_psd_factor(n, &cov)?,
                })
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            DwbFactor::Banded { n, .. } | DwbFactor::Dense { n, .. } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entry `(i, j)` of the covariance `L Lᵀ` implied by the factor.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        match self {
            DwbFactor::Banded { bandwidth, rows, .. } => {
                let p = *bandwidth;
                if i.abs_diff(j) > p {
                    return 0.0;
                }
                let lo = i.max(j).saturating_sub(p);
                (lo..=i.min(j))
                    .map(|k| rows[i][k + p - i] * rows[j][k + p - j])
                    .sum()
            }
            DwbFactor::Dense { n, factor } => (0..*n).map(|k| factor[i * n + k] * factor[j * n + k]).sum(),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.len();
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        match self {
            DwbFactor::Banded { bandwidth, rows, .. } => {
                let p = *bandwidth;
                (0..n)
                    .map(|i| {
                        let lo = i.saturating_sub(p);
                        (lo..=i).map(|k| rows[i][k + p - i] * z[k]).sum()
                    })
                    .collect()
            }
            DwbFactor::Dense { factor, .. } => (0..n)
                .map(|i| (0..n).map(|k| factor[i * n + k] * z[k]).sum())
                .collect(),
        }
    }
}

/// Cholesky factor of a banded symmetric Toeplitz matrix with autocovariance
/// `acv(lag)` for `lag <= p` and zero beyond. `None` if not positive definite.
fn banded_cholesky(n: usize, p: usize, acv: impl Fn(usize) -> f64) -> Option<Vec<Vec<f64>>> {
    let mut rows = vec![vec![0.0; p + 1]; n];
    let at = |rows: &Vec<Vec<f64>>, i: usize, k: usize| rows[i][k + p - i];
    for i in 0..n {
        let lo = i.saturating_sub(p);
        for j in lo..=i {
            let klo = i.saturating_sub(p).max(j.saturating_sub(p));
            let mut s = acv(i - j);
            for k in klo..j {
                s -= at(&rows, i, k) * at(&rows, j, k);
            }
            if i == j {
                if !(s > 1e-12) {
                    return None;
                }
                rows[i][p] = s.sqrt();
            } else {
                rows[i][j + p - i] = s / at(&rows, j, j);
            }
        }
    }
    Some(rows)
}

/// Square-root factor of a symmetric matrix after clipping negative
/// eigenvalues at zero.
pub(crate) fn clipped_psd_factor(n: usize, cov: &[f64]) -> Result<Vec<f64>> {
    let m = nalgebra::DMatrix::from_row_slice(n, n, cov);
    let sym = (&m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut f = eig.eigenvectors.clone();
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        f.column_mut(k).scale_mut(s);
    }
    if f.iter().any(|v| !v.is_finite()) || eig.eigenvalues.iter().all(|&l| l <= 0.0) {
        return Err(Error::Internal("covariance repair produced no usable factor".into()));
    }
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for k in 0..n {
            out.push(f[(i, k)]);
        }
    }
    Ok(out)
}

/// Dependent multipliers with Bartlett covariance of block length `ell`.
pub fn dwb_multipliers<R: Rng + ?Sized>(n: usize, ell: f64, rng: &mut R) -> Result<Vec<f64>> {
    Ok(DwbFactor::new(n, ell)?.draw(rng))
}

/// Multiplier source prepared once per series length.
#[derive(Debug, Clone)]
pub enum MultiplierGenerator {
    Iid,
    Autoregressive(f64),
    Dependent(DwbFactor),
}

impl MultiplierGenerator {
    pub fn prepare(method: Method, n: usize) -> Result<Self> {
        Ok(match method {
            Method::Wb => MultiplierGenerator::Iid,
            Method::Awb(t) => MultiplierGenerator::Autoregressive(t.gamma()?),
            Method::Dwb { ell } => MultiplierGenerator::Dependent(DwbFactor::new(n, ell)?),
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match self {
            MultiplierGenerator::Iid => ar1_draw(n, 0.0, rng),
            MultiplierGenerator::Autoregressive(g) => ar1_draw(n, *g, rng),
            MultiplierGenerator::Dependent(f) => {
                debug_assert_eq!(f.len(), n);
                f.draw(rng)
            }
        }
    }
}

fn check_lengths(n: usize, residuals: &[f64], pilot: &[f64], xi: &[f64]) -> Result<()> {
    if residuals.len() != n || pilot.len() != n || xi.len() != n {
        return invalid(format!(
            "length mismatch: series {n}, residuals {}, pilot {}, multipliers {}",
            residuals.len(),
            pilot.len(),
            xi.len()
        ));
    }
    Ok(())
}

fn bootstrap_values(observed: &[bool], residuals: &[f64], pilot: &[f64], xi: &[f64]) -> Vec<f64> {
    (0..observed.len())
        .map(|t| if observed[t] { pilot[t] + xi[t] * residuals[t] } else { 0.0 })
        .collect()
}

/// `y*_t = m̃(t/n) + ξ_t ẑ_t` at observed `t`; the missing pattern is copied.
pub fn bootstrap_sample(
    series: &ObservedSeries,
    residuals: &[f64],
    m_tilde_at_t: &[f64],
    xi: &[f64],
) -> Result<ObservedSeries> {
    check_lengths(series.len(), residuals, m_tilde_at_t, xi)?;
    series.with_values(bootstrap_values(series.observed(), residuals, m_tilde_at_t, xi))
}

/// `B × |grid|` matrix of `m̂*_b(τ) - m̃(τ)`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenteredDraws {
    pub grid: EvalGrid,
    pub replications: usize,
    pub data: Vec<f64>,
    pub valid: Vec<bool>,
}

impl CenteredDraws {
    pub fn new(grid: EvalGrid, replications: usize, data: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        if data.len() != replications * grid.len() || valid.len() != grid.len() {
            return invalid("draw matrix dimensions do not match the grid");
        }
        if replications == 0 {
            return invalid("draw matrix has no rows");
        }
        Ok(Self {
            grid,
            replications,
            data,
            valid,
        })
    }

    pub fn width(&self) -> usize {
        self.grid.len()
    }

    #[inline]
    pub fn get(&self, b: usize, j: usize) -> f64 {
        self.data[b * self.width() + j]
    }

    pub fn row(&self, b: usize) -> &[f64] {
        let w = self.width();
        &self.data[b * w..(b + 1) * w]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.replications).map(|b| self.get(b, j)).collect()
    }

    pub fn sorted_column(&self, j: usize) -> Vec<f64> {
        let mut c = self.column(j);
        c.sort_by(f64::total_cmp);
        c
    }
}

#[derive(Debug, Clone)]
pub struct BootstrapOutput {
    pub m_hat: TrendCurve,
    pub m_tilde: TrendCurve,
    pub draws: CenteredDraws,
    pub residuals: Residuals,
}

/// Full bootstrap: pilot fit, `B` replicates, centered draws on `grid`.
/// Replicate `b` draws its multipliers from substream `b` of `config.seed`.
pub fn run_bootstrap(series: &ObservedSeries, config: &BootstrapConfig, grid: &EvalGrid) -> Result<BootstrapOutput> {
    config.validate()?;
    if grid.is_empty() {
        return invalid("evaluation grid is empty");
    }
    let n = series.len();
    let kernel = KernelSpec::EPANECHNIKOV;
    let resid = residuals(series, config.h_tilde)?;

    let est_windows: Vec<KernelWindow> = grid
        .points()
        .iter()
        .map(|&tau| KernelWindow::new(series, config.h, tau, kernel))
        .collect();
    let pilot_at_grid: Vec<Option<f64>> = grid
        .points()
        .iter()
        .map(|&tau| KernelWindow::new(series, config.h_tilde, tau, kernel).mean_if_sufficient(series.values()))
        .collect();
    let m_hat_vals: Vec<Option<f64>> = est_windows
        .iter()
        .map(|w| w.mean_if_sufficient(series.values()))
        .collect();
    let valid: Vec<bool> = m_hat_vals
        .iter()
        .zip(&pilot_at_grid)
        .map(|(a, b)| a.is_some() && b.is_some())
        .collect();
    if !valid.iter().any(|&v| v) {
        return Err(Error::NoValidPoint);
    }

    let generator = MultiplierGenerator::prepare(config.method, n)?;
    let observed = series.observed();
    let width = grid.len();
    let rows: Vec<Vec<f64>> = (0..config.replications)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(config.seed, b as u64);
            let xi = generator.draw(n, &mut rng);
            let ystar = bootstrap_values(observed, &resid.values, &resid.pilot, &xi);
            (0..width)
                .map(|j| match (valid[j], pilot_at_grid[j]) {
                    (true, Some(centre)) => est_windows[j].weighted_mean(&ystar) - centre,
                    _ => f64::NAN,
                })
                .collect()
        })
        .collect();
    let data = rows.into_iter().flatten().collect();

    Ok(BootstrapOutput {
        m_hat: TrendCurve::from_options(grid.clone(), m_hat_vals),
        m_tilde: TrendCurve::from_options(grid.clone(), pilot_at_grid),
        draws: CenteredDraws::new(grid.clone(), config.replications, data, valid)?,
        residuals: resid,
    })
}
