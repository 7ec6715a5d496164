//! Local constant (Nadaraya-Watson) and local linear trend estimation on
//! series with missing observations, the observation-probability diagnostic,
//! modified cross-validation and residual extraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::KernelSpec;
use crate::series::{Bandwidth, EvalGrid, ObservedSeries, TrendCurve};

/// Minimum number of observed points with positive kernel weight.
pub const MIN_WINDOW_POINTS: usize = 2;
/// Minimum total kernel weight `Σ k_t(τ) D_t`.
pub const MIN_WINDOW_WEIGHT: f64 = 1e-10;
/// Largest admissible condition number of the local linear normal matrix.
pub const MAX_LOCAL_LINEAR_CONDITION: f64 = 1e12;

/// Observed indices with positive kernel weight around one evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWindow {
    pub tau: f64,
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub total: f64,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        invalid(format!("evaluation point {tau} must lie in (0, 1)"))
    }
}

/// Zero-based index range `[lo, hi)` that can carry weight at `tau`.
fn window_range(n: usize, h: f64, tau: f64, halfwidth: f64) -> (usize, usize) {
    let nf = n as f64;
    let lo_t = ((tau - halfwidth * h) * nf).floor() - 1.0;
    let hi_t = ((tau + halfwidth * h) * nf).ceil() + 1.0;
    let lo = lo_t.max(1.0) as usize - 1;
    let hi = (hi_t.min(nf).max(0.0)) as usize;
    (lo, hi.max(lo))
}

impl KernelWindow {
    pub fn new(series: &ObservedSeries, h: Bandwidth, tau: f64, kernel: KernelSpec) -> Self {
        Self::excluding(series, h, tau, kernel, None)
    }

    /// Window that drops indices `t` with `|t - τ n| <= k` when `leave_out` is `Some(k)`.
    pub fn excluding(
        series: &ObservedSeries,
        h: Bandwidth,
        tau: f64,
        kernel: KernelSpec,
        leave_out: Option<usize>,
    ) -> Self {
        let n = series.len();
        let nf = n as f64;
        let hv = h.get();
        let (lo, hi) = window_range(n, hv, tau, kernel.support_halfwidth());
        let mut indices = Vec::new();
        let mut weights = Vec::new();
        let mut total = 0.0;
        for i in lo..hi {
            if !series.is_observed(i) {
                continue;
            }
            let t = (i + 1) as f64;
            if let Some(k) = leave_out {
                if (t - tau * nf).abs() <= k as f64 + 1e-9 {
                    continue;
                }
            }
            let w = kernel.value((t / nf - tau) / hv);
            if w > 0.0 {
                indices.push(i);
                weights.push(w);
                total += w;
            }
        }
        Self {
            tau,
            indices,
            weights,
            total,
        }
    }

    pub fn is_sufficient(&self) -> bool {
        self.indices.len() >= MIN_WINDOW_POINTS && self.total >= MIN_WINDOW_WEIGHT
    }

    /// Kernel-weighted mean of `values` over the window.
    #[inline]
    /// Weighted mean taken relative to the first in-window value, so constant
    /// data come back exactly; clamped to the in-window range.
    pub fn weighted_mean(&self, values: &[f64]) -> f64 {
        let Some(&first) = self.indices.first() else {
            return f64::NAN;
        };
        let anchor = values[first];
        let (mut lo, mut hi, mut acc) = (anchor, anchor, 0.0);
        for (&i, &w) in self.indices.iter().zip(&self.weights) {
            let v = values[i];
            acc += w * (v - anchor);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (anchor + acc / self.total).clamp(lo, hi)
    }

    pub fn mean_if_sufficient(&self, values: &[f64]) -> Option<f64> {
        self.is_sufficient().then(|| self.weighted_mean(values))
    }
}

/// Nadaraya-Watson estimate at `tau`; `None` when the window holds too little data.
pub fn local_constant(series: &ObservedSeries, h: Bandwidth, tau: f64) -> Result<Option<f64>> {
    check_tau(tau)?;
    Ok(KernelWindow::new(series, h, tau, KernelSpec::EPANECHNIKOV).mean_if_sufficient(series.values()))
}

pub fn local_constant_curve(series: &ObservedSeries, h: Bandwidth, grid: &EvalGrid) -> Result<TrendCurve> {
    if grid.is_empty() {
        return invalid("evaluation grid is empty");
    }
    let values = grid
        .points()
        .par_iter()
        .map(|&tau| local_constant(series, h, tau))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrendCurve::from_options(grid.clone(), values))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalLinearFit {
    pub level: f64,
    pub slope: f64,
}

/// Local linear estimate of level and slope at `tau`.
pub fn local_linear(series: &ObservedSeries, h: Bandwidth, tau: f64) -> Result<Option<LocalLinearFit>> {
    check_tau(tau)?;
    let window = KernelWindow::new(series, h, tau, KernelSpec::EPANECHNIKOV);
    if !window.is_sufficient() {
        return Ok(None);
    }
    let y = series.values();
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&i, &w) in window.indices.iter().zip(&window.weights) {
        let x = series.time_of(i) - tau;
        s0 += w;
        s1 += w * x;
        s2 += w * x * x;
        t0 += w * y[i];
        t1 += w * x * y[i];
    }
    // eigenvalues of [[s0, s1], [s1, s2]]
    let mid = 0.5 * (s0 + s2);
    let rad = (0.25 * (s0 - s2).powi(2) + s1 * s1).sqrt();
    let (lmax, lmin) = (mid + rad, mid - rad);
    if !(lmin > 0.0) || lmax / lmin > MAX_LOCAL_LINEAR_CONDITION {
        return Ok(None);
    }
    let det = s0 * s2 - s1 * s1;
    if !(det > 0.0) {
        return Ok(None);
    }
    Ok(Some(LocalLinearFit {
        level: (s2 * t0 - s1 * t1) / det,
        slope: (s0 * t1 - s1 * t0) / det,
    }))
}

pub fn local_linear_curve(series: &ObservedSeries, h: Bandwidth, grid: &EvalGrid) -> Result<TrendCurve> {
    let values = grid
        .points()
        .par_iter()
        .map(|&tau| local_linear(series, h, tau).map(|f| f.map(|f| f.level)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrendCurve::from_options(grid.clone(), values))
}

/// `p̂(τ) = (nh)^{-1} Σ k_t(τ) D_t`.
pub fn observed_probability(series: &ObservedSeries, h: Bandwidth, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let window = KernelWindow::new(series, h, tau, KernelSpec::EPANECHNIKOV);
    Ok(window.total / (series.len() as f64 * h.get()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McvResult {
    pub selected_h: f64,
    /// `(h, criterion)` in candidate order; non-finite where no point contributed.
    pub criterion_by_h: Vec<(f64, f64)>,
}

/// Modified cross-validation criterion for one bandwidth.
///
/// Averages `(m̂_{k,h}(t/n) - y_t)²` over the observed `t` whose leave-out
/// window still holds enough data. Returns NaN when none does.
pub fn mcv_criterion(series: &ObservedSeries, k: usize, h: Bandwidth) -> f64 {
    let y = series.values();
    let (sum, count) = (0..series.len())
        .filter(|&i| series.is_observed(i))
        .filter_map(|i| {
            let tau = series.time_of(i);
            KernelWindow::excluding(series, h, tau, KernelSpec::EPANECHNIKOV, Some(k))
                .mean_if_sufficient(y)
                .map(|m| (m - y[i]).powi(2))
        })
        .fold((0.0, 0usize), |(s, c), e| (s + e, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Bandwidth minimizing the leave-(2k+1)-out criterion. Ties keep the
/// earlier candidate.
pub fn mcv_select(series: &ObservedSeries, k: usize, candidates: &[f64]) -> Result<McvResult> {
    if candidates.is_empty() {
        return invalid("no bandwidth candidates");
    }
    let hs = candidates
        .iter()
        .map(|&h| Bandwidth::new(h))
        .collect::<Result<Vec<_>>>()?;
    let criterion_by_h: Vec<(f64, f64)> = hs
        .par_iter()
        .map(|&h| (h.get(), mcv_criterion(series, k, h)))
        .collect();
    let mut best: Option<(f64, f64)> = None;
    for &(h, c) in &criterion_by_h {
        if c.is_finite() && best.is_none_or(|(_, bc)| c < bc) {
            best = Some((h, c));
        }
    }
    let (selected_h, _) = best.ok_or(Error::NoSelection)?;
    Ok(McvResult {
        selected_h,
        criterion_by_h,
    })
}

/// Pilot fit residuals used by the bootstrap.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// `ẑ_t`; zero at missing and flagged indices.
    pub values: Vec<f64>,
    /// `m̃(t/n)` at observed indices. Equals `y_t` at flagged indices and is
    /// NaN at missing ones.
    pub pilot: Vec<f64>,
    /// Observed indices where the pilot fit had insufficient data.
    pub flagged: Vec<bool>,
}

impl Residuals {
    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|&&f| f).count()
    }
}

/// Residuals `ẑ_t = D_t (y_t - m̃(t/n))` from a local constant fit with `h_tilde`.
pub fn residuals(series: &ObservedSeries, h_tilde: Bandwidth) -> Result<Residuals> {
    let n = series.len();
    let y = series.values();
    let fits: Vec<Option<Option<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            series.is_observed(i).then(|| {
                KernelWindow::new(series, h_tilde, series.time_of(i), KernelSpec::EPANECHNIKOV)
                    .mean_if_sufficient(y)
            })
        })
        .collect();
    let mut values = vec![0.0; n];
    let mut pilot = vec![f64::NAN; n];
    let mut flagged = vec![false; n];
    for (i, fit) in fits.into_iter().enumerate() {
        match fit {
            None => {}
            Some(Some(m)) => {
                pilot[i] = m;
                values[i] = y[i] - m;
            }
            Some(None) => {
                pilot[i] = y[i];
                flagged[i] = true;
            }
        }
    }
    let out = Residuals {
        values,
        pilot,
        flagged,
    };
    let observed = series.observed_count();
    if 2 * out.flagged_count() > observed {
        return Err(Error::DegenerateFit(format!(
            "pilot fit undefined at {} of {} observed points",
            out.flagged_count(),
            observed
        )));
    }
    Ok(out)
}
