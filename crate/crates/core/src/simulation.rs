//! Smooth-transition trend DGP with ARMA errors, cyclical volatility and
//! Markov missingness, the Monte Carlo coverage engine, and the asymptotic
//! variance formulas used as reference values.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bands::{pointwise_band, simultaneous_band, Band, EvalSets};
use crate::bootstrap::{run_bootstrap, BootstrapConfig};
use crate::error::{invalid, Error, Result};
use crate::kernel::KernelSpec;
use crate::rng::{derive_seed, substream};
use crate::series::ObservedSeries;

/// `G(τ; λ, c) = 1 / (1 + exp(-λ (τ - c)))`.
pub fn logistic_transition(tau: f64, lambda: f64, c: f64) -> f64 {
    1.0 / (1.0 + (-lambda * (tau - c)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendParams {
    pub beta1: f64,
    pub beta2: f64,
    pub lambda: f64,
    pub c: f64,
}

impl TrendParams {
    /// β₁ = -1, β₂ = 2.5, λ = 10, c = 0.9.
    pub const PAPER: TrendParams = TrendParams {
        beta1: -1.0,
        beta2: 2.5,
        lambda: 10.0,
        c: 0.9,
    };

    pub const FLAT: TrendParams = TrendParams {
        beta1: 0.0,
        beta2: 0.0,
        lambda: 10.0,
        c: 0.5,
    };

    pub fn value(&self, tau: f64) -> f64 {
        trend_value(tau, self.beta1, self.beta2, self.lambda, self.c)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidConfig(format!("lambda {} must be positive", self.lambda)));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::InvalidConfig(format!("shift location {} must lie in (0, 1)", self.c)));
        }
        Ok(())
    }
}

/// `m(τ) = β₁ τ + β₂ τ G(τ; λ, c)`.
pub fn trend_value(tau: f64, beta1: f64, beta2: f64, lambda: f64, c: f64) -> f64 {
    beta1 * tau + beta2 * tau * logistic_transition(tau, lambda, c)
}

fn cyclical(tau: f64, sigma0: f64, sigma_star: f64, a: f64, k: f64) -> f64 {
    sigma0 + (sigma_star - sigma0) * tau + a * (2.0 * PI * k * tau).cos()
}

const VOL_CHECK_POINTS: usize = 1000;

/// `σ(τ) = σ₀ + (σ* - σ₀) τ + a cos(2π k τ)`; rejects parameters with
/// `σ <= 0` anywhere on a 1000-point check grid over `[0, 1]`.
pub fn volatility(tau: f64, sigma0: f64, sigma_star: f64, a: f64, k: f64) -> Result<f64> {
    check_cyclical(sigma0, sigma_star, a, k)?;
    Ok(cyclical(tau, sigma0, sigma_star, a, k))
}

fn check_cyclical(sigma0: f64, sigma_star: f64, a: f64, k: f64) -> Result<()> {
    for i in 0..VOL_CHECK_POINTS {
        let tau = i as f64 / (VOL_CHECK_POINTS - 1) as f64;
        let s = cyclical(tau, sigma0, sigma_star, a, k);
        if !(s > 0.0) {
            return Err(Error::InvalidConfig(format!("volatility {s} at tau = {tau} is not positive")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Volatility {
    /// Constant scale, zero allowed.
    Constant(f64),
    Cyclical {
        sigma0: f64,
        sigma_star: f64,
        a: f64,
        k: f64,
    },
}

impl Volatility {
    /// σ₀ = 1, σ* = 2 with the given cycle amplitude and count.
    pub fn paper(a: f64, k: f64) -> Self {
        Volatility::Cyclical {
            sigma0: 1.0,
            sigma_star: 2.0,
            a,
            k,
        }
    }

    pub fn at(&self, tau: f64) -> f64 {
        match *self {
            Volatility::Constant(s) => s,
            Volatility::Cyclical { sigma0, sigma_star, a, k } => cyclical(tau, sigma0, sigma_star, a, k),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Volatility::Constant(s) if s >= 0.0 && s.is_finite() => Ok(()),
            Volatility::Constant(s) => Err(Error::InvalidConfig(format!("volatility {s} must be non-negative"))),
            Volatility::Cyclical { sigma0, sigma_star, a, k } => check_cyclical(sigma0, sigma_star, a, k),
        }
    }
}

/// Innovation variance `((1 - φ²)/4) / (1 + ψ² - 2φψ)`.
pub fn innovation_variance(phi: f64, psi: f64) -> f64 {
    ((1.0 - phi * phi) / 4.0) / (1.0 + psi * psi - 2.0 * phi * psi)
}

fn check_phi(phi: f64) -> Result<()> {
    if phi.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("AR coefficient {phi} must satisfy |phi| < 1")))
    }
}

/// Number of discarded start-up samples of the ARMA recursion.
pub fn burn_in(phi: f64) -> usize {
    200usize.max((50.0 / (1.0 - phi.abs()) - 1e-9).ceil() as usize)
}

/// ARMA(1,1) errors `u_t = φ u_{t-1} + ψ ε_{t-1} + ε_t` with the normalized
/// innovation variance, started after a burn-in.
pub fn arma_errors<R: Rng + ?Sized>(n: usize, phi: f64, psi: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_phi(phi)?;
    if !psi.is_finite() {
        return Err(Error::InvalidConfig(format!("MA coefficient {psi} is not finite")));
    }
    if phi != 0.0 && psi != 0.0 {
        log::warn!("mixed ARMA(1,1) errors: the variance normalization targets pure AR or MA processes");
    }
    let sd = innovation_variance(phi, psi).sqrt();
    let normal = Normal::new(0.0, sd).map_err(|e| Error::Internal(e.to_string()))?;
    let burn = burn_in(phi);
    let mut out = Vec::with_capacity(n);
    let mut u_prev = 0.0;
    let mut e_prev = normal.sample(rng);
    for t in 0..burn + n {
        let e = normal.sample(rng);
        let u = phi * u_prev + psi * e_prev + e;
        if t >= burn {
            out.push(u);
        }
        u_prev = u;
        e_prev = e;
    }
    Ok(out)
}

/// Stationary probability of `D = 1` for the chain with `P(1|0) = p01`, `P(1|1) = p11`.
pub fn stationary_observed(p01: f64, p11: f64) -> Option<f64> {
    let denom = p01 + 1.0 - p11;
    (denom > 0.0).then(|| p01 / denom)
}

/// Two-state Markov chain of observation indicators started from its
/// stationary distribution.
pub fn markov_missing<R: Rng + ?Sized>(n: usize, p01: f64, p11: f64, rng: &mut R) -> Result<Vec<bool>> {
    for p in [p01, p11] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig(format!("transition probability {p} outside [0, 1]")));
        }
    }
    let start = stationary_observed(p01, p11).unwrap_or_else(|| {
        log::warn!("both states absorbing; starting the missingness chain at 1/2");
        0.5
    });
    if p01 == 0.0 {
        log::warn!("missing state is absorbing (p01 = 0)");
    }
    let mut d = Vec::with_capacity(n);
    let mut state = rng.random::<f64>() < start;
    for t in 0..n {
        if t > 0 {
            let p = if state { p11 } else { p01 };
            state = rng.random::<f64>() < p;
        }
        d.push(state);
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Missingness {
    None,
    Markov { p01: f64, p11: f64 },
}

impl Missingness {
    /// Transition matrix rows (0.80, 0.20) and (0.45, 0.55).
    pub const PAPER: Missingness = Missingness::Markov { p01: 0.20, p11: 0.55 };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n: usize,
    pub trend: TrendParams,
    pub phi: f64,
    pub psi: f64,
    pub vol: Volatility,
    pub missing: Missingness,
    pub mc_reps: usize,
    /// Template for every replication; its seed is replaced by a derived one.
    pub bootstrap: BootstrapConfig,
    pub alpha: f64,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig("series length must be at least 2".into()));
        }
        check_phi(self.phi)?;
        self.trend.validate()?;
        self.vol.validate()?;
        if let Missingness::Markov { p01, p11 } = self.missing {
            for p in [p01, p11] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidConfig(format!("transition probability {p} outside [0, 1]")));
                }
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha {} must lie in (0, 1)", self.alpha)));
        }
        self.bootstrap.validate()
    }

    /// Long-run variance of the error process.
    pub fn omega_u(&self) -> Result<f64> {
        theoretical_lrv(self.phi, self.psi)
    }

    /// Observation probability implied by the missingness model.
    pub fn observed_probability(&self) -> f64 {
        match self.missing {
            Missingness::None => 1.0,
            Missingness::Markov { p01, p11 } => stationary_observed(p01, p11).unwrap_or(0.5),
        }
    }
}

/// Substream indices under a replication seed.
const ERROR_STREAM: u64 = 0;
const MISSING_STREAM: u64 = 1;
const BOOTSTRAP_STREAM: u64 = 2;

/// `y_t = m(t/n) + σ(t/n) u_t` with independent error and missingness
/// generators. Values at missing indices are generated and kept.
pub fn simulate_series_with<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    config: &SimulationConfig,
    error_rng: &mut R1,
    missing_rng: &mut R2,
) -> Result<ObservedSeries> {
    let n = config.n;
    let u = arma_errors(n, config.phi, config.psi, error_rng)?;
    let observed = match config.missing {
        Missingness::None => vec![true; n],
        Missingness::Markov { p01, p11 } => markov_missing(n, p01, p11, missing_rng)?,
    };
    let values = (0..n)
        .map(|i| {
            let tau = (i + 1) as f64 / n as f64;
            config.trend.value(tau) + config.vol.at(tau) * u[i]
        })
        .collect();
    ObservedSeries::new(values, observed)
}

/// [`simulate_series_with`] on substreams 0 (errors) and 1 (missingness) of `seed`.
pub fn simulate_series(config: &SimulationConfig, seed: u64) -> Result<ObservedSeries> {
    config.validate()?;
    simulate_series_with(
        config,
        &mut substream(seed, ERROR_STREAM),
        &mut substream(seed, MISSING_STREAM),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Share of grid points of `G` covered by the pointwise intervals, averaged over replications.
    pub pointwise_coverage: f64,
    pub simultaneous_coverage_gsub: f64,
    pub simultaneous_coverage_g: f64,
    /// Mean over replications of the median interval length over the set.
    pub median_length_pointwise: f64,
    pub median_length_gsub: f64,
    pub median_length_g: f64,
    pub mc_reps: usize,
    pub completed: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, Copy)]
struct RepOutcome {
    pointwise: f64,
    sim_gsub: bool,
    sim_g: bool,
    len_pw: f64,
    len_gsub: f64,
    len_g: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

fn covers_all(band: &Band, truth: impl Fn(f64) -> f64) -> bool {
    (0..band.len()).all(|i| band.contains(i, truth(band.grid.points()[i])))
}

fn valid_widths(band: &Band) -> Vec<f64> {
    (0..band.len()).filter(|&i| band.valid[i]).map(|i| band.width(i)).collect()
}

fn one_replication(config: &SimulationConfig, sets: &EvalSets, rep: usize) -> Result<Option<RepOutcome>> {
    let rep_seed = derive_seed(config.seed, rep as u64);
    let series = simulate_series_with(
        config,
        &mut substream(rep_seed, ERROR_STREAM),
        &mut substream(rep_seed, MISSING_STREAM),
    )?;
    let boot_cfg = BootstrapConfig {
        seed: derive_seed(rep_seed, BOOTSTRAP_STREAM),
        ..config.bootstrap.clone()
    };
    let out = match run_bootstrap(&series, &boot_cfg, &sets.grid) {
        Ok(o) => o,
        Err(Error::DegenerateFit(_) | Error::NoValidPoint) => return Ok(None),
        Err(e) => return Err(e),
    };
    let truth = |tau: f64| config.trend.value(tau);
    let pw = pointwise_band(&out.draws, &out.m_hat, config.alpha)?;
    let pw_widths = valid_widths(&pw);
    if pw_widths.is_empty() {
        return Ok(None);
    }
    let covered = (0..pw.len())
        .filter(|&i| pw.valid[i] && pw.contains(i, truth(pw.grid.points()[i])))
        .count();
    let sim = |subset: &[usize]| simultaneous_band(&out.draws, &out.m_hat, config.alpha, subset);
    let (b_sub, b_all) = match (sim(&sets.sub_indices), sim(&sets.all_indices())) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(Error::NoBand), _) | (_, Err(Error::NoBand)) => return Ok(None),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    Ok(Some(RepOutcome {
        pointwise: covered as f64 / pw_widths.len() as f64,
        sim_gsub: covers_all(&b_sub, truth),
        sim_g: covers_all(&b_all, truth),
        len_pw: median(pw_widths),
        len_gsub: median(valid_widths(&b_sub)),
        len_g: median(valid_widths(&b_all)),
    }))
}

/// Coverage of pointwise intervals on `G` and of simultaneous bands on
/// `G_sub` and `G`, over `mc_reps` simulated series. Replication `r`
/// uses seed `derive_seed(config.seed, r)`; results do not depend on the
/// number of worker threads.
pub fn monte_carlo_coverage(config: &SimulationConfig) -> Result<CoverageReport> {
    config.validate()?;
    if config.mc_reps == 0 {
        return Err(Error::InvalidConfig("at least one Monte Carlo replication required".into()));
    }
    let sets = EvalSets::for_bandwidth(config.bootstrap.h.get())?;
    let outcomes = (0..config.mc_reps)
        .into_par_iter()
        .map(|rep| one_replication(config, &sets, rep))
        .collect::<Result<Vec<_>>>()?;
    let done: Vec<RepOutcome> = outcomes.into_iter().flatten().collect();
    let completed = done.len();
    if completed == 0 {
        return Err(Error::DegenerateFit("every Monte Carlo replication was degenerate".into()));
    }
    let mean = |f: &dyn Fn(&RepOutcome) -> f64| done.iter().map(f).sum::<f64>() / completed as f64;
    Ok(CoverageReport {
        pointwise_coverage: mean(&|o| o.pointwise),
        simultaneous_coverage_gsub: mean(&|o| f64::from(u8::from(o.sim_gsub))),
        simultaneous_coverage_g: mean(&|o| f64::from(u8::from(o.sim_g))),
        median_length_pointwise: mean(&|o| o.len_pw),
        median_length_gsub: mean(&|o| o.len_gsub),
        median_length_g: mean(&|o| o.len_g),
        mc_reps: config.mc_reps,
        completed,
        dropped: config.mc_reps - completed,
    })
}

/// `Ω_U = σ_ε² (1 + ψ)² / (1 - φ)²` for the normalized ARMA(1,1) errors.
pub fn theoretical_lrv(phi: f64, psi: f64) -> Result<f64> {
    check_phi(phi)?;
    Ok(innovation_variance(phi, psi) * (1.0 + psi).powi(2) / (1.0 - phi).powi(2))
}

/// `σ²_as(τ) = σ(τ)² Ω_U κ₂ / p(τ)`.
pub fn asymptotic_variance(
    tau: f64,
    p_fn: impl Fn(f64) -> f64,
    sigma_fn: impl Fn(f64) -> f64,
    omega_u: f64,
    kappa2: f64,
) -> Result<f64> {
    let p = p_fn(tau);
    if !(p > 0.0) {
        return invalid(format!("observation probability {p} at tau = {tau} must be positive"));
    }
    Ok(sigma_fn(tau).powi(2) * omega_u * kappa2 / p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticDiagnostics {
    pub omega_u: f64,
    pub kappa2: f64,
    pub mu2: f64,
    /// `(τ, σ²_as(τ))`.
    pub sigma2_as: Vec<(f64, f64)>,
    /// `(τ, B_as(τ))` with `B_as = μ₂ [m p]'' / p`, differentiated numerically.
    pub b_as: Vec<(f64, f64)>,
}

/// Asymptotic variance and bias of the local constant estimator for the
/// simulation DGP, where the observation probability is constant.
pub fn asymptotic_diagnostics(config: &SimulationConfig, taus: &[f64]) -> Result<AsymptoticDiagnostics> {
    let moments = KernelSpec::EPANECHNIKOV.moments();
    let omega_u = config.omega_u()?;
    let p = config.observed_probability();
    let step = 1e-4;
    let mp = |x: f64| config.trend.value(x) * p;
    let sigma2_as = taus
        .iter()
        .map(|&tau| {
            asymptotic_variance(tau, |_| p, |x| config.vol.at(x), omega_u, moments.kappa2).map(|v| (tau, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let b_as = taus
        .iter()
        .map(|&tau| {
            let d2 = (mp(tau + step) - 2.0 * mp(tau) + mp(tau - step)) / (step * step);
            (tau, moments.mu2 * d2 / p)
        })
        .collect();
    Ok(AsymptoticDiagnostics {
        omega_u,
        kappa2: moments.kappa2,
        mu2: moments.mu2,
        sigma2_as,
        b_as,
    })
}
