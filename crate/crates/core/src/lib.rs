//! Nonparametric trend estimation for equally spaced series with missing
//! observations, with pointwise and simultaneous confidence bands from the
//! autoregressive wild bootstrap (plus dependent and plain wild bootstrap
//! baselines), a Monte Carlo coverage harness and seasonal/spectral tools.

pub mod bands;
pub mod bootstrap;
pub mod error;
pub mod estimator;
pub mod kernel;
pub mod rng;
pub mod series;
pub mod simulation;
pub mod spectral;

pub use bands::{build_eval_sets, empirical_quantile, pointwise_band, simultaneous_band, Band, EvalSets};
pub use bootstrap::{run_bootstrap, AwbTuning, BootstrapConfig, BootstrapOutput, CenteredDraws, Method};
pub use error::{Error, Result};
pub use estimator::{local_constant, local_constant_curve, local_linear, mcv_select, observed_probability, residuals};
pub use kernel::{KernelMoments, KernelSpec};
pub use series::{Bandwidth, EvalGrid, ObservedSeries, TrendCurve};
