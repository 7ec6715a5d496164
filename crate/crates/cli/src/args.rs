use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "trendband", version, about = "Kernel trend estimation with wild bootstrap confidence bands")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the trend on the sample grid.
    Fit(FitArgs),
    /// Pointwise or simultaneous bootstrap confidence bands.
    Band(BandArgs),
    /// Modified cross-validation bandwidth selection.
    Mcv(McvArgs),
    /// Monte Carlo coverage study on the smooth-transition design.
    Simulate(SimulateArgs),
    /// Fourier seasonal regression for M = 1..max-m.
    Seasonal(SeasonalArgs),
    /// Lomb-Scargle periodogram of the observed values.
    Periodogram(PeriodogramArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Band(_) => "band",
            Command::Mcv(_) => "mcv",
            Command::Simulate(_) => "simulate",
            Command::Seasonal(_) => "seasonal",
            Command::Periodogram(_) => "periodogram",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Fit(a) => &a.common,
            Command::Band(a) => &a.common,
            Command::Mcv(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::Seasonal(a) => &a.common,
            Command::Periodogram(a) => &a.common,
        }
    }

    /// Settings given on the command line.
    pub fn explicit(&self) -> RunConfig {
        let base = self.common().to_config();
        let own = match self {
            Command::Fit(a) => a.to_config(),
            Command::Band(a) => a.to_config(),
            Command::Mcv(a) => a.to_config(),
            Command::Simulate(a) => a.to_config(),
            Command::Seasonal(a) => a.to_config(),
            Command::Periodogram(a) => a.to_config(),
        };
        own.over(base)
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration (a metadata sidecar replays a run).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub delimiter: Option<String>,
    #[arg(long)]
    pub no_header: bool,
    /// Time column (header name or zero-based index); row order when omitted.
    #[arg(long)]
    pub time_column: Option<String>,
    /// Value column (header name or zero-based index).
    #[arg(long)]
    pub value_column: Option<String>,
    /// Cell contents treated as missing (repeatable).
    #[arg(long = "missing-token")]
    pub missing_tokens: Vec<String>,
    /// chrono date pattern for the time column.
    #[arg(long)]
    pub date_format: Option<String>,
    /// Periods per year for integer time columns.
    #[arg(long)]
    pub periods_per_year: Option<f64>,
}

impl CommonArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            output_dir: self.output_dir.clone(),
            seed: self.seed,
            input: self.input.clone(),
            delimiter: self.delimiter.clone(),
            no_header: self.no_header.then_some(true),
            time_column: self.time_column.clone(),
            value_column: self.value_column.clone(),
            missing_tokens: (!self.missing_tokens.is_empty()).then(|| self.missing_tokens.clone()),
            date_format: self.date_format.clone(),
            periods_per_year: self.periods_per_year,
            ..RunConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub h: Option<f64>,
    /// local-constant or local-linear.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Drop grid points within this distance of the sample ends.
    #[arg(long)]
    pub trim: Option<f64>,
}

impl FitArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            h: self.h,
            estimator: self.estimator.clone(),
            trim: self.trim,
            ..RunConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[arg(long)]
    pub h: Option<f64>,
    /// Pilot bandwidth; 2 h^(5/9) when omitted.
    #[arg(long)]
    pub h_tilde: Option<f64>,
    /// awb, dwb or wb.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Block length (AWB via θ^(1/ℓ), or the DWB bandwidth).
    #[arg(long)]
    pub ell: Option<f64>,
    #[arg(long, short = 'B')]
    pub replications: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl BootstrapArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            h: self.h,
            h_tilde: self.h_tilde,
            method: self.method.clone(),
            gamma: self.gamma,
            theta: self.theta,
            ell: self.ell,
            replications: self.replications,
            alpha: self.alpha,
            ..RunConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct BandArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub boot: BootstrapArgs,
    /// pointwise or simultaneous.
    #[arg(long)]
    pub band: Option<String>,
    /// full (sample grid), gsub or g (evaluation sets around 0.2, 0.4, 0.6, 0.8).
    #[arg(long)]
    pub subset: Option<String>,
    #[arg(long)]
    pub trim: Option<f64>,
    /// Also write band_plot.csv (tau, center, lower, upper, valid).
    #[arg(long)]
    pub plot_data: bool,
}

impl BandArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            band: self.band.clone(),
            subset: self.subset.clone(),
            trim: self.trim,
            plot_data: self.plot_data.then_some(true),
            ..self.boot.to_config()
        }
    }
}

#[derive(Debug, Args)]
pub struct McvArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Neighbours left out on each side.
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated bandwidth candidates.
    #[arg(long, value_delimiter = ',')]
    pub candidates: Vec<f64>,
}

impl McvArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            k: self.k,
            candidates: (!self.candidates.is_empty()).then(|| self.candidates.clone()),
            ..RunConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub boot: BootstrapArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Location c of the smooth transition.
    #[arg(long)]
    pub shift: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub psi: Option<f64>,
    /// constant or cyclical.
    #[arg(long)]
    pub volatility: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub sigma0: Option<f64>,
    #[arg(long)]
    pub sigma_star: Option<f64>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub cycles: Option<f64>,
    /// none or markov.
    #[arg(long)]
    pub missing: Option<String>,
    #[arg(long)]
    pub p01: Option<f64>,
    #[arg(long)]
    pub p11: Option<f64>,
    #[arg(long)]
    pub mc_reps: Option<usize>,
}

impl SimulateArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            n: self.n,
            beta1: self.beta1,
            beta2: self.beta2,
            lambda: self.lambda,
            shift: self.shift,
            phi: self.phi,
            psi: self.psi,
            volatility: self.volatility.clone(),
            sigma: self.sigma,
            sigma0: self.sigma0,
            sigma_star: self.sigma_star,
            amplitude: self.amplitude,
            cycles: self.cycles,
            missing: self.missing.clone(),
            p01: self.p01,
            p11: self.p11,
            mc_reps: self.mc_reps,
            ..self.boot.to_config()
        }
    }
}

#[derive(Debug, Args)]
pub struct SeasonalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub max_m: Option<usize>,
    /// Write residuals.csv from the fit with this many harmonics.
    #[arg(long)]
    pub residuals_m: Option<usize>,
}

impl SeasonalArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            max_m: self.max_m,
            residuals_m: self.residuals_m,
            ..RunConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct PeriodogramArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Lowest frequency in cycles per year.
    #[arg(long)]
    pub fmin: Option<f64>,
    #[arg(long)]
    pub fmax: Option<f64>,
    #[arg(long)]
    pub fstep: Option<f64>,
}

impl PeriodogramArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            fmin: self.fmin,
            fmax: self.fmax,
            fstep: self.fstep,
            ..RunConfig::default()
        }
    }
}
