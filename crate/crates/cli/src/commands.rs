//! Subcommand execution: resolve configuration, compute, write tables and
//! the metadata sidecar.

use std::path::{Path, PathBuf};

use trendband::bands::EvalSets;
use trendband::bootstrap::{ell_from_gamma, DEFAULT_OVERSMOOTHING, DEFAULT_REPLICATIONS};
use trendband::estimator::local_linear_curve;
use trendband::simulation::{monte_carlo_coverage, Missingness, SimulationConfig, TrendParams, Volatility};
use trendband::spectral::{argmin_m, fourier_table, frequency_grid, lomb_scargle};
use trendband::{
    local_constant_curve, mcv_select, observed_probability, pointwise_band, run_bootstrap, simultaneous_band,
    AwbTuning, Band, Bandwidth, BootstrapConfig, EvalGrid, Method,
};

use crate::args::Command;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{fmt_num, load_series, parse_delimiter, plot_table, write_all, ColumnRef, CsvSpec, LoadedSeries, Table};

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn usage(e: trendband::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn required<T: Clone>(v: &Option<T>, name: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| CliError::Usage(format!("missing required setting '{name}'")))
}

fn defaults(command: &str) -> RunConfig {
    let mut d = RunConfig {
        output_dir: Some(PathBuf::from(".")),
        seed: Some(0),
        delimiter: Some(",".into()),
        no_header: Some(false),
        value_column: Some("1".into()),
        missing_tokens: Some(crate::io::DEFAULT_MISSING_TOKENS.iter().map(|s| s.to_string()).collect()),
        periods_per_year: Some(365.25),
        ..RunConfig::default()
    };
    match command {
        "fit" => {
            d.estimator = Some("local-constant".into());
            d.trim = Some(0.0);
        }
        "band" | "simulate" => {
            d.method = Some("awb".into());
            d.replications = Some(DEFAULT_REPLICATIONS);
            d.alpha = Some(0.05);
            d.theta = Some(0.01);
            if command == "band" {
                d.band = Some("simultaneous".into());
                d.subset = Some("full".into());
                d.trim = Some(0.0);
                d.plot_data = Some(false);
            } else {
                d.h = Some(0.06);
                d.n = Some(200);
                d.beta1 = Some(TrendParams::PAPER.beta1);
                d.beta2 = Some(TrendParams::PAPER.beta2);
                d.lambda = Some(TrendParams::PAPER.lambda);
                d.shift = Some(TrendParams::PAPER.c);
                d.phi = Some(0.0);
                d.psi = Some(0.0);
                d.volatility = Some("cyclical".into());
                d.sigma = Some(1.0);
                d.sigma0 = Some(1.0);
                d.sigma_star = Some(2.0);
                d.amplitude = Some(0.5);
                d.cycles = Some(4.0);
                d.missing = Some("none".into());
                d.p01 = Some(0.20);
                d.p11 = Some(0.55);
                d.mc_reps = Some(1000);
            }
        }
        "mcv" => {
            d.k = Some(5);
            d.candidates = Some((1..=20).map(|i| i as f64 / 100.0).collect());
        }
        "seasonal" => d.max_m = Some(7),
        "periodogram" => {
            d.fmin = Some(0.1);
            d.fmax = Some(6.0);
            d.fstep = Some(0.01);
        }
        _ => {}
    }
    d
}

/// Picks the bootstrap method from explicit settings and records exactly the
/// tuning fields it used, so the sidecar replays unambiguously.
fn resolve_method(explicit: &RunConfig, cfg: &mut RunConfig, default_gamma: f64) -> CliResult<Method> {
    let name = cfg.method.clone().unwrap_or_else(|| "awb".into());
    let method = match name.as_str() {
        "awb" => match (explicit.gamma, explicit.ell) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage("give either gamma or (theta, ell) for the AWB, not both".into()))
            }
            (None, Some(ell)) => {
                let theta = cfg.theta.unwrap_or(0.01);
                cfg.gamma = None;
                cfg.theta = Some(theta);
                cfg.ell = Some(ell);
                Method::Awb(AwbTuning::BlockLength { theta, ell })
            }
            (g, None) => {
                let g = g.unwrap_or(default_gamma);
                cfg.gamma = Some(g);
                cfg.theta = None;
                Method::Awb(AwbTuning::Gamma(g))
            }
        },
        "dwb" => {
            let ell = match explicit.ell {
                Some(ell) => ell,
                None => {
                    let g = explicit.gamma.unwrap_or(default_gamma);
                    ell_from_gamma(cfg.theta.unwrap_or(0.01), g).map_err(usage)?
                }
            };
            cfg.gamma = None;
            cfg.theta = None;
            cfg.ell = Some(ell);
            Method::Dwb { ell }
        }
        "wb" => {
            cfg.gamma = None;
            cfg.theta = None;
            cfg.ell = None;
            Method::Wb
        }
        other => return Err(CliError::Usage(format!("unknown method '{other}' (awb, dwb, wb)"))),
    };
    cfg.method = Some(name);
    Ok(method)
}

fn csv_spec(cfg: &RunConfig) -> CliResult<CsvSpec> {
    let spec = CsvSpec {
        delimiter: parse_delimiter(&required(&cfg.delimiter, "delimiter")?)?,
        has_header: !cfg.no_header.unwrap_or(false),
        time_column: cfg.time_column.as_deref().map(ColumnRef::parse),
        value_column: ColumnRef::parse(&required(&cfg.value_column, "value_column")?),
        missing_tokens: required(&cfg.missing_tokens, "missing_tokens")?,
        date_format: cfg.date_format.clone(),
        periods_per_year: required(&cfg.periods_per_year, "periods_per_year")?,
    };
    spec.validate()?;
    Ok(spec)
}

fn load(cfg: &RunConfig) -> CliResult<LoadedSeries> {
    let input = required(&cfg.input, "input")?;
    load_series(&input, &csv_spec(cfg)?)
}

fn bandwidth(cfg: &RunConfig) -> CliResult<Bandwidth> {
    Bandwidth::new(required(&cfg.h, "h")?).map_err(usage)
}

/// Files produced by one run, written together at the end.
struct Outputs {
    dir: PathBuf,
    delimiter: u8,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    fn new(cfg: &RunConfig) -> CliResult<Self> {
        let dir = required(&cfg.output_dir, "output_dir")?;
        if !dir.is_dir() {
            return Err(CliError::Usage(format!("output directory {} does not exist", dir.display())));
        }
        Ok(Self {
            dir,
            delimiter: parse_delimiter(&required(&cfg.delimiter, "delimiter")?)?,
            files: Vec::new(),
        })
    }

    fn table(&mut self, name: &str, t: &Table) -> CliResult<()> {
        let bytes = t.to_bytes(self.delimiter)?;
        self.files.push((self.dir.join(name), bytes));
        Ok(())
    }

    fn finish(mut self, stem: &str, cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
        self.files
            .push((self.dir.join(format!("{stem}.meta.toml")), cfg.to_toml()?.into_bytes()));
        write_all(&self.files)?;
        Ok(self.files.into_iter().map(|(p, _)| p).collect())
    }
}

/// Runs one subcommand and returns the paths written.
pub fn execute(command: &Command) -> CliResult<Vec<PathBuf>> {
    let name = command.name();
    let explicit = command.explicit();
    let file = match &command.common().config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = &file.command {
        if c != name {
            log::warn!("configuration was recorded for '{c}', running '{name}'");
        }
    }
    let explicit = explicit.over(file);
    let mut cfg = explicit.clone().over(defaults(name));
    if let Some(input) = &cfg.input {
        cfg.input = Some(std::fs::canonicalize(input).unwrap_or_else(|_| input.clone()));
    }
    cfg.validate()?;
    cfg.command = Some(name.to_string());
    cfg.version = Some(VERSION.to_string());
    match name {
        "fit" => fit(cfg),
        "band" => band(&explicit, cfg),
        "mcv" => mcv(cfg),
        "simulate" => simulate(&explicit, cfg),
        "seasonal" => seasonal(cfg),
        "periodogram" => periodogram(cfg),
        _ => unreachable!("clap restricts subcommands"),
    }
}

fn sample_grid(n: usize, trim: f64) -> CliResult<EvalGrid> {
    if !(0.0..0.5).contains(&trim) {
        return Err(CliError::Usage(format!("trim {trim} must lie in [0, 0.5)")));
    }
    EvalGrid::interior(n, trim).map_err(|e| CliError::Data(e.to_string()))
}

fn fit(cfg: RunConfig) -> CliResult<Vec<PathBuf>> {
    let data = load(&cfg)?;
    let h = bandwidth(&cfg)?;
    let grid = sample_grid(data.series.len(), required(&cfg.trim, "trim")?)?;
    let curve = match required(&cfg.estimator, "estimator")?.as_str() {
        "local-constant" => local_constant_curve(&data.series, h, &grid)?,
        "local-linear" => local_linear_curve(&data.series, h, &grid)?,
        other => return Err(CliError::Usage(format!("unknown estimator '{other}'"))),
    };
    let mut t = Table::new(&["tau", "estimate", "p_hat", "valid"]);
    for (i, &tau) in grid.points().iter().enumerate() {
        let p = observed_probability(&data.series, h, tau)?;
        t.push(vec![
            fmt_num(tau),
            curve.get(i).map(fmt_num).unwrap_or_default(),
            fmt_num(p),
            curve.valid[i].to_string(),
        ]);
    }
    let mut out = Outputs::new(&cfg)?;
    out.table("fit.csv", &t)?;
    out.finish("fit", &cfg)
}

fn bootstrap_config(explicit: &RunConfig, cfg: &mut RunConfig, default_gamma: f64) -> CliResult<BootstrapConfig> {
    let h = bandwidth(cfg)?;
    let method = resolve_method(explicit, cfg, default_gamma)?;
    let mut boot = BootstrapConfig::new(method, h)
        .map_err(usage)?
        .with_replications(required(&cfg.replications, "replications")?)
        .with_seed(required(&cfg.seed, "seed")?);
    let h_tilde = match cfg.h_tilde {
        Some(ht) => Bandwidth::new(ht).map_err(usage)?,
        None => h.oversmoothed(DEFAULT_OVERSMOOTHING).map_err(usage)?,
    };
    boot = boot.with_h_tilde(h_tilde);
    cfg.h_tilde = Some(h_tilde.get());
    boot.validate().map_err(usage)?;
    Ok(boot)
}

fn band(explicit: &RunConfig, mut cfg: RunConfig) -> CliResult<Vec<PathBuf>> {
    let data = load(&cfg)?;
    let boot = bootstrap_config(explicit, &mut cfg, 0.5)?;
    let alpha = required(&cfg.alpha, "alpha")?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::Usage(format!("alpha {alpha} must lie in (0, 1)")));
    }
    let subset_kind = required(&cfg.subset, "subset")?;
    let (grid, subset) = match subset_kind.as_str() {
        "full" => {
            let g = sample_grid(data.series.len(), required(&cfg.trim, "trim")?)?;
            let all = (0..g.len()).collect();
            (g, all)
        }
        "gsub" | "g" => {
            let sets = EvalSets::for_bandwidth(boot.h.get()).map_err(usage)?;
            let idx = if subset_kind == "gsub" { sets.sub_indices.clone() } else { sets.all_indices() };
            (sets.grid, idx)
        }
        other => return Err(CliError::Usage(format!("unknown subset '{other}' (full, gsub, g)"))),
    };
    let out_boot = run_bootstrap(&data.series, &boot, &grid)?;
    let band = match required(&cfg.band, "band")?.as_str() {
        "pointwise" => restrict(&pointwise_band(&out_boot.draws, &out_boot.m_hat, alpha)?, &subset)?,
        "simultaneous" => simultaneous_band(&out_boot.draws, &out_boot.m_hat, alpha, &subset)?,
        other => return Err(CliError::Usage(format!("unknown band '{other}' (pointwise, simultaneous)"))),
    };
    let mut t = Table::new(&["tau", "center", "lower", "upper", "alpha_s", "valid"]);
    let alpha_s = band.alpha_s.map(fmt_num).unwrap_or_default();
    for i in 0..band.len() {
        let ok = band.valid[i];
        let num = |x: f64| if ok { fmt_num(x) } else { String::new() };
        t.push(vec![
            fmt_num(band.grid.points()[i]),
            num(band.center[i]),
            num(band.lower[i]),
            num(band.upper[i]),
            alpha_s.clone(),
            ok.to_string(),
        ]);
    }
    let mut out = Outputs::new(&cfg)?;
    out.table("band.csv", &t)?;
    if cfg.plot_data == Some(true) {
        out.table("band_plot.csv", &plot_table(&band))?;
    }
    out.finish("band", &cfg)
}

fn restrict(band: &Band, idx: &[usize]) -> CliResult<Band> {
    if idx.len() == band.len() {
        return Ok(band.clone());
    }
    let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
    Ok(Band {
        grid: band.grid.subset(idx)?,
        center: pick(&band.center),
        lower: pick(&band.lower),
        upper: pick(&band.upper),
        alpha: band.alpha,
        alpha_s: band.alpha_s,
        valid: idx.iter().map(|&i| band.valid[i]).collect(),
    })
}

fn mcv(cfg: RunConfig) -> CliResult<Vec<PathBuf>> {
    let data = load(&cfg)?;
    let k = required(&cfg.k, "k")?;
    let candidates = required(&cfg.candidates, "candidates")?;
    if let Some(h) = candidates.iter().find(|h| !(**h > 0.0 && **h < 1.0)) {
        return Err(CliError::Usage(format!("bandwidth candidate {h} outside (0, 1)")));
    }
    let res = mcv_select(&data.series, k, &candidates)?;
    let mut t = Table::new(&["h", "criterion", "selected"]);
    for &(h, c) in &res.criterion_by_h {
        t.push(vec![fmt_num(h), fmt_num(c), (h == res.selected_h).to_string()]);
    }
    println!("selected h = {}", res.selected_h);
    let mut out = Outputs::new(&cfg)?;
    out.table("mcv.csv", &t)?;
    out.finish("mcv", &cfg)
}

fn simulate(explicit: &RunConfig, mut cfg: RunConfig) -> CliResult<Vec<PathBuf>> {
    let bootstrap = bootstrap_config(explicit, &mut cfg, 0.2)?;
    let r = |v: &Option<f64>, name: &str| required(v, name);
    let vol = match required(&cfg.volatility, "volatility")?.as_str() {
        "constant" => Volatility::Constant(r(&cfg.sigma, "sigma")?),
        "cyclical" => Volatility::Cyclical {
            sigma0: r(&cfg.sigma0, "sigma0")?,
            sigma_star: r(&cfg.sigma_star, "sigma_star")?,
            a: r(&cfg.amplitude, "amplitude")?,
            k: r(&cfg.cycles, "cycles")?,
        },
        other => return Err(CliError::Usage(format!("unknown volatility '{other}' (constant, cyclical)"))),
    };
    let missing = match required(&cfg.missing, "missing")?.as_str() {
        "none" => Missingness::None,
        "markov" => Missingness::Markov {
            p01: r(&cfg.p01, "p01")?,
            p11: r(&cfg.p11, "p11")?,
        },
        other => return Err(CliError::Usage(format!("unknown missingness '{other}' (none, markov)"))),
    };
    let sim = SimulationConfig {
        n: required(&cfg.n, "n")?,
        trend: TrendParams {
            beta1: r(&cfg.beta1, "beta1")?,
            beta2: r(&cfg.beta2, "beta2")?,
            lambda: r(&cfg.lambda, "lambda")?,
            c: r(&cfg.shift, "shift")?,
        },
        phi: r(&cfg.phi, "phi")?,
        psi: r(&cfg.psi, "psi")?,
        vol,
        missing,
        mc_reps: required(&cfg.mc_reps, "mc_reps")?,
        seed: bootstrap.seed,
        alpha: r(&cfg.alpha, "alpha")?,
        bootstrap,
    };
    sim.validate().map_err(usage)?;
    let rep = monte_carlo_coverage(&sim)?;
    let mut t = Table::new(&[
        "pointwise_coverage",
        "simultaneous_coverage_gsub",
        "simultaneous_coverage_g",
        "median_length_pointwise",
        "median_length_gsub",
        "median_length_g",
        "mc_reps",
        "completed",
        "dropped",
    ]);
    t.push(vec![
        fmt_num(rep.pointwise_coverage),
        fmt_num(rep.simultaneous_coverage_gsub),
        fmt_num(rep.simultaneous_coverage_g),
        fmt_num(rep.median_length_pointwise),
        fmt_num(rep.median_length_gsub),
        fmt_num(rep.median_length_g),
        rep.mc_reps.to_string(),
        rep.completed.to_string(),
        rep.dropped.to_string(),
    ]);
    let mut out = Outputs::new(&cfg)?;
    out.table("simulate.csv", &t)?;
    out.finish("simulate", &cfg)
}

fn seasonal(cfg: RunConfig) -> CliResult<Vec<PathBuf>> {
    let data = load(&cfg)?;
    let max_m = required(&cfg.max_m, "max_m")?;
    if max_m == 0 {
        return Err(CliError::Usage("max_m must be at least 1".into()));
    }
    let table = fourier_table(&data.series, &data.years, max_m)?;
    let mut crit = Table::new(&["m", "aic", "bic", "mse", "n_obs"]);
    let mut coef = Table::new(&["m", "j", "a", "b"]);
    for (fit, ic) in &table {
        crit.push(vec![
            fit.m.to_string(),
            fmt_num(ic.aic),
            fmt_num(ic.bic),
            fmt_num(ic.mse),
            fit.n_obs.to_string(),
        ]);
        for (j, &(a, b)) in fit.coefficients.iter().enumerate() {
            coef.push(vec![fit.m.to_string(), (j + 1).to_string(), fmt_num(a), fmt_num(b)]);
        }
    }
    if let (Some(a), Some(b)) = (argmin_m(&table, |ic| ic.aic), argmin_m(&table, |ic| ic.bic)) {
        println!("aic selects M = {a}, bic selects M = {b}");
    }
    let mut out = Outputs::new(&cfg)?;
    out.table("seasonal.csv", &crit)?;
    out.table("seasonal_coefficients.csv", &coef)?;
    if let Some(m) = cfg.residuals_m {
        let (fit, _) = table
            .iter()
            .find(|(f, _)| f.m == m)
            .ok_or_else(|| CliError::Usage(format!("residuals_m {m} outside 1..={max_m}")))?;
        let mut r = Table::new(&["time", "value"]);
        let s = &fit.residual_series;
        for i in 0..s.len() {
            let v = if s.is_observed(i) { fmt_num(s.values()[i]) } else { String::new() };
            r.push(vec![data.labels[i].clone(), v]);
        }
        out.table("residuals.csv", &r)?;
    }
    out.finish("seasonal", &cfg)
}

fn periodogram(cfg: RunConfig) -> CliResult<Vec<PathBuf>> {
    let data = load(&cfg)?;
    let freqs = frequency_grid(
        required(&cfg.fmin, "fmin")?,
        required(&cfg.fmax, "fmax")?,
        required(&cfg.fstep, "fstep")?,
    )
    .map_err(usage)?;
    let p = lomb_scargle(&data.series, &data.years, &freqs)?;
    let mut t = Table::new(&["frequency", "power"]);
    for (f, pw) in p.frequencies.iter().zip(&p.power) {
        t.push(vec![fmt_num(*f), fmt_num(*pw)]);
    }
    if let Some(f) = p.peak_frequency() {
        println!("peak frequency = {f} cycles per year");
    }
    let mut out = Outputs::new(&cfg)?;
    out.table("periodogram.csv", &t)?;
    out.finish("periodogram", &cfg)
}

/// Output path of the metadata sidecar for a run with the given stem.
pub fn sidecar_path(dir: &Path, stem: &str) -> PathBuf {
    dir.join(format!("{stem}.meta.toml"))
}
