//! Flat TOML run configuration. Every key is optional; command-line flags
//! override the file, which overrides built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

macro_rules! run_config {
    ($($(#[$m:meta])* $field:ident: $ty:ty,)*) => {
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct RunConfig {
            $($(#[$m])* #[serde(default, skip_serializing_if = "Option::is_none")] pub $field: Option<$ty>,)*
        }

        impl RunConfig {
            /// Fields set in `self` win over those in `lower`.
            pub fn over(self, lower: RunConfig) -> RunConfig {
                RunConfig { $($field: self.$field.or(lower.$field),)* }
            }
        }
    };
}

run_config! {
    /// Subcommand that produced a metadata sidecar.
    command: String,
    /// Crate version recorded in a metadata sidecar.
    version: String,

    input: PathBuf,
    output_dir: PathBuf,
    seed: u64,

    delimiter: String,
    no_header: bool,
    time_column: String,
    value_column: String,
    missing_tokens: Vec<String>,
    date_format: String,
    periods_per_year: f64,

    h: f64,
    h_tilde: f64,
    estimator: String,
    trim: f64,

    method: String,
    gamma: f64,
    theta: f64,
    ell: f64,
    replications: usize,
    alpha: f64,
    band: String,
    subset: String,
    plot_data: bool,

    k: usize,
    candidates: Vec<f64>,

    n: usize,
    beta1: f64,
    beta2: f64,
    lambda: f64,
    shift: f64,
    phi: f64,
    psi: f64,
    volatility: String,
    sigma: f64,
    sigma0: f64,
    sigma_star: f64,
    amplitude: f64,
    cycles: f64,
    missing: String,
    p01: f64,
    p11: f64,
    mc_reps: usize,

    max_m: usize,
    residuals_m: usize,
    fmin: f64,
    fmax: f64,
    fstep: f64,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Usage(format!("cannot serialize configuration: {e}")))
    }

    /// Checks that referenced files exist and the seed fits the TOML integer range.
    pub fn validate(&self) -> CliResult<()> {
        if let Some(p) = &self.input {
            if !p.is_file() {
                return Err(CliError::Usage(format!("input file {} does not exist", p.display())));
            }
        }
        if let Some(s) = self.seed {
            if s > i64::MAX as u64 {
                return Err(CliError::Usage(format!("seed {s} exceeds {}", i64::MAX)));
            }
        }
        Ok(())
    }
}
