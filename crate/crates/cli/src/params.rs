//! Run parameters, read from flags and optionally from a JSON file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Deserializer};

use crate::fail::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    InverseLinear,
    Power,
    Exponential,
    /// `ω = exp Σ c_j sin(jπt/T)`, only for `forced`.
    LogSine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Closed,
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// Grid values may be given in a config file as numbers or as strings.
fn number_or_string<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        N(f64),
        S(String),
    }
    Ok(Option::<Raw>::deserialize(d)?.map(|r| match r {
        Raw::N(x) => x.to_string(),
        Raw::S(s) => s,
    }))
}

/// Every option is optional so that flags can override file values.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Params {
    /// JSON file with default values for any of these options (flags win).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Output file; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Worker threads for grids and verification.
    #[arg(long, env = "CYCLOSC_WORKERS")]
    pub workers: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,

    /// Power-law exponent.
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<f64>,

    /// Speed magnitude, or a grid `start:stop:count[:lin|log]` for scans.
    #[arg(long, visible_alias = "v-grid")]
    #[serde(deserialize_with = "number_or_string", alias = "v-grid")]
    pub v: Option<String>,

    /// Scale factor, or a grid for scans.
    #[arg(long, visible_alias = "lambda-grid")]
    #[serde(deserialize_with = "number_or_string", alias = "lambda-grid")]
    pub lambda: Option<String>,

    /// Initial frequency, or a grid for scans.
    #[arg(long, visible_alias = "omega0-grid")]
    #[serde(deserialize_with = "number_or_string", alias = "omega0-grid")]
    pub omega0: Option<String>,

    /// Number of cycles.
    #[arg(long)]
    pub cycles: Option<u32>,

    /// Initial stationary level `n`.
    #[arg(long)]
    pub level: Option<u32>,

    #[arg(long, value_enum)]
    pub method: Option<Method>,

    #[arg(long)]
    pub rtol: Option<f64>,

    #[arg(long)]
    pub atol: Option<f64>,

    /// Log-sine coefficients `c_j`, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Option<Vec<f64>>,

    /// Duration of a log-sine profile or of a perturbing drive.
    #[arg(long)]
    pub duration: Option<f64>,

    /// Force `κ(t) = A sin²(πt/T) cos(ωt + φ)`: amplitude `A`.
    #[arg(long, allow_hyphen_values = true)]
    pub kappa_amplitude: Option<f64>,

    #[arg(long)]
    pub kappa_omega: Option<f64>,

    #[arg(long)]
    pub kappa_phase: Option<f64>,

    /// Power `N` of the perturbation `x^N`.
    #[arg(long)]
    pub power: Option<usize>,

    /// Oscillator basis size.
    #[arg(long)]
    pub cutoff: Option<usize>,

    /// Drive `δω(t) = ε sin²(πt/T) cos(ω_d t)`: amplitude `ε`.
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,

    /// Drive modulation `ω_d`.
    #[arg(long)]
    pub drive_omega: Option<f64>,

    /// Tabulate the matrix-element inequality instead of transition probabilities.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub inequality: Option<bool>,

    /// Highest level for the inequality table.
    #[arg(long)]
    pub n_max: Option<usize>,

    /// Cavity edge length, cm.
    #[arg(long)]
    pub length: Option<f64>,

    /// Cavity temperature, K.
    #[arg(long)]
    pub temperature: Option<f64>,

    /// Fractional wall rate magnitude, 1/s.
    #[arg(long)]
    pub rate: Option<f64>,

    /// Spectrum samples.
    #[arg(long)]
    pub samples: Option<usize>,

    /// Highest cavity mode checked for adiabaticity.
    #[arg(long)]
    pub modes: Option<usize>,

    /// Report near-unity minima of `R(v)` below this tolerance instead of the grid.
    #[arg(long)]
    pub unity_tol: Option<f64>,

    /// Random closed cycles checked by `verify`.
    #[arg(long)]
    pub cases: Option<usize>,
}

macro_rules! overlay {
    ($a:ident, $b:ident; $($f:ident),* $(,)?) => {
        Params { config: $a.config, $($f: $a.$f.or($b.$f)),* }
    };
}

impl Params {
    /// Flags over file values.
    pub fn resolve(self) -> Result<Self, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = read_config(&path)?;
        Ok(overlay!(self, file;
            output, format, workers, seed, family, k, v, lambda, omega0, cycles, level, method, rtol, atol,
            coeffs, duration, kappa_amplitude, kappa_omega, kappa_phase, power, cutoff, amplitude, drive_omega,
            inequality, n_max, length, temperature, rate, samples, modes, unity_tol, cases,
        ))
    }
}

fn read_config(path: &Path) -> Result<Params, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
}
