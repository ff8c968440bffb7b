//! `spherequant`: fit entropic Monge–Kantorovich quantile maps on the sphere
//! and derive contours, signs, depths and scale curves.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{RawConfig, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] spherequant::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "spherequant", version, about = "Entropic Monge–Kantorovich quantiles for spherical data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a synthetic sample (`law`, `n`, `kappa`, `mean`) into sample.csv.
    Simulate(Settings),
    /// Fit the potential of `input`; writes potential.csv and potential.json.
    Fit(Settings),
    /// Apply Q̂ (`direction = q`) or F̂ (`direction = f`) to `points`; writes map.csv.
    Map(Settings),
    /// Quantile contours at each `tau`; writes contours.json.
    Contours(Settings),
    /// Sign curves around the estimated pole; writes signs.json.
    Signs(Settings),
    /// Depth of `points` (default: the input sample); writes depth.csv.
    Depth(Settings),
    /// Scale curve over `alphas`; writes scale_curve.csv.
    ScaleCurve(Settings),
    /// Map error against the closed-form vMF quantile map across `eps_grid`; writes mse.csv.
    ExperimentMse(Settings),
    /// Scale curves with planted outliers; writes outliers.csv.
    ExperimentOutliers(Settings),
}

/// Every config key is also a flag; flags override the config file.
#[derive(Debug, Clone, Default, Args)]
struct Settings {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    band_limit: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    n_iters: Option<String>,
    #[arg(long)]
    batch: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    n_uniform: Option<String>,
    /// Sample layout: auto, xyz or lonlat.
    #[arg(long)]
    format: Option<String>,
    /// Coefficient file of a fitted potential.
    #[arg(long)]
    potential: Option<String>,
    /// Query points for `map` and `depth`.
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    direction: Option<String>,
    #[arg(long)]
    law: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    mean: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated quantile orders.
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    n_points: Option<String>,
    #[arg(long)]
    n_signs: Option<String>,
    #[arg(long)]
    sign_points: Option<String>,
    #[arg(long)]
    alphas: Option<String>,
    #[arg(long)]
    n_eval: Option<String>,
    #[arg(long)]
    eps_grid: Option<String>,
    #[arg(long)]
    repeats: Option<String>,
    #[arg(long)]
    outlier_counts: Option<String>,
    #[arg(long)]
    outlier_kappa: Option<String>,
    #[arg(long)]
    outlier_center: Option<String>,
}

impl Settings {
    fn flags(&self) -> [(&'static str, &Option<String>); 29] {
        [
            ("input", &self.input),
            ("output", &self.output),
            ("epsilon", &self.epsilon),
            ("band_limit", &self.band_limit),
            ("gamma", &self.gamma),
            ("alpha", &self.alpha),
            ("n_iters", &self.n_iters),
            ("batch", &self.batch),
            ("seed", &self.seed),
            ("n_uniform", &self.n_uniform),
            ("format", &self.format),
            ("potential", &self.potential),
            ("points", &self.points),
            ("direction", &self.direction),
            ("law", &self.law),
            ("kappa", &self.kappa),
            ("mean", &self.mean),
            ("n", &self.n),
            ("tau", &self.tau),
            ("n_points", &self.n_points),
            ("n_signs", &self.n_signs),
            ("sign_points", &self.sign_points),
            ("alphas", &self.alphas),
            ("n_eval", &self.n_eval),
            ("eps_grid", &self.eps_grid),
            ("repeats", &self.repeats),
            ("outlier_counts", &self.outlier_counts),
            ("outlier_kappa", &self.outlier_kappa),
            ("outlier_center", &self.outlier_center),
        ]
    }

    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::load(path)?,
            None => RawConfig::default(),
        };
        for (key, value) in self.flags() {
            if let Some(v) = value {
                raw.set(key, v.clone());
            }
        }
        RunConfig::from_raw(&raw)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (settings, action): (&Settings, fn(&RunConfig) -> Result<(), CliError>) = match &cli.command {
        Command::Simulate(s) => (s, commands::simulate),
        Command::Fit(s) => (s, commands::fit),
        Command::Map(s) => (s, commands::map),
        Command::Contours(s) => (s, commands::contours),
        Command::Signs(s) => (s, commands::signs),
        Command::Depth(s) => (s, commands::depth),
        Command::ScaleCurve(s) => (s, commands::scale_curve),
        Command::ExperimentMse(s) => (s, commands::experiment_mse),
        Command::ExperimentOutliers(s) => (s, commands::experiment_outliers),
    };
    let config = settings.resolve()?;
    action(&config)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
