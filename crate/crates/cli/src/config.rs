//! Flat `key = value` run configuration.
//!
//! Values come from three layers: built-in defaults, an optional config
//! file, and command-line flags (highest priority). Keys use underscores;
//! the matching flag uses dashes (`band_limit` ↔ `--band-limit`).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use spherequant::experiments::{default_alpha_grid, FitSettings, MseConfig, OutlierConfig};
use spherequant::io::SampleFormat;
use spherequant::solver::SolverConfig;
use spherequant::UnitVector3;

use crate::CliError;

/// Every recognized key.
pub const KEYS: &[&str] = &[
    "epsilon",
    "band_limit",
    "gamma",
    "alpha",
    "n_iters",
    "batch",
    "seed",
    "n_uniform",
    "input",
    "output",
    "format",
    "potential",
    "points",
    "direction",
    "law",
    "kappa",
    "mean",
    "n",
    "tau",
    "n_points",
    "n_signs",
    "sign_points",
    "alphas",
    "n_eval",
    "eps_grid",
    "repeats",
    "outlier_counts",
    "outlier_kappa",
    "outlier_center",
];

/// Raw key/value pairs before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig(BTreeMap<String, String>);

impl RawConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("config line {}: expected `key = value`", i + 1)))?;
            let key = normalize_key(key);
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("config line {}: unknown key `{key}`", i + 1)));
            }
            map.insert(key, value.trim().to_string());
        }
        Ok(Self(map))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(normalize_key(key), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Config(format!("invalid value `{v}` for `{key}`"))),
        }
    }

    fn list(&self, key: &str, default: Vec<f64>) -> Result<Vec<f64>, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_list(v).map_err(|_| CliError::Config(format!("invalid list `{v}` for `{key}`"))),
        }
    }

    fn point(&self, key: &str, default: UnitVector3) -> Result<UnitVector3, CliError> {
        let Some(v) = self.get(key) else {
            return Ok(default);
        };
        let bad = || CliError::Config(format!("`{key}` must be three comma-separated reals, got `{v}`"));
        let xs = parse_list(v).map_err(|_| bad())?;
        let arr: [f64; 3] = xs.try_into().map_err(|_| bad())?;
        UnitVector3::normalize(arr).map_err(|e| CliError::Config(format!("`{key}`: {e}")))
    }
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>, T::Err> {
    v.split(',').map(|s| s.trim().parse()).collect()
}

/// Which map to apply in `map`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Quantile,
    Distribution,
}

/// Synthetic data law for `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Law {
    Uniform,
    Vmf,
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub n_uniform: usize,
    pub input: Option<PathBuf>,
    pub output: PathBuf,
    pub format: SampleFormat,
    pub potential: PathBuf,
    pub points: Option<PathBuf>,
    pub direction: Direction,
    pub law: Law,
    pub kappa: f64,
    pub mean: UnitVector3,
    pub n: usize,
    pub tau: Vec<f64>,
    pub n_points: usize,
    pub n_signs: usize,
    pub sign_points: usize,
    pub alphas: Vec<f64>,
    pub n_eval: usize,
    pub eps_grid: Vec<f64>,
    pub repeats: usize,
    pub outlier_counts: Vec<usize>,
    pub outlier_kappa: f64,
    pub outlier_center: UnitVector3,
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let d = SolverConfig::default();
        let solver = SolverConfig {
            epsilon: raw.parsed("epsilon", d.epsilon)?,
            band_limit: raw.parsed("band_limit", d.band_limit)?,
            gamma: raw.parsed("gamma", d.gamma)?,
            alpha: raw.parsed("alpha", d.alpha)?,
            n_iters: raw.parsed("n_iters", d.n_iters)?,
            batch: raw.parsed("batch", d.batch)?,
            seed: raw.parsed("seed", d.seed)?,
        };
        solver.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let output = PathBuf::from(raw.get("output").unwrap_or("."));
        let potential = raw
            .get("potential")
            .map(PathBuf::from)
            .unwrap_or_else(|| output.join("potential.csv"));
        let format = match raw.get("format") {
            None => SampleFormat::Auto,
            Some(f) => f.parse().map_err(|e: spherequant::Error| CliError::Config(e.to_string()))?,
        };
        let direction = match raw.get("direction").unwrap_or("q") {
            "q" | "quantile" => Direction::Quantile,
            "f" | "distribution" => Direction::Distribution,
            other => return Err(CliError::Config(format!("direction must be `q` or `f`, got `{other}`"))),
        };
        let law = match raw.get("law").unwrap_or("vmf") {
            "vmf" => Law::Vmf,
            "uniform" => Law::Uniform,
            other => return Err(CliError::Config(format!("law must be `vmf` or `uniform`, got `{other}`"))),
        };
        let outlier_counts = match raw.get("outlier_counts") {
            None => vec![5, 20, 50],
            Some(v) => parse_list(v).map_err(|_| CliError::Config(format!("invalid list `{v}` for `outlier_counts`")))?,
        };

        let config = Self {
            solver,
            n_uniform: raw.parsed("n_uniform", spherequant::maps::DEFAULT_N_UNIFORM)?,
            input: raw.get("input").map(PathBuf::from),
            output,
            format,
            potential,
            points: raw.get("points").map(PathBuf::from),
            direction,
            law,
            kappa: raw.parsed("kappa", 10.0)?,
            mean: raw.point("mean", UnitVector3::E3)?,
            n: raw.parsed("n", 500)?,
            tau: raw.list("tau", vec![0.1, 0.25, 0.5, 0.75, 0.9])?,
            n_points: raw.parsed("n_points", 100)?,
            n_signs: raw.parsed("n_signs", 20)?,
            sign_points: raw.parsed("sign_points", spherequant::depth::SIGN_CURVE_POINTS)?,
            alphas: raw.list("alphas", default_alpha_grid())?,
            n_eval: raw.parsed("n_eval", 4096)?,
            eps_grid: raw.list("eps_grid", MseConfig::default().eps_grid)?,
            repeats: raw.parsed("repeats", 10)?,
            outlier_counts,
            outlier_kappa: raw.parsed("outlier_kappa", 200.0)?,
            outlier_center: raw.point("outlier_center", UnitVector3::E3)?,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::Config(m));
        if self.n_uniform == 0 || self.n == 0 || self.n_eval == 0 || self.repeats == 0 {
            return fail("n, n_uniform, n_eval and repeats must be positive".into());
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) || !(self.outlier_kappa.is_finite() && self.outlier_kappa >= 0.0) {
            return fail("concentrations must be nonnegative".into());
        }
        if let Some(t) = self.tau.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return fail(format!("tau {t} outside [0, 1]"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return fail(format!("alpha grid value {a} outside [0, 1]"));
        }
        if let Some(e) = self.eps_grid.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return fail(format!("eps_grid value {e} is not positive"));
        }
        if self.n_points < 3 || self.sign_points < 2 || self.n_signs == 0 {
            return fail("n_points ≥ 3, sign_points ≥ 2 and n_signs ≥ 1 are required".into());
        }
        if self.outlier_counts.is_empty() {
            return fail("outlier_counts must be nonempty".into());
        }
        Ok(())
    }

    pub fn fit_settings(&self) -> FitSettings {
        FitSettings {
            band_limit: self.solver.band_limit,
            gamma: self.solver.gamma,
            alpha: self.solver.alpha,
            n_iters: self.solver.n_iters,
            batch: self.solver.batch,
            n_uniform: self.n_uniform,
        }
    }

    pub fn mse_config(&self) -> MseConfig {
        MseConfig {
            kappa: self.kappa,
            n: self.n,
            mean: self.mean,
            eps_grid: self.eps_grid.clone(),
            repeats: self.repeats,
            seed: self.solver.seed,
            fit: self.fit_settings(),
        }
    }

    pub fn outlier_config(&self) -> OutlierConfig {
        OutlierConfig {
            kappa: self.kappa,
            mean: self.mean,
            n_inliers: self.n,
            outlier_counts: self.outlier_counts.clone(),
            outlier_center: self.outlier_center,
            outlier_kappa: self.outlier_kappa,
            epsilon: self.solver.epsilon,
            alphas: self.alphas.clone(),
            n_eval: self.n_eval,
            seed: self.solver.seed,
            fit: self.fit_settings(),
        }
    }

    pub fn input(&self) -> Result<&Path, CliError> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::Config("this subcommand needs `input`".into()))
    }
}
