//! Canned simulation studies: ground-truth map accuracy across ε and the
//! effect of planted outliers on scale curves.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::{estimate_pole, scale_curve};
use crate::distributions::{sample_uniform, sample_vmf, RotInvariantLaw, SphericalSample};
use crate::error::{Error, Result};
use crate::geometry::{cost, UnitVector3};
use crate::io::fmt_f64;
use crate::maps::{EntropicMapContext, DEFAULT_N_UNIFORM};
use crate::rng::{replicate_seed, stream_seed, Stream};
use crate::solver::{fit, SolverConfig};

/// Settings shared by fits inside an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub band_limit: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub n_iters: usize,
    pub batch: usize,
    pub n_uniform: usize,
}

impl Default for FitSettings {
    fn default() -> Self {
        let solver = SolverConfig::default();
        Self {
            band_limit: solver.band_limit,
            gamma: 4.0,
            alpha: solver.alpha,
            n_iters: solver.n_iters,
            batch: solver.batch,
            n_uniform: DEFAULT_N_UNIFORM,
        }
    }
}

impl FitSettings {
    pub fn solver(&self, epsilon: f64, seed: u64) -> SolverConfig {
        SolverConfig {
            epsilon,
            band_limit: self.band_limit,
            gamma: self.gamma,
            alpha: self.alpha,
            n_iters: self.n_iters,
            batch: self.batch,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        self.solver(1.0, 0).validate()?;
        if self.n_uniform == 0 {
            return Err(Error::Domain("n_uniform must be positive".into()));
        }
        Ok(())
    }
}

/// Fits `data` and builds the map context, with all randomness drawn from
/// named streams of `seed`.
pub fn fit_context(data: &SphericalSample, epsilon: f64, settings: &FitSettings, seed: u64) -> Result<EntropicMapContext> {
    let potential = fit(data, &settings.solver(epsilon, seed))?;
    EntropicMapContext::new(potential, data, settings.n_uniform, stream_seed(seed, Stream::Uniform))
}

/// `R_n(Q̂) = (1/n) Σ c(Q(x_i), Q̂(x_i))` over the points `xs`.
pub fn map_mse(
    truth: impl Fn(&UnitVector3) -> UnitVector3 + Sync,
    estimate: impl Fn(&UnitVector3) -> Result<UnitVector3> + Sync,
    xs: &[UnitVector3],
) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Domain("mean-squared error needs evaluation points".into()));
    }
    let total = xs
        .par_iter()
        .map(|x| Ok(cost(&truth(x), &estimate(x)?)))
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum::<f64>();
    Ok(total / xs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseConfig {
    pub kappa: f64,
    pub n: usize,
    pub mean: UnitVector3,
    pub eps_grid: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
    pub fit: FitSettings,
}

impl Default for MseConfig {
    fn default() -> Self {
        Self {
            kappa: 10.0,
            n: 500,
            mean: UnitVector3::E3,
            eps_grid: vec![0.01, 0.03, 0.05, 0.09, 0.15, 0.2],
            repeats: 10,
            seed: 0,
            fit: FitSettings::default(),
        }
    }
}

impl MseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::Domain(format!("kappa must be nonnegative, got {}", self.kappa)));
        }
        if self.n == 0 || self.repeats == 0 || self.eps_grid.is_empty() {
            return Err(Error::Domain("n, repeats and the epsilon grid must be nonempty".into()));
        }
        if let Some(e) = self.eps_grid.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::Domain(format!("epsilon must be positive, got {e}")));
        }
        self.fit.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub epsilon: f64,
    pub repeat: usize,
    pub mse: f64,
}

/// One repeat at one ε: the data and evaluation points depend only on the
/// repeat, so every ε sees the same sample.
pub fn mse_replicate(config: &MseConfig, epsilon: f64, repeat: usize) -> Result<MseRow> {
    let seed = replicate_seed(config.seed, repeat as u64);
    let law = RotInvariantLaw::von_mises_fisher(config.mean, config.kappa)?;
    let data = sample_vmf(&config.mean, config.kappa, config.n, stream_seed(seed, Stream::Data))?;
    let ctx = fit_context(&data, epsilon, &config.fit, seed)?;
    let xs = sample_uniform(config.n, stream_seed(seed, Stream::Evaluation));
    let mse = map_mse(|x| law.closed_form_q(x), |x| ctx.map_q(x), &xs.points)?;
    Ok(MseRow { epsilon, repeat, mse })
}

/// Runs the study ε by ε, repeats in parallel, handing rows to `on_row` in
/// `(epsilon, repeat)` order as soon as each ε completes.
pub fn run_mse_experiment_with(config: &MseConfig, mut on_row: impl FnMut(&MseRow) -> Result<()>) -> Result<Vec<MseRow>> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.eps_grid.len() * config.repeats);
    for &eps in &config.eps_grid {
        let batch = (0..config.repeats)
            .into_par_iter()
            .map(|r| mse_replicate(config, eps, r))
            .collect::<Vec<_>>();
        for row in batch {
            let row = row?;
            on_row(&row)?;
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn run_mse_experiment(config: &MseConfig) -> Result<Vec<MseRow>> {
    run_mse_experiment_with(config, |_| Ok(()))
}

pub fn write_mse_header<W: Write>(w: &mut W) -> Result<()> {
    writeln!(w, "epsilon,repeat,mse")?;
    Ok(())
}

pub fn write_mse_row<W: Write>(w: &mut W, row: &MseRow) -> Result<()> {
    writeln!(w, "{},{},{}", fmt_f64(row.epsilon), row.repeat, fmt_f64(row.mse))?;
    w.flush()?;
    Ok(())
}

/// Median of the MSE over repeats, per ε in grid order.
pub fn median_mse_by_epsilon(rows: &[MseRow], eps_grid: &[f64]) -> Vec<(f64, f64)> {
    eps_grid
        .iter()
        .map(|&e| {
            let mut v: Vec<f64> = rows.iter().filter(|r| r.epsilon == e).map(|r| r.mse).collect();
            (e, median(&mut v))
        })
        .collect()
}

pub fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        (v[k - 1] + v[k]) / 2.0
    }
}

/// Quantile orders `0.05, 0.10, …, 1.0`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 / 20.0).collect()
}

/// Fit, estimate the pole, and compute the scale curve against a fresh
/// uniform sample of size `n_eval`.
pub fn fitted_scale_curve(
    data: &SphericalSample,
    epsilon: f64,
    settings: &FitSettings,
    alphas: &[f64],
    n_eval: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let ctx = fit_context(data, epsilon, settings, seed)?;
    let pole = estimate_pole(&ctx, data)?;
    let u = sample_uniform(n_eval, stream_seed(seed, Stream::Evaluation));
    scale_curve(&ctx, alphas, &u, &pole)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierConfig {
    pub kappa: f64,
    pub mean: UnitVector3,
    pub n_inliers: usize,
    pub outlier_counts: Vec<usize>,
    pub outlier_center: UnitVector3,
    pub outlier_kappa: f64,
    pub epsilon: f64,
    pub alphas: Vec<f64>,
    pub n_eval: usize,
    pub seed: u64,
    pub fit: FitSettings,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        Self {
            kappa: 15.0,
            mean: UnitVector3::E2,
            n_inliers: 500,
            outlier_counts: vec![5, 20, 50],
            outlier_center: UnitVector3::E3,
            outlier_kappa: 200.0,
            epsilon: 0.1,
            alphas: default_alpha_grid(),
            n_eval: 4096,
            seed: 0,
            fit: FitSettings::default(),
        }
    }
}

impl OutlierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_inliers == 0 || self.outlier_counts.is_empty() || self.alphas.is_empty() || self.n_eval == 0 {
            return Err(Error::Domain("outlier experiment needs inliers, outlier counts, alphas and evaluation points".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Domain(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        RotInvariantLaw::von_mises_fisher(self.mean, self.kappa)?;
        RotInvariantLaw::von_mises_fisher(self.outlier_center, self.outlier_kappa)?;
        self.fit.validate()
    }

    /// The common inliers followed by the first `count` planted outliers.
    pub fn contaminated_sample(&self, count: usize) -> Result<SphericalSample> {
        let mut points = sample_vmf(&self.mean, self.kappa, self.n_inliers, stream_seed(self.seed, Stream::Data))?.points;
        let max = self.outlier_counts.iter().copied().max().unwrap_or(0).max(count);
        let outliers = sample_vmf(
            &self.outlier_center,
            self.outlier_kappa,
            max,
            stream_seed(self.seed, Stream::Outliers),
        )?;
        points.extend_from_slice(&outliers.points[..count]);
        Ok(SphericalSample::new(points))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierRow {
    pub n_outliers: usize,
    pub alpha: f64,
    pub volume: f64,
}

/// Scale curves of the contaminated samples, one per outlier count. Inliers,
/// solver and evaluation streams are shared across counts.
pub fn run_outlier_experiment(config: &OutlierConfig) -> Result<Vec<OutlierRow>> {
    config.validate()?;
    let curves = config
        .outlier_counts
        .par_iter()
        .map(|&count| {
            let data = config.contaminated_sample(count)?;
            let curve = fitted_scale_curve(&data, config.epsilon, &config.fit, &config.alphas, config.n_eval, config.seed)?;
            Ok(curve
                .into_iter()
                .map(|(alpha, volume)| OutlierRow {
                    n_outliers: count,
                    alpha,
                    volume,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(curves.into_iter().flatten().collect())
}

pub fn write_outlier_rows<W: Write>(mut w: W, rows: &[OutlierRow]) -> Result<()> {
    writeln!(w, "n_outliers,alpha,volume")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.n_outliers, fmt_f64(r.alpha), fmt_f64(r.volume))?;
    }
    w.flush()?;
    Ok(())
}
