//! Semi-dual entropic transport between the uniform measure and a target
//! `ν`, solved by stochastic gradient descent on harmonic coefficients.
//!
//! The potential `u` is pinned by `∫ u dμ = 0`, i.e. its `(0,0)` coefficient
//! stays zero. For one observation `x`, the per-sample objective is
//! `h(u) = −u^{c,ε}(x)` with
//! `u^{c,ε}(x) = −ε log ∫ exp((u(z) − c(z,x))/ε) dμ(z)`, whose coefficient
//! gradient is `∫ g_{u,x} Y_l^m dμ` for the normalized density `g_{u,x}`.

mod sinkhorn;

pub use sinkhorn::{sinkhorn_semidiscrete_oracle, SinkhornSolution};

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::distributions::SphericalSample;
use crate::error::{Error, Result};
use crate::geometry::{cost, UnitVector3};
use crate::harmonics::{HarmonicCoeffs, QuadratureGrid, ShTransform};
use crate::rng::{stream_rng, Stream};

const OBJECTIVE_WINDOW: usize = 100;

/// Hyperparameters of [`fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub band_limit: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub n_iters: usize,
    pub batch: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 0.1,
            band_limit: 24,
            gamma: 1.0,
            alpha: 0.51,
            n_iters: 20_000,
            batch: 1,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Domain(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.band_limit == 0 || self.band_limit > 128 {
            return Err(Error::Domain(format!(
                "band limit must lie in 1..=128, got {}",
                self.band_limit
            )));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::Domain(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (1/2, 1), got {}", self.alpha)));
        }
        if self.batch == 0 {
            return Err(Error::Domain("batch must be at least 1".into()));
        }
        Ok(())
    }
}

/// A fitted dual potential with its fit metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialEstimate {
    pub coeffs: HarmonicCoeffs,
    pub epsilon: f64,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl PotentialEstimate {
    /// A potential with no fit history, e.g. `u ≡ 0`.
    pub fn from_coeffs(coeffs: HarmonicCoeffs, epsilon: f64) -> Self {
        let defaults = SolverConfig::default();
        PotentialEstimate {
            coeffs,
            epsilon,
            objective_trace: Vec::new(),
            iterations: 0,
            gamma: defaults.gamma,
            alpha: defaults.alpha,
            seed: 0,
        }
    }

    pub fn band_limit(&self) -> usize {
        self.coeffs.band_limit()
    }
}

/// `w_l^m = 1/(l² + m²)`, with `w_0^0 = 0` for the pinned coefficient.
pub fn weight_sequence(band_limit: usize) -> HarmonicCoeffs {
    let mut w = HarmonicCoeffs::zeros(band_limit);
    for l in 1..=band_limit {
        let li = l as i64;
        for m in -li..=li {
            w.set(l, m, 1.0 / (li * li + m * m) as f64);
        }
    }
    w
}

/// Quadrature discretization of the semi-dual problem at one band limit and
/// regularization strength.
#[derive(Debug, Clone)]
pub struct SemiDualProblem {
    transform: ShTransform,
    epsilon: f64,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
}

impl SemiDualProblem {
    pub fn new(band_limit: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
        }
        let transform = ShTransform::new(band_limit);
        let weights = transform.grid().mu_weights();
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(SemiDualProblem {
            transform,
            epsilon,
            weights,
            log_weights,
        })
    }

    pub fn transform(&self) -> &ShTransform {
        &self.transform
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn band_limit(&self) -> usize {
        self.transform.band_limit()
    }

    /// Values of `u` at the grid nodes.
    pub fn potential_on_grid(&self, u: &HarmonicCoeffs) -> QuadratureGrid {
        self.transform.synthesize(u)
    }

    /// `u^{c,ε}(y)` from grid values of `u`.
    pub fn conjugate_from_grid(&self, u_grid: &[f64], y: &UnitVector3) -> f64 {
        let eps = self.epsilon;
        let points = self.transform.grid().points();
        let mut max = f64::NEG_INFINITY;
        let exps: Vec<f64> = points
            .iter()
            .zip(u_grid)
            .zip(&self.log_weights)
            .map(|((z, u), lw)| {
                let e = (u - cost(z, y)) / eps + lw;
                max = max.max(e);
                e
            })
            .collect();
        let sum: f64 = exps.iter().map(|e| (e - max).exp()).sum();
        -eps * (max + sum.ln())
    }

    /// `u^{c,ε}(y)` for a coefficient table.
    pub fn smooth_conjugate(&self, u: &HarmonicCoeffs, y: &UnitVector3) -> f64 {
        let grid = self.potential_on_grid(u);
        self.conjugate_from_grid(grid.values(), y)
    }

    /// Density `g_{u,x}` at the grid nodes (quadrature mean 1), together with
    /// `u^{c,ε}(x)`.
    pub fn density_from_grid(&self, u_grid: &[f64], x: &UnitVector3) -> (Vec<f64>, f64) {
        let eps = self.epsilon;
        let points = self.transform.grid().points();
        let exps: Vec<f64> = points
            .iter()
            .zip(u_grid)
            .map(|(z, u)| (u - cost(z, x)) / eps)
            .collect();
        let max = exps.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let mut g: Vec<f64> = exps.iter().map(|e| (e - max).exp()).collect();
        let mean: f64 = g.iter().zip(&self.weights).map(|(v, w)| v * w).sum();
        g.iter_mut().for_each(|v| *v /= mean);
        (g, -eps * (max + mean.ln()))
    }

    /// Coefficient gradient of `u ↦ −u^{c,ε}(x)` and the value `−u^{c,ε}(x)`.
    pub fn gradient(&self, u: &HarmonicCoeffs, x: &UnitVector3) -> Result<(HarmonicCoeffs, f64)> {
        let grid = self.potential_on_grid(u);
        let (g, conj) = self.density_from_grid(grid.values(), x);
        Ok((self.density_coefficients(g)?, -conj))
    }

    /// `∫ g Y_l^m dμ` for grid values of `g`.
    fn density_coefficients(&self, g: Vec<f64>) -> Result<HarmonicCoeffs> {
        let mut c = self
            .transform
            .analyze(&QuadratureGrid::from_values(self.band_limit(), g)?)?;
        c.as_mut_slice().iter_mut().for_each(|v| *v /= 4.0 * PI);
        Ok(c)
    }

    /// `û − γ (w ⊙ ∇)` averaged over `batch`, with the `(0,0)` entry reset.
    pub fn sgd_step(
        &self,
        u: &HarmonicCoeffs,
        batch: &[UnitVector3],
        step: f64,
        weights: &HarmonicCoeffs,
    ) -> Result<HarmonicCoeffs> {
        let grid = self.potential_on_grid(u);
        let (next, _) = self.sgd_step_on_grid(u, grid.values(), batch, step, weights, 0)?;
        Ok(next)
    }

    fn sgd_step_on_grid(
        &self,
        u: &HarmonicCoeffs,
        u_grid: &[f64],
        batch: &[UnitVector3],
        step: f64,
        weights: &HarmonicCoeffs,
        iteration: usize,
    ) -> Result<(HarmonicCoeffs, f64)> {
        if weights.band_limit() != u.band_limit() || u.band_limit() != self.band_limit() {
            return Err(Error::BandLimitMismatch {
                expected: self.band_limit(),
                found: if weights.band_limit() != self.band_limit() {
                    weights.band_limit()
                } else {
                    u.band_limit()
                },
            });
        }
        let mut g_sum = vec![0.0; u_grid.len()];
        let mut h_sum = 0.0;
        for x in batch {
            let (g, conj) = self.density_from_grid(u_grid, x);
            g_sum.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
            h_sum -= conj;
        }
        let b = batch.len().max(1) as f64;
        g_sum.iter_mut().for_each(|v| *v /= b);
        let grad = self.density_coefficients(g_sum)?;
        let mut next = u.clone();
        for ((c, gr), w) in next
            .as_mut_slice()
            .iter_mut()
            .zip(grad.as_slice())
            .zip(weights.as_slice())
        {
            if !gr.is_finite() {
                return Err(Error::NonFiniteGradient { iteration });
            }
            *c -= step * w * gr;
        }
        next.set(0, 0, 0.0);
        Ok((next, h_sum / b))
    }

    /// `‖u − (u^{c,ε})^{c,ε}‖_∞` over the grid nodes, the first conjugate
    /// taken against the quadrature and the second against the empirical
    /// measure of `sample`.
    pub fn fixed_point_defect(&self, u: &HarmonicCoeffs, sample: &SphericalSample) -> f64 {
        let grid = self.potential_on_grid(u);
        let eps = self.epsilon;
        let v: Vec<f64> = sample
            .iter()
            .map(|x| self.conjugate_from_grid(grid.values(), x))
            .collect();
        let log_n = (sample.len() as f64).ln();
        self.transform
            .grid()
            .points()
            .iter()
            .zip(grid.values())
            .map(|(z, uz)| {
                let exps: Vec<f64> = sample
                    .iter()
                    .zip(&v)
                    .map(|(x, vx)| (vx - cost(z, x)) / eps)
                    .collect();
                let back = -eps * (log_sum_exp(&exps) - log_n);
                (uz - back).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `log Σ exp(a_i)` with max-subtraction.
pub fn log_sum_exp(a: &[f64]) -> f64 {
    let max = a.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + a.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `u^{c,ε}(y)` by quadrature at the band limit of `u`.
pub fn smooth_conjugate_grid(u: &HarmonicCoeffs, y: &UnitVector3, eps: f64) -> Result<f64> {
    Ok(SemiDualProblem::new(u.band_limit(), eps)?.smooth_conjugate(u, y))
}

/// The normalized density `g_{u,x}` on the grid of `u`'s band limit.
pub fn g_on_grid(u: &HarmonicCoeffs, x_obs: &UnitVector3, eps: f64) -> Result<QuadratureGrid> {
    let problem = SemiDualProblem::new(u.band_limit(), eps)?;
    let grid = problem.potential_on_grid(u);
    let (g, _) = problem.density_from_grid(grid.values(), x_obs);
    QuadratureGrid::from_values(u.band_limit(), g)
}

/// Stochastic semi-dual fit on `data`, cycled with per-epoch reshuffling.
pub fn fit(data: &SphericalSample, config: &SolverConfig) -> Result<PotentialEstimate> {
    fit_with_monitor(data, config, |_, _| {})
}

/// [`fit`] with a callback receiving every iterate.
pub fn fit_with_monitor(
    data: &SphericalSample,
    config: &SolverConfig,
    mut monitor: impl FnMut(usize, &HarmonicCoeffs),
) -> Result<PotentialEstimate> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Domain("cannot fit an empty sample".into()));
    }
    let problem = SemiDualProblem::new(config.band_limit, config.epsilon)?;
    let weights = weight_sequence(config.band_limit);
    let mut rng = stream_rng(config.seed, Stream::Solver);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0;

    let mut u = HarmonicCoeffs::zeros(config.band_limit);
    let mut u_grid = problem.potential_on_grid(&u);
    let mut window = std::collections::VecDeque::with_capacity(OBJECTIVE_WINDOW);
    let mut window_sum = 0.0;
    let mut trace = Vec::with_capacity(config.n_iters);
    let mut batch = Vec::with_capacity(config.batch);

    for n in 1..=config.n_iters {
        batch.clear();
        for _ in 0..config.batch {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            batch.push(data.points[order[cursor]]);
            cursor += 1;
        }
        let step = config.gamma * (n as f64).powf(-config.alpha);
        let (next, h) = problem.sgd_step_on_grid(&u, u_grid.values(), &batch, step, &weights, n)?;
        if !h.is_finite() {
            return Err(Error::NonFiniteGradient { iteration: n });
        }
        u = next;
        u_grid = problem.potential_on_grid(&u);

        window.push_back(h);
        window_sum += h;
        if window.len() > OBJECTIVE_WINDOW {
            window_sum -= window.pop_front().unwrap_or(0.0);
        }
        trace.push(window_sum / window.len() as f64);
        monitor(n, &u);
    }

    Ok(PotentialEstimate {
        coeffs: u,
        epsilon: config.epsilon,
        objective_trace: trace,
        iterations: config.n_iters,
        gamma: config.gamma,
        alpha: config.alpha,
        seed: config.seed,
    })
}
