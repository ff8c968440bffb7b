//! Forward and inverse transforms on a Gauss–Legendre × equispaced grid.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::legendre::{gauss_legendre, normalized_legendre_table, tri_index};
use super::{coeff_index, HarmonicCoeffs};
use crate::error::{Error, Result};
use crate::geometry::UnitVector3;

/// Node layout of the quadrature grid for band limit `L`: `L+1` colatitudes
/// whose cosines are Gauss–Legendre nodes, and `2L+2` equispaced longitudes.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    band_limit: usize,
    theta: Vec<f64>,
    cos_theta: Vec<f64>,
    gl_weights: Vec<f64>,
    phi: Vec<f64>,
    points: Vec<UnitVector3>,
}

impl SphereGrid {
    pub fn new(band_limit: usize) -> Self {
        let n_lat = band_limit + 1;
        let n_lon = 2 * band_limit + 2;
        let (t, w) = gauss_legendre(n_lat);
        // colatitude ascending means cos θ descending
        let cos_theta: Vec<f64> = t.iter().rev().copied().collect();
        let gl_weights: Vec<f64> = w.iter().rev().copied().collect();
        let theta: Vec<f64> = cos_theta.iter().map(|c| c.acos()).collect();
        let phi: Vec<f64> = (0..n_lon).map(|k| 2.0 * PI * k as f64 / n_lon as f64).collect();
        let mut points = Vec::with_capacity(n_lat * n_lon);
        for (&ct, &th) in cos_theta.iter().zip(&theta) {
            let st = th.sin();
            for &p in &phi {
                points.push(UnitVector3::normalize_unchecked([st * p.cos(), st * p.sin(), ct]));
            }
        }
        SphereGrid {
            band_limit,
            theta,
            cos_theta,
            gl_weights,
            phi,
            points,
        }
    }

    #[inline]
    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    #[inline]
    pub fn n_lat(&self) -> usize {
        self.theta.len()
    }

    #[inline]
    pub fn n_lon(&self) -> usize {
        self.phi.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Gauss–Legendre weights `a_j` (sum to 2), aligned with [`Self::theta`].
    pub fn gl_weights(&self) -> &[f64] {
        &self.gl_weights
    }

    /// Node positions, row-major in (colatitude, longitude).
    pub fn points(&self) -> &[UnitVector3] {
        &self.points
    }

    /// Probability weight of a node in ring `j` under the uniform measure.
    #[inline]
    pub fn mu_weight(&self, j: usize) -> f64 {
        self.gl_weights[j] / (2.0 * self.n_lon() as f64)
    }

    /// Probability weights of all nodes, aligned with [`Self::points`].
    pub fn mu_weights(&self) -> Vec<f64> {
        let k = self.n_lon();
        (0..self.len()).map(|i| self.mu_weight(i / k)).collect()
    }

    /// Quadrature estimate of `∫ f dμ` for node values `f`.
    pub fn mean(&self, values: &[f64]) -> f64 {
        let k = self.n_lon();
        values
            .chunks(k)
            .enumerate()
            .map(|(j, row)| self.mu_weight(j) * row.iter().sum::<f64>())
            .sum()
    }
}

/// Function values sampled on a [`SphereGrid`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    band_limit: usize,
    values: Vec<f64>,
}

impl QuadratureGrid {
    pub fn zeros(band_limit: usize) -> Self {
        let n = (band_limit + 1) * (2 * band_limit + 2);
        QuadratureGrid {
            band_limit,
            values: vec![0.0; n],
        }
    }

    pub fn from_values(band_limit: usize, values: Vec<f64>) -> Result<Self> {
        let n = (band_limit + 1) * (2 * band_limit + 2);
        if values.len() != n {
            return Err(Error::Domain(format!(
                "grid for band limit {band_limit} needs {n} values, got {}",
                values.len()
            )));
        }
        Ok(QuadratureGrid { band_limit, values })
    }

    /// Samples `f` at the nodes of `grid`.
    pub fn from_fn(grid: &SphereGrid, f: impl Fn(&UnitVector3) -> f64) -> Self {
        QuadratureGrid {
            band_limit: grid.band_limit(),
            values: grid.points().iter().map(f).collect(),
        }
    }

    #[inline]
    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Reusable transform with precomputed Legendre tables and FFT plans.
#[derive(Clone)]
pub struct ShTransform {
    grid: SphereGrid,
    // normalized Legendre table per ring, packed by tri_index
    legendre: Vec<Vec<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ShTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShTransform")
            .field("band_limit", &self.grid.band_limit)
            .finish()
    }
}

impl ShTransform {
    pub fn new(band_limit: usize) -> Self {
        let grid = SphereGrid::new(band_limit);
        let legendre = grid
            .cos_theta
            .iter()
            .map(|&t| normalized_legendre_table(band_limit, t))
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n_lon());
        let inverse = planner.plan_fft_inverse(grid.n_lon());
        ShTransform {
            grid,
            legendre,
            forward,
            inverse,
        }
    }

    #[inline]
    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    #[inline]
    pub fn band_limit(&self) -> usize {
        self.grid.band_limit
    }

    /// Coefficients `∫ f Y_l^m dσ`, exact when `f` has degree at most `L`.
    pub fn analyze(&self, f: &QuadratureGrid) -> Result<HarmonicCoeffs> {
        let lmax = self.band_limit();
        if f.band_limit() != lmax {
            return Err(Error::BandLimitMismatch {
                expected: lmax,
                found: f.band_limit(),
            });
        }
        let k = self.grid.n_lon();
        let dphi = 2.0 * PI / k as f64;
        let mut out = HarmonicCoeffs::zeros(lmax);
        let c = out.as_mut_slice();
        let mut buf = vec![Complex::new(0.0, 0.0); k];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        for (j, row) in f.values().chunks(k).enumerate() {
            for (b, &v) in buf.iter_mut().zip(row) {
                *b = Complex::new(v, 0.0);
            }
            self.forward.process_with_scratch(&mut buf, &mut scratch);
            let table = &self.legendre[j];
            let a = self.grid.gl_weights[j] * dphi;
            // ∫ f cos mφ dφ ≈ Δφ Re F_m, ∫ f sin mφ dφ ≈ −Δφ Im F_m
            for m in 0..=lmax {
                let (re, im) = (buf[m].re, buf[m].im);
                if m == 0 {
                    for l in 0..=lmax {
                        c[coeff_index(l, 0)] += a * re * table[tri_index(l, 0)];
                    }
                } else {
                    let mi = m as i64;
                    for l in m..=lmax {
                        let p = SQRT_2 * a * table[tri_index(l, m)];
                        c[coeff_index(l, mi)] += p * re;
                        c[coeff_index(l, -mi)] -= p * im;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Values of `Σ c_l^m Y_l^m` at the grid nodes. Coefficients above the
    /// transform's band limit are ignored; missing ones count as zero.
    pub fn synthesize(&self, coeffs: &HarmonicCoeffs) -> QuadratureGrid {
        let lmax = self.band_limit();
        let lc = coeffs.band_limit().min(lmax);
        let k = self.grid.n_lon();
        let mut values = Vec::with_capacity(self.grid.len());
        let mut buf = vec![Complex::new(0.0, 0.0); k];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.inverse.get_inplace_scratch_len()];
        for table in &self.legendre {
            buf.iter_mut().for_each(|b| *b = Complex::new(0.0, 0.0));
            for m in 0..=lc {
                let (mut alpha, mut beta) = (0.0, 0.0);
                let mi = m as i64;
                for l in m..=lc {
                    let p = table[tri_index(l, m)];
                    alpha += coeffs.get(l, mi) * p;
                    if m > 0 {
                        beta += coeffs.get(l, -mi) * p;
                    }
                }
                if m > 0 {
                    alpha *= SQRT_2;
                    beta *= SQRT_2;
                }
                // Re Σ (α − iβ) e^{imφ} = α cos mφ + β sin mφ
                buf[m] = Complex::new(alpha, -beta);
            }
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            values.extend(buf.iter().map(|b| b.re));
        }
        QuadratureGrid {
            band_limit: lmax,
            values,
        }
    }
}

/// One-shot forward transform; prefer [`ShTransform`] when called repeatedly.
pub fn analyze(f: &QuadratureGrid) -> Result<HarmonicCoeffs> {
    ShTransform::new(f.band_limit()).analyze(f)
}

/// One-shot inverse transform at the coefficients' own band limit.
pub fn synthesize(coeffs: &HarmonicCoeffs) -> QuadratureGrid {
    ShTransform::new(coeffs.band_limit()).synthesize(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::{coeff_count, BasisEvaluator};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_coeffs(band_limit: usize, seed: u64) -> HarmonicCoeffs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..coeff_count(band_limit)).map(|_| rng.random_range(-1.0..1.0)).collect();
        HarmonicCoeffs::from_vec(band_limit, v).unwrap()
    }

    #[test]
    fn grid_layout() {
        let g = SphereGrid::new(6);
        assert_eq!(g.n_lat(), 7);
        assert_eq!(g.n_lon(), 14);
        assert!((g.gl_weights().iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert!(g.theta().windows(2).all(|w| w[0] < w[1]));
        assert!(g.theta()[0] > 0.0 && *g.theta().last().unwrap() < PI);
        assert!((g.mu_weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_function() {
        let t = ShTransform::new(8);
        let ones = QuadratureGrid::from_fn(t.grid(), |_| 1.0);
        let c = t.analyze(&ones).unwrap();
        assert!((c.get(0, 0) - (4.0 * PI).sqrt()).abs() < 1e-12);
        assert!(c.as_slice()[1..].iter().all(|v| v.abs() < 1e-12));

        let mut c = HarmonicCoeffs::zeros(8);
        c.set(0, 0, (4.0 * PI).sqrt());
        assert!(t.synthesize(&c).values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(t
            .synthesize(&HarmonicCoeffs::zeros(8))
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn single_harmonic_is_recovered() {
        let t = ShTransform::new(7);
        let ev = BasisEvaluator::new(7);
        let idx = coeff_index(3, 2);
        let f = QuadratureGrid::from_fn(t.grid(), |x| {
            let mut v = vec![0.0; coeff_count(7)];
            ev.values(x.as_array(), &mut v);
            v[idx]
        });
        let c = t.analyze(&f).unwrap();
        for (i, v) in c.as_slice().iter().enumerate() {
            let expected = if i == idx { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-12, "index {i}: {v}");
        }
    }

    #[test]
    fn roundtrip_and_pointwise_agreement() {
        let t = ShTransform::new(32);
        let c = random_coeffs(32, 3);
        let f = t.synthesize(&c);
        let back = t.analyze(&f).unwrap();
        let err = c
            .as_slice()
            .iter()
            .zip(back.as_slice())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(err < 1e-10, "roundtrip error {err}");

        let ev = BasisEvaluator::new(32);
        for i in (0..t.grid().len()).step_by(97) {
            let direct = ev.eval_series(&c, &t.grid().points()[i]);
            assert!((direct - f.values()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn parseval() {
        let t = ShTransform::new(12);
        let c = random_coeffs(12, 9);
        let f = t.synthesize(&c);
        let sq: Vec<f64> = f.values().iter().map(|v| v * v).collect();
        let integral = 4.0 * PI * t.grid().mean(&sq);
        let sum: f64 = c.as_slice().iter().map(|v| v * v).sum();
        assert!((integral - sum).abs() < 1e-8 * sum);
    }

    #[test]
    fn band_limit_mismatch_is_rejected() {
        let t = ShTransform::new(4);
        assert!(t.analyze(&QuadratureGrid::zeros(5)).is_err());
        assert!(QuadratureGrid::from_values(2, vec![0.0; 5]).is_err());
    }
}
