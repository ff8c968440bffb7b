//! Real spherical harmonics, orthonormal with respect to the surface measure.
//!
//! For `m > 0` the real basis is `√2 N_l^m P_l^m(cos θ) cos(mφ)`, for `m < 0`
//! it is `√2 N_l^{|m|} P_l^{|m|}(cos θ) sin(|m|φ)` and `m = 0` keeps
//! `N_l^0 P_l^0(cos θ)`, with `N_l^m = √((2l+1)/(4π) (l−m)!/(l+m)!)` and the
//! Condon–Shortley phase inside `P_l^m`. In terms of the complex harmonics,
//! `Y_{l,m} = √2 Re Y_l^{|m|}` for `m > 0` and `Y_{l,m} = √2 Im Y_l^{|m|}`
//! for `m < 0`, so a real function with complex coefficients `f_l^m` has real
//! coefficients `√2 Re f_l^m`, `−√2 Im f_l^{|m|}` and `f_l^0`.
//!
//! Point evaluation uses the Cartesian solid-harmonic recurrences: each
//! basis function is a product `Q_l^{|m|}(z, r²) · C_m(x, y)` (or `S_m`),
//! where `C_m + i S_m = (x + i y)^m`. This gives the degree-`l` homogeneous
//! extension and its Cartesian gradient without any division by `sin θ`.

mod legendre;
mod transform;

pub use legendre::{assoc_legendre, gauss_legendre, normalized_legendre_table};
pub use transform::{analyze, synthesize, QuadratureGrid, ShTransform, SphereGrid};

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{UnitVector3, Vec3};
use legendre::{recurrence_ab, sectoral_constants};

/// Flat index of `(l, m)` in a coefficient table: `l² + l + m`.
#[inline]
pub fn coeff_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Number of coefficients up to degree `band_limit`.
#[inline]
pub fn coeff_count(band_limit: usize) -> usize {
    (band_limit + 1) * (band_limit + 1)
}

/// Band-limited table of real spherical-harmonic coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicCoeffs {
    band_limit: usize,
    values: Vec<f64>,
}

impl HarmonicCoeffs {
    pub fn zeros(band_limit: usize) -> Self {
        HarmonicCoeffs {
            band_limit,
            values: vec![0.0; coeff_count(band_limit)],
        }
    }

    pub fn from_vec(band_limit: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != coeff_count(band_limit) {
            return Err(Error::Domain(format!(
                "band limit {band_limit} needs {} coefficients, got {}",
                coeff_count(band_limit),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("coefficient {bad} is not finite")));
        }
        Ok(HarmonicCoeffs { band_limit, values })
    }

    #[inline]
    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    #[inline]
    pub fn get(&self, l: usize, m: i64) -> f64 {
        self.values[coeff_index(l, m)]
    }

    #[inline]
    pub fn set(&mut self, l: usize, m: i64, v: f64) {
        self.values[coeff_index(l, m)] = v;
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Iterates `(l, m, value)` sorted by `l`, then `m`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, i64, f64)> + '_ {
        (0..=self.band_limit).flat_map(move |l| {
            let li = l as i64;
            (-li..=li).map(move |m| (l, m, self.get(l, m)))
        })
    }

    /// Truncates or zero-pads to another band limit.
    pub fn resized(&self, band_limit: usize) -> HarmonicCoeffs {
        let mut out = HarmonicCoeffs::zeros(band_limit);
        let n = coeff_count(band_limit.min(self.band_limit));
        out.values[..n].copy_from_slice(&self.values[..n]);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `t·self + (1−t)·other`.
    pub fn lerp(&self, other: &HarmonicCoeffs, t: f64) -> Result<HarmonicCoeffs> {
        if self.band_limit != other.band_limit {
            return Err(Error::BandLimitMismatch {
                expected: self.band_limit,
                found: other.band_limit,
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| t * a + (1.0 - t) * b)
            .collect();
        Ok(HarmonicCoeffs {
            band_limit: self.band_limit,
            values,
        })
    }
}

/// Precomputed recurrence constants for point evaluation up to a band limit.
#[derive(Debug, Clone)]
pub struct BasisEvaluator {
    band_limit: usize,
    sectoral: Vec<f64>,
    // (a_lm, b_lm) packed by triangular index
    ab: Vec<(f64, f64)>,
}

impl BasisEvaluator {
    pub fn new(band_limit: usize) -> Self {
        let mut ab = vec![(0.0, 0.0); legendre::tri_index(band_limit, band_limit) + 1];
        for m in 0..=band_limit {
            for l in (m + 2)..=band_limit {
                ab[legendre::tri_index(l, m)] = recurrence_ab(l, m);
            }
        }
        BasisEvaluator {
            band_limit,
            sectoral: sectoral_constants(band_limit),
            ab,
        }
    }

    #[inline]
    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    /// All basis values at `x`, in coefficient order.
    pub fn values(&self, x: &Vec3, out: &mut [f64]) {
        self.evaluate(x, out, None);
    }

    /// Basis values and Cartesian gradients of the homogeneous extensions.
    pub fn values_and_gradients(&self, x: &Vec3, out: &mut [f64], grads: &mut [Vec3]) {
        self.evaluate(x, out, Some(grads));
    }

    fn evaluate(&self, x: &Vec3, out: &mut [f64], mut grads: Option<&mut [Vec3]>) {
        let lmax = self.band_limit;
        assert_eq!(out.len(), coeff_count(lmax));
        let [px, py, pz] = *x;
        let r2 = px * px + py * py + pz * pz;
        let want_grad = grads.is_some();

        // C_m, S_m and their x/y derivatives
        let mut c_prev = 1.0;
        let mut s_prev = 0.0;
        let mut q = vec![0.0; lmax + 1];
        let mut dqz = vec![0.0; lmax + 1];
        let mut dqr = vec![0.0; lmax + 1];
        for m in 0..=lmax {
            let (cm, sm) = if m == 0 {
                (1.0, 0.0)
            } else {
                (px * c_prev - py * s_prev, px * s_prev + py * c_prev)
            };
            // ∂C_m/∂x = m C_{m−1}, ∂C_m/∂y = −m S_{m−1},
            // ∂S_m/∂x = m S_{m−1}, ∂S_m/∂y = m C_{m−1}
            let mf = m as f64;
            let (dcx, dcy, dsx, dsy) = if m == 0 {
                (0.0, 0.0, 0.0, 0.0)
            } else {
                (mf * c_prev, -mf * s_prev, mf * s_prev, mf * c_prev)
            };

            q[m] = self.sectoral[m];
            dqz[m] = 0.0;
            dqr[m] = 0.0;
            if m < lmax {
                let a = ((2 * m + 3) as f64).sqrt();
                q[m + 1] = a * pz * q[m];
                dqz[m + 1] = a * q[m];
                dqr[m + 1] = 0.0;
            }
            for l in (m + 2)..=lmax {
                let (a, b) = self.ab[legendre::tri_index(l, m)];
                q[l] = a * (pz * q[l - 1] - b * r2 * q[l - 2]);
                if want_grad {
                    dqz[l] = a * (q[l - 1] + pz * dqz[l - 1] - b * r2 * dqz[l - 2]);
                    dqr[l] = a * (pz * dqr[l - 1] - b * q[l - 2] - b * r2 * dqr[l - 2]);
                }
            }

            for l in m..=lmax {
                let (gx, gy, gz) = (2.0 * px * dqr[l], 2.0 * py * dqr[l], dqz[l] + 2.0 * pz * dqr[l]);
                if m == 0 {
                    let i = coeff_index(l, 0);
                    out[i] = q[l];
                    if let Some(g) = grads.as_deref_mut() {
                        g[i] = [gx, gy, gz];
                    }
                } else {
                    let ip = coeff_index(l, m as i64);
                    let im = coeff_index(l, -(m as i64));
                    out[ip] = SQRT_2 * q[l] * cm;
                    out[im] = SQRT_2 * q[l] * sm;
                    if let Some(g) = grads.as_deref_mut() {
                        g[ip] = [
                            SQRT_2 * (gx * cm + q[l] * dcx),
                            SQRT_2 * (gy * cm + q[l] * dcy),
                            SQRT_2 * gz * cm,
                        ];
                        g[im] = [
                            SQRT_2 * (gx * sm + q[l] * dsx),
                            SQRT_2 * (gy * sm + q[l] * dsy),
                            SQRT_2 * gz * sm,
                        ];
                    }
                }
            }
            c_prev = cm;
            s_prev = sm;
        }
    }

    /// `Σ c_l^m Y_l^m(x)`.
    pub fn eval_series(&self, coeffs: &HarmonicCoeffs, x: &UnitVector3) -> f64 {
        let mut vals = vec![0.0; coeff_count(self.band_limit)];
        self.values(x.as_array(), &mut vals);
        dot_prefix(coeffs.as_slice(), &vals)
    }

    /// `Σ c_l^m Y_l^m(x)` and `Σ c_l^m ∂Y_l^m/∂x_i`.
    pub fn eval_series_with_gradient(&self, coeffs: &HarmonicCoeffs, x: &Vec3) -> (f64, Vec3) {
        let n = coeff_count(self.band_limit);
        let mut vals = vec![0.0; n];
        let mut grads = vec![[0.0; 3]; n];
        self.values_and_gradients(x, &mut vals, &mut grads);
        let c = coeffs.as_slice();
        let k = c.len().min(n);
        let mut g = [0.0; 3];
        for i in 0..k {
            for d in 0..3 {
                g[d] += c[i] * grads[i][d];
            }
        }
        (dot_prefix(c, &vals), g)
    }
}

fn dot_prefix(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Value of a single real harmonic `Y_l^m` at `x`, optionally with the
/// Cartesian gradient of its degree-`l` homogeneous extension.
pub fn eval_ylm(l: usize, m: i64, x: &UnitVector3, with_gradient: bool) -> Result<(f64, Option<Vec3>)> {
    if m.unsigned_abs() as usize > l {
        return Err(Error::Domain(format!("order {m} exceeds degree {l}")));
    }
    let ev = BasisEvaluator::new(l);
    let n = coeff_count(l);
    let mut vals = vec![0.0; n];
    let i = coeff_index(l, m);
    if with_gradient {
        let mut grads = vec![[0.0; 3]; n];
        ev.values_and_gradients(x.as_array(), &mut vals, &mut grads);
        Ok((vals[i], Some(grads[i])))
    } else {
        ev.values(x.as_array(), &mut vals);
        Ok((vals[i], None))
    }
}

/// Series value and optional Cartesian gradient at `x`.
pub fn eval_series(coeffs: &HarmonicCoeffs, x: &UnitVector3, with_gradient: bool) -> (f64, Option<Vec3>) {
    let ev = BasisEvaluator::new(coeffs.band_limit());
    if with_gradient {
        let (v, g) = ev.eval_series_with_gradient(coeffs, x.as_array());
        (v, Some(g))
    } else {
        (ev.eval_series(coeffs, x), None)
    }
}
