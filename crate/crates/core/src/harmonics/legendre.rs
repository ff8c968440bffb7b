//! Associated Legendre functions and Gauss–Legendre quadrature.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Unnormalized associated Legendre function `P_l^m(t)` with the
/// Condon–Shortley phase, for `−l ≤ m ≤ l`.
///
/// Evaluated by the three-term recurrence in `l` started from `P_m^m`;
/// negative orders use `P_l^{−m} = (−1)^m (l−m)!/(l+m)! P_l^m`.
pub fn assoc_legendre(l: usize, m: i64, t: f64) -> Result<f64> {
    let am = m.unsigned_abs() as usize;
    if am > l {
        return Err(Error::Domain(format!("order {m} exceeds degree {l}")));
    }
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("argument {t} outside [-1, 1]")));
    }
    let p = legendre_nonneg(l, am, t);
    if m >= 0 {
        return Ok(p);
    }
    // (l−m)!/(l+m)! for the positive order
    let ratio: f64 = ((l - am + 1)..=(l + am)).map(|k| 1.0 / k as f64).product();
    let sign = if am % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * ratio * p)
}

fn legendre_nonneg(l: usize, m: usize, t: f64) -> f64 {
    let s = ((1.0 - t) * (1.0 + t)).sqrt();
    // P_m^m = (−1)^m (2m−1)!! s^m
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= -((2 * k - 1) as f64) * s;
    }
    if l == m {
        return pmm;
    }
    let mut prev = pmm;
    let mut cur = (2 * m + 1) as f64 * t * pmm;
    for ll in (m + 2)..=l {
        let next = ((2 * ll - 1) as f64 * t * cur - (ll + m - 1) as f64 * prev) / (ll - m) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// Coefficients of the normalized recurrence
/// `P̄_l^m = a_lm (t P̄_{l−1}^m − b_lm P̄_{l−2}^m)`.
#[inline]
pub(crate) fn recurrence_ab(l: usize, m: usize) -> (f64, f64) {
    let (lf, mf) = (l as f64, m as f64);
    let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
    let l1 = lf - 1.0;
    let b = ((l1 * l1 - mf * mf) / (4.0 * l1 * l1 - 1.0)).sqrt();
    (a, b)
}

/// `Q̄_m^m`: the σ-normalized `N_m^m P_m^m(cos θ) / sin^m θ`.
pub(crate) fn sectoral_constants(band_limit: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(band_limit + 1);
    let mut q = 1.0 / (4.0 * PI).sqrt();
    out.push(q);
    for m in 1..=band_limit {
        q *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
        out.push(q);
    }
    out
}

/// Packed index of `(l, m)` with `0 ≤ m ≤ l`.
#[inline]
pub(crate) fn tri_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Normalized `N_l^m P_l^m(t)` for all `0 ≤ m ≤ l ≤ band_limit`, packed by
/// [`tri_index`]. Normalization is applied inside the recurrence, so no
/// factorial ratios are ever formed.
pub fn normalized_legendre_table(band_limit: usize, t: f64) -> Vec<f64> {
    let s = ((1.0 - t) * (1.0 + t)).sqrt();
    let size = tri_index(band_limit, band_limit) + 1;
    let mut out = vec![0.0; size];
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=band_limit {
        if m > 0 {
            pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        out[tri_index(m, m)] = pmm;
        if m == band_limit {
            break;
        }
        let mut prev = pmm;
        let mut cur = ((2 * m + 3) as f64).sqrt() * t * pmm;
        out[tri_index(m + 1, m)] = cur;
        for l in (m + 2)..=band_limit {
            let (a, b) = recurrence_ab(l, m);
            let next = a * (t * cur - b * prev);
            prev = cur;
            cur = next;
            out[tri_index(l, m)] = cur;
        }
    }
    out
}

/// Gauss–Legendre nodes (ascending) and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut t = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, t);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - t * t) * dp * dp);
        nodes[n - 1 - i] = t;
        nodes[i] = -t;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact P_l^m from the Rodrigues-type formula
    /// `(−1)^m / (2^l l!) (1−t²)^{m/2} d^{l+m}/dt^{l+m} (t²−1)^l`,
    /// differentiating the polynomial coefficients exactly in i128.
    fn rodrigues_formula(l: usize, m: usize, t: f64) -> f64 {
        // (t²−1)^l = Σ_k C(l,k) (−1)^{l−k} t^{2k}
        let mut coeffs = vec![0i128; 2 * l + 1];
        let mut binom: i128 = 1;
        for k in 0..=l {
            if k > 0 {
                binom = binom * (l - k + 1) as i128 / k as i128;
            }
            let sign = if (l - k) % 2 == 0 { 1 } else { -1 };
            coeffs[2 * k] = sign * binom;
        }
        for _ in 0..(l + m) {
            let mut next = vec![0i128; coeffs.len().saturating_sub(1).max(1)];
            for (p, c) in coeffs.iter().enumerate().skip(1) {
                next[p - 1] = c * p as i128;
            }
            coeffs = next;
        }
        let poly: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(p, c)| *c as f64 * t.powi(p as i32))
            .sum();
        let fact: f64 = (1..=l).map(|k| k as f64).product();
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        sign / (2f64.powi(l as i32) * fact) * (1.0 - t * t).powf(m as f64 / 2.0) * poly
    }

    #[test]
    fn low_order_values() {
        assert_eq!(assoc_legendre(0, 0, 0.37).unwrap(), 1.0);
        assert!((assoc_legendre(1, 0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((assoc_legendre(1, 1, 0.0).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_rodrigues_formula() {
        let exact = rodrigues_formula(5, 3, 0.3);
        assert!((assoc_legendre(5, 3, 0.3).unwrap() - exact).abs() < 1e-12);
        for l in 0..9 {
            for m in 0..=l {
                for &t in &[-0.9, -0.2, 0.0, 0.45, 0.8] {
                    let e = rodrigues_formula(l, m, t);
                    let v = assoc_legendre(l, m as i64, t).unwrap();
                    assert!((v - e).abs() < 1e-10 * e.abs().max(1.0), "l={l} m={m} t={t}");
                }
            }
        }
    }

    #[test]
    fn negative_order_reflection() {
        let p = assoc_legendre(4, 2, 0.3).unwrap();
        let q = assoc_legendre(4, -2, 0.3).unwrap();
        assert!((q - p * 2.0 / 720.0).abs() < 1e-15);
        let p = assoc_legendre(3, 1, -0.6).unwrap();
        let q = assoc_legendre(3, -1, -0.6).unwrap();
        assert!((q + p / 12.0).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(assoc_legendre(2, 3, 0.0).is_err());
        assert!(assoc_legendre(2, -3, 0.0).is_err());
        assert!(assoc_legendre(2, 1, 1.5).is_err());
    }

    #[test]
    fn normalized_table_matches_direct_normalization() {
        let t = -0.35;
        let table = normalized_legendre_table(12, t);
        for l in 0..=12usize {
            for m in 0..=l {
                let ratio: f64 = ((l - m + 1)..=(l + m)).map(|k| 1.0 / k as f64).product();
                let n = ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt();
                let direct = n * assoc_legendre(l, m as i64, t).unwrap();
                assert!((table[tri_index(l, m)] - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normalized_table_is_finite_at_high_degree() {
        let table = normalized_legendre_table(128, 0.999);
        assert!(table.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1usize, 2, 5, 17, 25, 65] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }
}
