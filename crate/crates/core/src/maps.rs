//! Entropic quantile and distribution maps built from a fitted potential.
//!
//! Both maps are tangent-space softmax averages pushed through the
//! exponential map. `Q̂(x)` averages `Log_x X_j` over the target atoms with
//! weights `∝ exp((v_j − c(x, X_j))/ε)`, where `v = û^{c,ε}` is cached on
//! the atoms; `F̂(z)` averages `Log_z U_i` over reference atoms with
//! weights `∝ exp((û(U_i) − c(U_i, z))/ε)`.
//!
//! Costs are extended off the sphere through `t = ⟨x, z⟩`, so Euclidean
//! derivatives in the ambient coordinates are well defined.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distributions::SphericalSample;
use crate::error::{Error, Result};
use crate::geometry::{cost, cross, dot, exp_map, outer, tangent_project, Mat3, UnitVector3, Vec3};
use crate::harmonics::{BasisEvaluator, HarmonicCoeffs, SphereGrid};
use crate::solver::{log_sum_exp, PotentialEstimate};

/// Terms whose atom lies within this angle of the antipode are dropped.
const ANTIPODAL_GAP: f64 = 1e-6;

/// Default size of the Monte-Carlo reference sample.
pub const DEFAULT_N_UNIFORM: usize = 4096;

/// Derivatives in `x` of `c(x, z) = d(t)²/2` with `t = ⟨x, z⟩`:
/// `∂c/∂x = −d/sin d · z` and `∂²c/∂x² = (sin d − d cos d)/sin³ d · z zᵀ`.
pub fn cost_derivatives(x: &UnitVector3, z: &UnitVector3) -> Result<(Vec3, Mat3)> {
    if x.dot(z) <= -1.0 + 1e-12 {
        return Err(Error::antipodal(x, z));
    }
    Ok(cost_derivatives_ambient(x.as_array(), z.as_array()))
}

/// [`cost_derivatives`] at an arbitrary point `x` of the ambient space.
pub fn cost_derivatives_ambient(x: &Vec3, z: &Vec3) -> (Vec3, Mat3) {
    let (d, s) = angle_and_sine(x, z);
    let (first, second) = cost_factors(d, s);
    let g = [-first * z[0], -first * z[1], -first * z[2]];
    let mut h = outer(z, z);
    h.iter_mut().flatten().for_each(|v| *v *= second);
    (g, h)
}

/// `d = atan2(s, t)` with `s² = 1 − t²` written as `‖x × z‖² + 1 − ‖x‖²`
/// (for unit `z`), which keeps precision at small angles.
#[inline]
fn angle_and_sine(x: &Vec3, z: &Vec3) -> (f64, f64) {
    let t = dot(x, z);
    let c = cross(x, z);
    let s2 = dot(&c, &c) + (1.0 - dot(x, x));
    let s = s2.max(0.0).sqrt();
    (s.atan2(t), s)
}

/// `(d / sin d, (sin d − d cos d) / sin³ d)`, with series near `d = 0`.
#[inline]
fn cost_factors(d: f64, s: f64) -> (f64, f64) {
    if d < 0.1 {
        let d2 = d * d;
        let sinc = 1.0 - d2 / 6.0 + d2 * d2 / 120.0 - d2 * d2 * d2 / 5040.0;
        let num = 1.0 / 3.0 - d2 / 30.0 + d2 * d2 / 840.0 - d2 * d2 * d2 / 45_360.0;
        (1.0 / sinc, num / (sinc * sinc * sinc))
    } else {
        (d / s, (s - d * d.cos()) / (s * s * s))
    }
}

/// `−ε log Σ_i w_i exp((û(U_i) − c(U_i, z))/ε)` for the uniform weights
/// `w_i = 1/N`.
pub fn empirical_c_transform(
    potential: &PotentialEstimate,
    uniform_sample: &SphericalSample,
    z: &UnitVector3,
    eps: f64,
) -> Result<f64> {
    if uniform_sample.is_empty() {
        return Err(Error::Domain("empirical conjugate needs a nonempty sample".into()));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {eps}")));
    }
    let ev = BasisEvaluator::new(potential.band_limit());
    let terms: Vec<f64> = uniform_sample
        .iter()
        .map(|u| (ev.eval_series(&potential.coeffs, u) - cost(u, z)) / eps)
        .collect();
    let log_n = (uniform_sample.len() as f64).ln();
    Ok(-eps * (log_sum_exp(&terms) - log_n))
}

/// Coefficientwise `t·p1 + (1−t)·p2`.
pub fn interpolate_potentials(p1: &PotentialEstimate, p2: &PotentialEstimate, t: f64) -> Result<PotentialEstimate> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("interpolation weight {t} outside [0, 1]")));
    }
    if p1.epsilon != p2.epsilon {
        return Err(Error::Domain(format!(
            "cannot blend potentials with epsilon {} and {}",
            p1.epsilon, p2.epsilon
        )));
    }
    let coeffs = p1.coeffs.lerp(&p2.coeffs, t)?;
    Ok(PotentialEstimate {
        coeffs,
        objective_trace: Vec::new(),
        iterations: 0,
        ..p1.clone()
    })
}

/// Weighted atoms of a discrete measure.
#[derive(Debug, Clone)]
struct Atoms {
    points: Vec<UnitVector3>,
    log_weights: Vec<f64>,
}

impl Atoms {
    fn uniform(sample: &SphericalSample) -> Self {
        let lw = -(sample.len() as f64).ln();
        Atoms {
            points: sample.points.clone(),
            log_weights: vec![lw; sample.len()],
        }
    }

    fn weighted(points: Vec<UnitVector3>, weights: &[f64]) -> Self {
        Atoms {
            points,
            log_weights: weights.iter().map(|w| w.ln()).collect(),
        }
    }

    fn len(&self) -> usize {
        self.points.len()
    }
}

/// Softmax weights of a tangent average, restricted to non-antipodal atoms.
struct Softmax {
    // (atom index, normalized weight)
    terms: Vec<(usize, f64)>,
    dropped: usize,
    // −ε log Σ_j exp(offset_j − c_j/ε), over kept atoms
    conjugate: f64,
}

/// Result of one map evaluation.
#[derive(Debug, Clone, Copy)]
pub struct MapEvaluation {
    pub point: UnitVector3,
    /// Norm of the tangent average before the exponential map.
    pub tangent_norm: f64,
    /// Number of antipodal terms left out of the average.
    pub dropped: usize,
}

/// A fitted potential together with the target and reference samples and
/// the potentials cached on both.
#[derive(Debug)]
pub struct EntropicMapContext {
    potential: PotentialEstimate,
    epsilon: f64,
    target: Atoms,
    reference: Atoms,
    // û(U_i)/ε + log w_i
    reference_offsets: Vec<f64>,
    // û^{c,ε}(X_j)
    target_conjugate: Vec<f64>,
    // v_j/ε + log w_j
    target_offsets: Vec<f64>,
    u_at_reference: Vec<f64>,
    evaluator: BasisEvaluator,
    dropped: AtomicUsize,
}

impl EntropicMapContext {
    /// Context with `n_uniform` Monte-Carlo reference points drawn from
    /// `uniform_seed`.
    pub fn new(
        potential: PotentialEstimate,
        target: &SphericalSample,
        n_uniform: usize,
        uniform_seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(uniform_seed);
        let points = (0..n_uniform).map(|_| UnitVector3::random(&mut rng)).collect();
        Self::with_uniform_sample(potential, target, &SphericalSample::new(points))
    }

    /// Context using a given reference sample with equal weights.
    pub fn with_uniform_sample(
        potential: PotentialEstimate,
        target: &SphericalSample,
        uniform: &SphericalSample,
    ) -> Result<Self> {
        if target.is_empty() || uniform.is_empty() {
            return Err(Error::Domain("map context needs nonempty samples".into()));
        }
        Self::build(potential, Atoms::uniform(target), Atoms::uniform(uniform))
    }

    /// Context whose reference measure is the quadrature rule of `grid`
    /// instead of a Monte-Carlo sample; the target may carry weights
    /// (`None` means equal weights).
    pub fn with_quadrature(
        potential: PotentialEstimate,
        target: &SphericalSample,
        target_weights: Option<&[f64]>,
        grid: &SphereGrid,
    ) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::Domain("map context needs a nonempty target".into()));
        }
        let target = match target_weights {
            None => Atoms::uniform(target),
            Some(w) => {
                if w.len() != target.len() || w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::Domain("target weights must be positive, one per point".into()));
                }
                let total: f64 = w.iter().sum();
                let normalized: Vec<f64> = w.iter().map(|v| v / total).collect();
                Atoms::weighted(target.points.clone(), &normalized)
            }
        };
        let reference = Atoms::weighted(grid.points().to_vec(), &grid.mu_weights());
        Self::build(potential, target, reference)
    }

    fn build(potential: PotentialEstimate, target: Atoms, reference: Atoms) -> Result<Self> {
        let eps = potential.epsilon;
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::Domain(format!("epsilon must be positive, got {eps}")));
        }
        let evaluator = BasisEvaluator::new(potential.band_limit());
        let u_at_reference: Vec<f64> = reference
            .points
            .par_iter()
            .map(|p| evaluator.eval_series(&potential.coeffs, p))
            .collect();
        let reference_offsets: Vec<f64> = u_at_reference
            .iter()
            .zip(&reference.log_weights)
            .map(|(u, lw)| u / eps + lw)
            .collect();
        let target_conjugate: Vec<f64> = target
            .points
            .par_iter()
            .map(|x| {
                let terms: Vec<f64> = reference
                    .points
                    .iter()
                    .zip(&reference_offsets)
                    .map(|(u, off)| off - cost(u, x) / eps)
                    .collect();
                -eps * log_sum_exp(&terms)
            })
            .collect();
        if target_conjugate.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { iteration: 0 });
        }
        let target_offsets = target_conjugate
            .iter()
            .zip(&target.log_weights)
            .map(|(v, lw)| v / eps + lw)
            .collect();
        Ok(EntropicMapContext {
            potential,
            epsilon: eps,
            target,
            reference,
            reference_offsets,
            target_conjugate,
            target_offsets,
            u_at_reference,
            evaluator,
            dropped: AtomicUsize::new(0),
        })
    }

    pub fn potential(&self) -> &PotentialEstimate {
        &self.potential
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn target_points(&self) -> &[UnitVector3] {
        &self.target.points
    }

    pub fn reference_points(&self) -> &[UnitVector3] {
        &self.reference.points
    }

    /// Cached `û^{c,ε}(X_j)`.
    pub fn target_conjugate(&self) -> &[f64] {
        &self.target_conjugate
    }

    /// Cached `û(U_i)`.
    pub fn potential_at_reference(&self) -> &[f64] {
        &self.u_at_reference
    }

    /// Total antipodal terms dropped by all evaluations so far.
    pub fn dropped_terms(&self) -> usize {
        self.dropped.load(Ordering::Relaxed)
    }

    /// Value of the fitted series `û(x)`.
    pub fn potential_value(&self, x: &UnitVector3) -> f64 {
        self.evaluator.eval_series(&self.potential.coeffs, x)
    }

    /// `û^{c,ε}(z)` against the reference measure.
    pub fn conjugate_value(&self, z: &UnitVector3) -> f64 {
        let terms: Vec<f64> = self
            .reference
            .points
            .iter()
            .zip(&self.reference_offsets)
            .map(|(u, off)| off - cost(u, z) / self.epsilon)
            .collect();
        -self.epsilon * log_sum_exp(&terms)
    }

    /// `(v)^{c,ε}(x)` against the target measure, the potential implied by
    /// the cached conjugate.
    pub fn target_side_potential(&self, x: &UnitVector3) -> f64 {
        let terms: Vec<f64> = self
            .target
            .points
            .iter()
            .zip(&self.target_offsets)
            .map(|(p, off)| off - cost(x, p) / self.epsilon)
            .collect();
        -self.epsilon * log_sum_exp(&terms)
    }

    /// Plan density `exp((u(x) − c(x,z) + v(z))/ε)`, with `u` taken as the
    /// target-side conjugate of the cached `v`, so that its average over
    /// the target atoms is 1.
    pub fn g_eps_density(&self, x: &UnitVector3, z: &UnitVector3) -> f64 {
        let u = self.target_side_potential(x);
        let v = self.conjugate_value(z);
        ((u - cost(x, z) + v) / self.epsilon).exp()
    }

    fn softmax(&self, x: &Vec3, atoms: &Atoms, offsets: &[f64]) -> Result<Softmax> {
        let eps = self.epsilon;
        let mut terms = Vec::with_capacity(atoms.len());
        let mut dropped = 0;
        for (j, (p, off)) in atoms.points.iter().zip(offsets).enumerate() {
            let (d, _) = angle_and_sine(x, p.as_array());
            if d > PI - ANTIPODAL_GAP {
                dropped += 1;
                continue;
            }
            terms.push((j, off - 0.5 * d * d / eps));
        }
        if terms.is_empty() {
            return Err(Error::DegenerateAverage { query: *x });
        }
        let max = terms.iter().fold(f64::NEG_INFINITY, |m, t| m.max(t.1));
        let mut sum = 0.0;
        for t in terms.iter_mut() {
            t.1 = (t.1 - max).exp();
            sum += t.1;
        }
        terms.iter_mut().for_each(|t| t.1 /= sum);
        if dropped > 0 {
            self.dropped.fetch_add(dropped, Ordering::Relaxed);
        }
        Ok(Softmax {
            terms,
            dropped,
            conjugate: -eps * (max + sum.ln()),
        })
    }

    /// Softmax weights of `Q̂(x)` over the target atoms (zero for dropped
    /// atoms).
    pub fn target_weights(&self, x: &UnitVector3) -> Result<Vec<f64>> {
        let sm = self.softmax(x.as_array(), &self.target, &self.target_offsets)?;
        let mut w = vec![0.0; self.target.len()];
        for (j, v) in sm.terms {
            w[j] = v;
        }
        Ok(w)
    }

    /// Softmax weights of `F̂(z)` over the reference atoms.
    pub fn reference_weights(&self, z: &UnitVector3) -> Result<Vec<f64>> {
        let sm = self.softmax(z.as_array(), &self.reference, &self.reference_offsets)?;
        let mut w = vec![0.0; self.reference.len()];
        for (j, v) in sm.terms {
            w[j] = v;
        }
        Ok(w)
    }

    fn gradient_from(&self, x: &Vec3, atoms: &Atoms, sm: &Softmax) -> Vec3 {
        let mut g = [0.0; 3];
        for &(j, w) in &sm.terms {
            let p = atoms.points[j].as_array();
            let (d, s) = angle_and_sine(x, p);
            let f = cost_factors(d, s).0;
            for k in 0..3 {
                g[k] -= w * f * p[k];
            }
        }
        g
    }

    fn hessian_from(&self, x: &Vec3, atoms: &Atoms, sm: &Softmax) -> Mat3 {
        let eps = self.epsilon;
        let grad = self.gradient_from(x, atoms, sm);
        let mut h = outer(&grad, &grad);
        h.iter_mut().flatten().for_each(|v| *v /= eps);
        for &(j, w) in &sm.terms {
            let p = atoms.points[j].as_array();
            let (dc, d2c) = cost_derivatives_ambient(x, p);
            for a in 0..3 {
                for b in 0..3 {
                    h[a][b] += w * (d2c[a][b] - dc[a] * dc[b] / eps);
                }
            }
        }
        for a in 0..3 {
            for b in (a + 1)..3 {
                let m = 0.5 * (h[a][b] + h[b][a]);
                h[a][b] = m;
                h[b][a] = m;
            }
        }
        h
    }

    fn map_from(&self, x: &UnitVector3, atoms: &Atoms, offsets: &[f64]) -> Result<MapEvaluation> {
        let sm = self.softmax(x.as_array(), atoms, offsets)?;
        let grad = self.gradient_from(x.as_array(), atoms, &sm);
        // Σ w Log_x(X) = −ρ_x(∂u/∂x)
        let v = tangent_project(x, &[-grad[0], -grad[1], -grad[2]]);
        Ok(MapEvaluation {
            point: exp_map(&v),
            tangent_norm: v.norm(),
            dropped: sm.dropped,
        })
    }

    /// Empirical entropic quantile map `Q̂(x)`.
    pub fn map_q(&self, x: &UnitVector3) -> Result<UnitVector3> {
        Ok(self.map_q_detailed(x)?.point)
    }

    pub fn map_q_detailed(&self, x: &UnitVector3) -> Result<MapEvaluation> {
        self.map_from(x, &self.target, &self.target_offsets)
    }

    /// Empirical entropic distribution map `F̂(z)`.
    pub fn map_f(&self, z: &UnitVector3) -> Result<UnitVector3> {
        Ok(self.map_f_detailed(z)?.point)
    }

    pub fn map_f_detailed(&self, z: &UnitVector3) -> Result<MapEvaluation> {
        self.map_from(z, &self.reference, &self.reference_offsets)
    }

    /// Closed-form Euclidean gradient of `u_ε = (v)^{c,ε}` at `x`.
    pub fn grad_u_eps(&self, x: &UnitVector3) -> Result<Vec3> {
        self.grad_u_eps_ambient(x.as_array())
    }

    /// [`Self::grad_u_eps`] at any ambient point with `|⟨x, X_j⟩| ≤ 1`.
    pub fn grad_u_eps_ambient(&self, x: &Vec3) -> Result<Vec3> {
        let sm = self.softmax(x, &self.target, &self.target_offsets)?;
        Ok(self.gradient_from(x, &self.target, &sm))
    }

    /// Closed-form Euclidean gradient of `û^{c,ε}` at `z`.
    pub fn grad_u_ceps(&self, z: &UnitVector3) -> Result<Vec3> {
        self.grad_u_ceps_ambient(z.as_array())
    }

    pub fn grad_u_ceps_ambient(&self, z: &Vec3) -> Result<Vec3> {
        let sm = self.softmax(z, &self.reference, &self.reference_offsets)?;
        Ok(self.gradient_from(z, &self.reference, &sm))
    }

    /// Closed-form Euclidean Hessian of `u_ε` at `x`:
    /// `Σ_j ĝ_j [∂²c_j − ∂c_j ∂c_jᵀ/ε] + ∂u ∂uᵀ/ε`.
    pub fn hessian_u_eps(&self, x: &UnitVector3) -> Result<Mat3> {
        self.hessian_u_eps_ambient(x.as_array())
    }

    pub fn hessian_u_eps_ambient(&self, x: &Vec3) -> Result<Mat3> {
        let sm = self.softmax(x, &self.target, &self.target_offsets)?;
        Ok(self.hessian_from(x, &self.target, &sm))
    }

    /// Closed-form Euclidean Hessian of `û^{c,ε}` at `z`.
    pub fn hessian_u_ceps(&self, z: &UnitVector3) -> Result<Mat3> {
        let sm = self.softmax(z.as_array(), &self.reference, &self.reference_offsets)?;
        Ok(self.hessian_from(z.as_array(), &self.reference, &sm))
    }

    /// `u_ε(x) = (v)^{c,ε}(x)` as computed by the softmax (same value as
    /// [`Self::target_side_potential`] up to dropped antipodal terms).
    pub fn u_eps_ambient(&self, x: &Vec3) -> Result<f64> {
        Ok(self.softmax(x, &self.target, &self.target_offsets)?.conjugate)
    }

    /// Coefficients of the fitted series, for series-side derivatives.
    pub fn coeffs(&self) -> &HarmonicCoeffs {
        &self.potential.coeffs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{sample_uniform, sample_vmf};
    use crate::geometry::{geodesic_distance, log_map, norm, sub};
    use crate::harmonics::{HarmonicCoeffs, SphereGrid};
    use rand::SeedableRng;

    fn zero_potential(l: usize, eps: f64) -> PotentialEstimate {
        PotentialEstimate::from_coeffs(HarmonicCoeffs::zeros(l), eps)
    }

    #[test]
    fn cost_first_derivative() {
        let (g, _) = cost_derivatives(&UnitVector3::E1, &UnitVector3::E2).unwrap();
        assert!((norm(&g) - PI / 2.0).abs() < 1e-14);
        let x = UnitVector3::normalize([0.3, 0.1, 0.9]).unwrap();
        // at z = x the limit is −z, whose tangential part vanishes
        let (g, _) = cost_derivatives(&x, &x).unwrap();
        assert!(norm(&sub(&g, &[-x.x(), -x.y(), -x.z()])) < 1e-15);
        assert!(cost_derivatives(&x, &-x).is_err());
    }

    #[test]
    fn cost_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = |x: &Vec3, z: &Vec3| {
            let (d, _) = angle_and_sine(x, z);
            0.5 * d * d
        };
        for _ in 0..50 {
            let x = UnitVector3::random(&mut rng);
            let z = UnitVector3::random(&mut rng);
            if geodesic_distance(&x, &z) > 3.0 || geodesic_distance(&x, &z) < 0.05 {
                continue;
            }
            let (g, h) = cost_derivatives(&x, &z).unwrap();
            let step = 1e-6;
            for k in 0..3 {
                let mut p = x.to_array();
                let mut m = x.to_array();
                p[k] += step;
                m[k] -= step;
                let fd = (c(&p, z.as_array()) - c(&m, z.as_array())) / (2.0 * step);
                assert!((fd - g[k]).abs() < 1e-6);
                let (gp, _) = cost_derivatives_ambient(&p, z.as_array());
                let (gm, _) = cost_derivatives_ambient(&m, z.as_array());
                for a in 0..3 {
                    let fd2 = (gp[a] - gm[a]) / (2.0 * step);
                    assert!((fd2 - h[a][k]).abs() < 1e-5, "{fd2} vs {}", h[a][k]);
                }
            }
        }
    }

    #[test]
    fn small_angle_series_is_continuous() {
        for d in [0.0999999, 0.1000001] {
            let (a, b) = cost_factors(d, d.sin());
            assert!((a - d / d.sin()).abs() < 1e-12);
            assert!((b - (d.sin() - d * d.cos()) / d.sin().powi(3)).abs() < 1e-9);
        }
        assert_eq!(cost_factors(0.0, 0.0), (1.0, 1.0 / 3.0));
    }

    #[test]
    fn single_atom_target() {
        let target = SphericalSample::new(vec![UnitVector3::normalize([1.0, 1.0, 0.2]).unwrap()]);
        let ctx = EntropicMapContext::new(zero_potential(4, 0.3), &target, 256, 1).unwrap();
        let x = UnitVector3::normalize([-0.2, 0.4, 0.9]).unwrap();
        let q = ctx.map_q(&x).unwrap();
        assert!(geodesic_distance(&q, &target.points[0]) < 1e-12);
        // antipodal query: every term is dropped
        assert!(matches!(
            ctx.map_q(&-target.points[0]),
            Err(Error::DegenerateAverage { .. })
        ));
    }

    #[test]
    fn uniform_target_gives_near_identity() {
        let grid = SphereGrid::new(24);
        let target = SphericalSample::new(grid.points().to_vec());
        let w = grid.mu_weights();
        let ctx = EntropicMapContext::with_quadrature(zero_potential(24, 0.5), &target, Some(&w), &grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let x = UnitVector3::random(&mut rng);
            assert!(geodesic_distance(&ctx.map_q(&x).unwrap(), &x) < 1e-3);
            assert!(geodesic_distance(&ctx.map_f(&x).unwrap(), &x) < 1e-3);
            let g = ctx.grad_u_eps(&x).unwrap();
            assert!(tangent_project(&x, &g).norm() < 1e-3);
            let h = ctx.hessian_u_eps(&x).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    assert!((h[a][b] - h[b][a]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn weights_and_tangent_average() {
        let data = sample_vmf(&UnitVector3::E3, 5.0, 200, 2).unwrap();
        let ctx = EntropicMapContext::new(zero_potential(6, 0.2), &data, 512, 3).unwrap();
        let x = UnitVector3::normalize([0.5, -0.5, 0.2]).unwrap();
        let w = ctx.target_weights(&x).unwrap();
        assert!(w.iter().all(|v| *v >= 0.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let rw = ctx.reference_weights(&x).unwrap();
        assert!((rw.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        // gradient projects to minus the tangent average
        let g = ctx.grad_u_eps(&x).unwrap();
        let avg = data.iter().zip(&w).fold([0.0; 3], |acc, (p, wj)| {
            let l = log_map(&x, p).unwrap();
            [acc[0] + wj * l.vector()[0], acc[1] + wj * l.vector()[1], acc[2] + wj * l.vector()[2]]
        });
        let proj = tangent_project(&x, &g);
        for k in 0..3 {
            assert!((proj.vector()[k] + avg[k]).abs() < 1e-12);
        }
        let eval = ctx.map_q_detailed(&x).unwrap();
        assert!(eval.tangent_norm <= PI - 1e-6);
        assert_eq!(eval.dropped, 0);
    }

    #[test]
    fn density_averages_to_one_over_target() {
        let data = sample_vmf(&UnitVector3::E1, 3.0, 100, 5).unwrap();
        let ctx = EntropicMapContext::new(zero_potential(4, 0.4), &data, 300, 6).unwrap();
        let x = UnitVector3::normalize([0.1, 0.7, -0.3]).unwrap();
        let mean = data
            .iter()
            .zip(ctx.target_conjugate())
            .map(|(z, v)| ((ctx.target_side_potential(&x) - cost(&x, z) + v) / ctx.epsilon()).exp())
            .sum::<f64>()
            / data.len() as f64;
        assert!((mean - 1.0).abs() < 1e-8);
        assert!(ctx.g_eps_density(&x, &data.points[0]) > 0.0);

        let flat = EntropicMapContext::new(zero_potential(4, 1e3), &data, 300, 6).unwrap();
        assert!((flat.g_eps_density(&x, &UnitVector3::E2) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn empirical_conjugate() {
        let zero = zero_potential(4, 0.5);
        let single = SphericalSample::new(vec![UnitVector3::E2]);
        let v = empirical_c_transform(&zero, &single, &UnitVector3::E1, 0.5).unwrap();
        assert!((v - cost(&UnitVector3::E2, &UnitVector3::E1)).abs() < 1e-12);

        let big = sample_uniform(10_000, 8);
        let mc = empirical_c_transform(&zero, &big, &UnitVector3::E3, 0.5).unwrap();
        let quad = crate::solver::smooth_conjugate_grid(&HarmonicCoeffs::zeros(24), &UnitVector3::E3, 0.5).unwrap();
        assert!((mc - quad).abs() < 2e-2);

        let mut shifted = zero.clone();
        shifted.coeffs.set(0, 0, 0.3 * (4.0 * PI).sqrt());
        let s = empirical_c_transform(&shifted, &big, &UnitVector3::E3, 0.5).unwrap();
        assert!((s - (mc - 0.3)).abs() < 1e-10);
    }

    #[test]
    fn interpolation() {
        let mut a = zero_potential(3, 0.2);
        a.coeffs.set(2, 1, 1.0);
        let b = zero_potential(3, 0.2);
        assert_eq!(interpolate_potentials(&a, &b, 1.0).unwrap().coeffs, a.coeffs);
        assert_eq!(interpolate_potentials(&a, &b, 0.0).unwrap().coeffs, b.coeffs);
        assert_eq!(interpolate_potentials(&a, &a, 0.5).unwrap().coeffs, a.coeffs);
        assert!(interpolate_potentials(&a, &zero_potential(4, 0.2), 0.5).is_err());
        assert!(interpolate_potentials(&a, &zero_potential(3, 0.3), 0.5).is_err());
    }
}
