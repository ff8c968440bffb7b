//! Samplers on S² and closed-form quantile/distribution maps of laws that
//! are invariant under rotations about an axis.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{self, dot, norm, rodrigues_rotation, scale, sub, UnitVector3};

/// An ordered collection of points on the sphere.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SphericalSample {
    pub points: Vec<UnitVector3>,
    pub seed: Option<u64>,
}

impl SphericalSample {
    pub fn new(points: Vec<UnitVector3>) -> Self {
        SphericalSample { points, seed: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, UnitVector3> {
        self.points.iter()
    }

    /// Applies a rotation to every point.
    pub fn rotated(&self, rotation: &geometry::Rotation3) -> SphericalSample {
        SphericalSample {
            points: self.points.iter().map(|p| rotation.rotate(p)).collect(),
            seed: self.seed,
        }
    }
}

impl From<Vec<UnitVector3>> for SphericalSample {
    fn from(points: Vec<UnitVector3>) -> Self {
        SphericalSample::new(points)
    }
}

/// `n` uniform points.
pub fn sample_uniform(n: usize, seed: u64) -> SphericalSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SphericalSample {
        points: (0..n).map(|_| UnitVector3::random(&mut rng)).collect(),
        seed: Some(seed),
    }
}

/// `n` draws from the von Mises–Fisher law with mean `mu` and concentration
/// `kappa`.
pub fn sample_vmf(mu: &UnitVector3, kappa: f64, n: usize, seed: u64) -> Result<SphericalSample> {
    let law = RotInvariantLaw::von_mises_fisher(*mu, kappa)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(SphericalSample {
        points: (0..n).map(|_| law.sample_one(&mut rng)).collect(),
        seed: Some(seed),
    })
}

/// `n` draws from a finite mixture. The component labels come from a
/// separate stream, so a one-component mixture reproduces the plain sampler.
pub fn sample_mixture(components: &[(f64, RotInvariantLaw)], n: usize, seed: u64) -> Result<SphericalSample> {
    if components.is_empty() {
        return Err(Error::Domain("mixture needs at least one component".into()));
    }
    if components.iter().any(|(w, _)| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Domain("mixture weights must be nonnegative".into()));
    }
    let total: f64 = components.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("mixture weights sum to {total}, not 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = ChaCha8Rng::seed_from_u64(seed);
    labels.set_stream(1);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = labels.random();
        let mut acc = 0.0;
        // fall back to the last component with positive weight
        let mut chosen = components.iter().rposition(|(w, _)| *w > 0.0).unwrap_or(0);
        for (i, (w, _)) in components.iter().enumerate() {
            acc += w;
            if u < acc && *w > 0.0 {
                chosen = i;
                break;
            }
        }
        points.push(components[chosen].1.sample_one(&mut rng));
    }
    Ok(SphericalSample {
        points,
        seed: Some(seed),
    })
}

/// Angular part `f` of a rotation-invariant density `∝ f(⟨z, θ⟩)`.
#[derive(Clone)]
pub enum AngularFunction {
    /// `f ≡ 1`.
    Uniform,
    /// `f(s) = exp(κ s)`.
    VonMisesFisher { kappa: f64 },
    /// Any positive integrable function on `[−1, 1]`.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for AngularFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngularFunction::Uniform => write!(f, "Uniform"),
            AngularFunction::VonMisesFisher { kappa } => write!(f, "VonMisesFisher {{ kappa: {kappa} }}"),
            AngularFunction::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// A law on S² whose density depends only on the latitude `⟨z, axis⟩`.
#[derive(Debug, Clone)]
pub struct RotInvariantLaw {
    axis: UnitVector3,
    angular: AngularFunction,
    // ∫_{−1}^{1} f, for custom angular functions
    total: f64,
}

const SIMPSON_TOL: f64 = 1e-10;

impl RotInvariantLaw {
    pub fn uniform(axis: UnitVector3) -> Self {
        RotInvariantLaw {
            axis,
            angular: AngularFunction::Uniform,
            total: 2.0,
        }
    }

    pub fn von_mises_fisher(axis: UnitVector3, kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::Domain(format!("concentration must be nonnegative, got {kappa}")));
        }
        Ok(RotInvariantLaw {
            axis,
            angular: AngularFunction::VonMisesFisher { kappa },
            total: f64::NAN,
        })
    }

    /// Law with a user-supplied angular function, which must be positive.
    pub fn custom(axis: UnitVector3, f: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> Result<Self> {
        for i in 0..=64 {
            let s = -1.0 + 2.0 * i as f64 / 64.0;
            let v = f(s);
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("angular function is not positive at {s}: {v}")));
            }
        }
        let total = adaptive_simpson(&*f, -1.0, 1.0, SIMPSON_TOL);
        Ok(RotInvariantLaw {
            axis,
            angular: AngularFunction::Custom(f),
            total,
        })
    }

    #[inline]
    pub fn axis(&self) -> UnitVector3 {
        self.axis
    }

    pub fn angular(&self) -> &AngularFunction {
        &self.angular
    }

    /// Same angular part about another axis.
    pub fn with_axis(&self, axis: UnitVector3) -> Self {
        RotInvariantLaw { axis, ..self.clone() }
    }

    /// `F_f(r) = ∫_{−1}^r f / ∫_{−1}^1 f`.
    pub fn cdf(&self, r: f64) -> f64 {
        let r = r.clamp(-1.0, 1.0);
        self.cdf_pair(1.0 + r, 1.0 - r).0
    }

    /// `F_f^*(r) = 2 F_f(r) − 1`, the pseudo-latitude after transport.
    pub fn cdf_star(&self, r: f64) -> f64 {
        let (p, q) = self.cdf_pair(1.0 + r.clamp(-1.0, 1.0), 1.0 - r.clamp(-1.0, 1.0));
        p - q
    }

    /// `F_f^{−1}(p)`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let (a, b) = self.quantile_pair(p, 1.0 - p);
        if a < b {
            a - 1.0
        } else {
            1.0 - b
        }
    }

    /// `(F_f^*)^{−1}(s)`.
    pub fn quantile_star(&self, s: f64) -> f64 {
        self.quantile((s.clamp(-1.0, 1.0) + 1.0) / 2.0)
    }

    /// `(F(r), 1 − F(r))` from `a = 1 + r` and `b = 1 − r`; both parts are
    /// computed directly so neither tail loses relative precision.
    fn cdf_pair(&self, a: f64, b: f64) -> (f64, f64) {
        match &self.angular {
            AngularFunction::Uniform => (a / 2.0, b / 2.0),
            AngularFunction::VonMisesFisher { kappa } => {
                let k = *kappa;
                if k < 1e-8 {
                    return (a / 2.0, b / 2.0);
                }
                let d = -(-2.0 * k).exp_m1();
                let lower = (-k * b).exp() * -(-k * a).exp_m1() / d;
                let upper = -(-k * b).exp_m1() / d;
                (lower, upper)
            }
            AngularFunction::Custom(f) => {
                let r = if a < b { a - 1.0 } else { 1.0 - b };
                let lower = adaptive_simpson(&**f, -1.0, r, SIMPSON_TOL) / self.total;
                let upper = adaptive_simpson(&**f, r, 1.0, SIMPSON_TOL) / self.total;
                (lower, upper)
            }
        }
    }

    /// Inverse of [`Self::cdf_pair`]: `(1 + r, 1 − r)` with `F(r) = p` where
    /// `q = 1 − p` is supplied separately for precision.
    fn quantile_pair(&self, p: f64, q: f64) -> (f64, f64) {
        match &self.angular {
            AngularFunction::Uniform => (2.0 * p, 2.0 * q),
            AngularFunction::VonMisesFisher { kappa } => {
                let k = *kappa;
                if k < 1e-8 {
                    return (2.0 * p, 2.0 * q);
                }
                if p <= q {
                    let a = if k < 300.0 {
                        (p * (2.0 * k).exp_m1()).ln_1p() / k
                    } else {
                        2.0 + (p + q * (-2.0 * k).exp()).ln() / k
                    };
                    let a = a.clamp(0.0, 2.0);
                    (a, 2.0 - a)
                } else {
                    let d = -(-2.0 * k).exp_m1();
                    let b = (-(-q * d).ln_1p() / k).clamp(0.0, 2.0);
                    (2.0 - b, b)
                }
            }
            AngularFunction::Custom(_) => {
                // bisection on the monotone CDF
                let (mut lo, mut hi) = (-1.0f64, 1.0f64);
                while hi - lo > 1e-13 {
                    let mid = 0.5 * (lo + hi);
                    let (f_lo, _) = self.cdf_pair(1.0 + mid, 1.0 - mid);
                    if f_lo < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let r = 0.5 * (lo + hi);
                (1.0 + r, 1.0 - r)
            }
        }
    }

    /// One draw: latitude by inverse CDF, longitude uniform, then rotated
    /// from `e3` onto the axis. Always consumes two uniforms.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitVector3 {
        let u: f64 = rng.random();
        let phi = 2.0 * PI * rng.random::<f64>();
        let (a, b) = self.quantile_pair(u, 1.0 - u);
        let t = if a < b { a - 1.0 } else { 1.0 - b };
        let s = (a * b).max(0.0).sqrt();
        let local = [s * phi.cos(), s * phi.sin(), t];
        let rot = rodrigues_rotation(&UnitVector3::E3, &self.axis);
        UnitVector3::normalize_unchecked(rot.apply(&local))
    }

    /// Closed-form MK distribution function: keeps the sign direction of `z`
    /// and replaces its latitude `r` by `F_f^*(r)`.
    pub fn closed_form_f(&self, z: &UnitVector3) -> UnitVector3 {
        let (a, b) = half_chords(z, &self.axis);
        let (p, q) = self.cdf_pair(a, b);
        self.assemble(z, 2.0 * p, 2.0 * q)
    }

    /// Closed-form MK quantile function, the inverse of
    /// [`Self::closed_form_f`].
    pub fn closed_form_q(&self, x: &UnitVector3) -> UnitVector3 {
        let (a, b) = half_chords(x, &self.axis);
        let (a2, b2) = self.quantile_pair(a / 2.0, b / 2.0);
        self.assemble(x, a2, b2)
    }

    /// Point with latitude data `(1 + t, 1 − t)` in the sign direction of `z`.
    fn assemble(&self, z: &UnitVector3, a: f64, b: f64) -> UnitVector3 {
        let theta = self.axis.as_array();
        let perp = sub(z.as_array(), &scale(theta, dot(z.as_array(), theta)));
        let n = norm(&perp);
        let t = if a < b { a - 1.0 } else { 1.0 - b };
        if n < 1e-300 {
            return if z.dot(&self.axis) > 0.0 { self.axis } else { -self.axis };
        }
        let s = (a * b).max(0.0).sqrt();
        let v = [
            t * theta[0] + s * perp[0] / n,
            t * theta[1] + s * perp[1] / n,
            t * theta[2] + s * perp[2] / n,
        ];
        UnitVector3::normalize_unchecked(v)
    }
}

/// `(1 + ⟨z,θ⟩, 1 − ⟨z,θ⟩)` via `‖z ± θ‖²/2`, accurate near both poles.
fn half_chords(z: &UnitVector3, theta: &UnitVector3) -> (f64, f64) {
    let plus = geometry::add(z.as_array(), theta.as_array());
    let minus = sub(z.as_array(), theta.as_array());
    (dot(&plus, &plus) / 2.0, dot(&minus, &minus) / 2.0)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}
