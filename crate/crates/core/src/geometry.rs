//! Differential geometry of the unit sphere S² embedded in ℝ³.
//!
//! Points are [`UnitVector3`], tangent vectors carry their base point, and
//! every map (distance, exponential, logarithm, projection) is evaluated in
//! ambient Cartesian coordinates. Riemannian derivatives are obtained by
//! projecting Euclidean derivatives of a smooth extension onto the tangent
//! plane.

use std::f64::consts::PI;
use std::ops::Neg;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plain ambient vector in ℝ³.
pub type Vec3 = [f64; 3];
/// Row-major 3×3 matrix.
pub type Mat3 = [[f64; 3]; 3];

const UNIT_TOL: f64 = 1e-12;
const TANGENT_TOL: f64 = 1e-10;
const SMALL_ANGLE: f64 = 1e-8;

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// `a + s * b`
#[inline]
pub fn axpy(a: &Vec3, s: f64, b: &Vec3) -> Vec3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

pub fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose(m: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[j][i] = *v;
        }
    }
    out
}

pub fn outer(a: &Vec3, b: &Vec3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i] * b[j];
        }
    }
    out
}

pub const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// A point of S².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec3", into = "Vec3")]
pub struct UnitVector3([f64; 3]);

impl UnitVector3 {
    pub const E1: UnitVector3 = UnitVector3([1.0, 0.0, 0.0]);
    pub const E2: UnitVector3 = UnitVector3([0.0, 1.0, 0.0]);
    pub const E3: UnitVector3 = UnitVector3([0.0, 0.0, 1.0]);

    /// Checked constructor: the triple must already have unit norm.
    pub fn new(x1: f64, x2: f64, x3: f64) -> Result<Self> {
        let v = [x1, x2, x3];
        let n2 = dot(&v, &v);
        if !n2.is_finite() || (n2.sqrt() - 1.0).abs() > UNIT_TOL {
            return Err(Error::Domain(format!(
                "({x1}, {x2}, {x3}) is not a unit vector (norm {})",
                n2.sqrt()
            )));
        }
        Ok(UnitVector3(v))
    }

    /// Normalizes any finite non-zero vector.
    pub fn normalize(v: Vec3) -> Result<Self> {
        let n = norm(&v);
        if !n.is_finite() || n == 0.0 {
            return Err(Error::Domain(format!("cannot normalize {v:?}")));
        }
        Ok(UnitVector3(scale(&v, 1.0 / n)))
    }

    /// Normalizes a vector that is known to be non-degenerate.
    pub(crate) fn normalize_unchecked(v: Vec3) -> Self {
        let n = norm(&v);
        UnitVector3(scale(&v, 1.0 / n))
    }

    /// `(cos φ sin θ, sin φ sin θ, cos θ)` for colatitude θ ∈ [0, π] and
    /// longitude φ ∈ [−π, π].
    pub fn from_spherical(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !(-PI..=PI).contains(&phi) {
            return Err(Error::Domain(format!(
                "spherical coordinates out of range: theta={theta}, phi={phi}"
            )));
        }
        Ok(Self::from_spherical_unchecked(theta, phi))
    }

    pub(crate) fn from_spherical_unchecked(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        UnitVector3([cp * st, sp * st, ct])
    }

    /// Colatitude and longitude; the longitude is 0 at either pole.
    pub fn to_spherical(&self) -> (f64, f64) {
        let [x, y, z] = self.0;
        let rho = x.hypot(y);
        let theta = rho.atan2(z);
        let phi = if rho == 0.0 { 0.0 } else { y.atan2(x) };
        (theta, phi)
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.0[0]
    }
    #[inline]
    pub fn y(&self) -> f64 {
        self.0[1]
    }
    #[inline]
    pub fn z(&self) -> f64 {
        self.0[2]
    }

    #[inline]
    pub fn as_array(&self) -> &Vec3 {
        &self.0
    }

    #[inline]
    pub fn to_array(&self) -> Vec3 {
        self.0
    }

    #[inline]
    pub fn dot(&self, other: &UnitVector3) -> f64 {
        dot(&self.0, &other.0)
    }

    /// Uniformly distributed point (normalized Gaussian triple).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v: Vec3 = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let n = norm(&v);
            if n > 1e-12 {
                return UnitVector3(scale(&v, 1.0 / n));
            }
        }
    }
}

impl Neg for UnitVector3 {
    type Output = UnitVector3;
    fn neg(self) -> UnitVector3 {
        UnitVector3(scale(&self.0, -1.0))
    }
}

impl TryFrom<Vec3> for UnitVector3 {
    type Error = Error;
    fn try_from(v: Vec3) -> Result<Self> {
        UnitVector3::new(v[0], v[1], v[2])
    }
}

impl From<UnitVector3> for Vec3 {
    fn from(u: UnitVector3) -> Vec3 {
        u.0
    }
}

/// A vector of the tangent plane at `base`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    base: UnitVector3,
    v: Vec3,
}

impl TangentVector {
    pub fn new(base: UnitVector3, v: Vec3) -> Result<Self> {
        let radial = dot(base.as_array(), &v);
        if !radial.is_finite() || radial.abs() > TANGENT_TOL {
            return Err(Error::Domain(format!(
                "{v:?} is not tangent at {:?} (radial part {radial:e})",
                base.as_array()
            )));
        }
        Ok(TangentVector { base, v })
    }

    pub fn zero(base: UnitVector3) -> Self {
        TangentVector { base, v: [0.0; 3] }
    }

    #[inline]
    pub fn base(&self) -> UnitVector3 {
        self.base
    }

    #[inline]
    pub fn vector(&self) -> &Vec3 {
        &self.v
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        norm(&self.v)
    }

    pub fn scaled(&self, s: f64) -> Self {
        TangentVector {
            base: self.base,
            v: scale(&self.v, s),
        }
    }
}

/// A proper rotation of ℝ³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(Mat3);

impl Rotation3 {
    pub const IDENTITY: Rotation3 = Rotation3(IDENTITY3);

    /// Checks orthogonality and unit determinant to 1e-12.
    pub fn new(m: Mat3) -> Result<Self> {
        let mtm = mat_mul(&transpose(&m), &m);
        let mut err: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                err = err.max((mtm[i][j] - IDENTITY3[i][j]).abs());
            }
        }
        let det = dot(&m[0], &cross(&m[1], &m[2]));
        if !err.is_finite() || err > 1e-12 || (det - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "matrix is not a rotation (orthogonality defect {err:e}, det {det})"
            )));
        }
        Ok(Rotation3(m))
    }

    /// Right-handed rotation by `angle` about the unit `axis`.
    pub fn from_axis_angle(axis: &UnitVector3, angle: f64) -> Self {
        let [x, y, z] = axis.to_array();
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Rotation3([
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ])
    }

    /// Haar-distributed rotation from a normalized Gaussian quaternion.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut q = [0.0f64; 4];
        loop {
            for v in q.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 1e-12 {
                q.iter_mut().for_each(|v| *v /= n);
                break;
            }
        }
        let [w, x, y, z] = q;
        Rotation3([
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ])
    }

    #[inline]
    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        mat_vec(&self.0, v)
    }

    pub fn rotate(&self, x: &UnitVector3) -> UnitVector3 {
        UnitVector3::normalize_unchecked(self.apply(x.as_array()))
    }

    pub fn inverse(&self) -> Rotation3 {
        Rotation3(transpose(&self.0))
    }

    pub fn compose(&self, other: &Rotation3) -> Rotation3 {
        Rotation3(mat_mul(&self.0, &other.0))
    }
}

/// Geodesic distance `arccos⟨x, y⟩ ∈ [0, π]`, evaluated as
/// `atan2(‖x × y‖, ⟨x, y⟩)` so that nearly equal or antipodal inputs keep
/// full precision.
pub fn geodesic_distance(x: &UnitVector3, y: &UnitVector3) -> f64 {
    let s = norm(&cross(x.as_array(), y.as_array()));
    let c = x.dot(y).clamp(-1.0, 1.0);
    s.atan2(c)
}

/// Half squared geodesic distance.
pub fn cost(x: &UnitVector3, y: &UnitVector3) -> f64 {
    let d = geodesic_distance(x, y);
    0.5 * d * d
}

/// Orthogonal projection `ξ − ⟨ξ, x⟩x` onto the tangent plane at `x`.
pub fn tangent_project(x: &UnitVector3, xi: &Vec3) -> TangentVector {
    TangentVector {
        base: *x,
        v: project(x.as_array(), xi),
    }
}

#[inline]
pub(crate) fn project(x: &Vec3, xi: &Vec3) -> Vec3 {
    axpy(xi, -dot(xi, x), x)
}

/// Projection matrix `I − x xᵀ`.
pub fn projection_matrix(x: &UnitVector3) -> Mat3 {
    let mut p = IDENTITY3;
    let xo = outer(x.as_array(), x.as_array());
    for i in 0..3 {
        for j in 0..3 {
            p[i][j] -= xo[i][j];
        }
    }
    p
}

pub fn exp_map(v: &TangentVector) -> UnitVector3 {
    let n = v.norm();
    let x = v.base.as_array();
    if n < 1e-12 {
        return v.base;
    }
    let (s, c) = n.sin_cos();
    let out = axpy(&scale(x, c), s / n, &v.v);
    UnitVector3::normalize_unchecked(out)
}

/// Inverse of [`exp_map`]; fails on antipodal pairs.
pub fn log_map(x: &UnitVector3, z: &UnitVector3) -> Result<TangentVector> {
    let t = x.dot(z);
    if t <= -1.0 + 1e-12 {
        return Err(Error::antipodal(x, z));
    }
    Ok(log_map_unchecked(x, z))
}

pub(crate) fn log_map_unchecked(x: &UnitVector3, z: &UnitVector3) -> TangentVector {
    let w = project(x.as_array(), z.as_array());
    let wn = norm(&w);
    let d = wn.atan2(x.dot(z).clamp(-1.0, 1.0));
    let v = if d < SMALL_ANGLE || wn == 0.0 {
        w
    } else {
        scale(&w, d / wn)
    };
    TangentVector { base: *x, v }
}

/// Projection of a Euclidean gradient onto the tangent plane.
pub fn riemannian_gradient(x: &UnitVector3, euclid_grad: &Vec3) -> TangentVector {
    tangent_project(x, euclid_grad)
}

/// `ρ_x [D²f − ⟨Df, x⟩ I] ρ_x`, the Riemannian Hessian as a symmetric
/// operator on ℝ³ that annihilates the normal direction.
pub fn riemannian_hessian(x: &UnitVector3, euclid_grad: &Vec3, euclid_hess: &Mat3) -> Mat3 {
    let radial = dot(euclid_grad, x.as_array());
    let mut inner = *euclid_hess;
    for (i, row) in inner.iter_mut().enumerate() {
        row[i] -= radial;
    }
    let p = projection_matrix(x);
    let h = mat_mul(&p, &mat_mul(&inner, &p));
    // symmetrize away roundoff
    let mut out = h;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = 0.5 * (h[i][j] + h[j][i]);
        }
    }
    out
}

/// Householder matrix `I − 2 n nᵀ`.
fn reflection(n: &Vec3) -> Mat3 {
    let mut m = IDENTITY3;
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] -= 2.0 * n[i] * n[j];
        }
    }
    m
}

/// Deterministic axis orthogonal to `from` used for half-turns.
fn half_turn_axis(from: &UnitVector3) -> UnitVector3 {
    let candidate = project(from.as_array(), UnitVector3::E1.as_array());
    if norm(&candidate) > 1e-6 {
        UnitVector3::normalize_unchecked(candidate)
    } else {
        UnitVector3::normalize_unchecked(project(from.as_array(), UnitVector3::E2.as_array()))
    }
}

/// Minimal rotation carrying `from` onto `to`, about the axis `from × to`.
///
/// Antipodal pairs get a half-turn about the normalized projection of `e1`
/// onto the tangent plane at `from` (or of `e2` when that projection
/// vanishes).
pub fn rodrigues_rotation(from: &UnitVector3, to: &UnitVector3) -> Rotation3 {
    let c = from.dot(to);
    if 1.0 + c > 1e-8 {
        // Product of two reflections: through the plane ⟂ from, then through
        // the plane ⟂ the bisector. Equal to the Rodrigues matrix but stable
        // down to nearly antipodal pairs.
        let h = UnitVector3::normalize_unchecked(add(from.as_array(), to.as_array()));
        let m = mat_mul(&reflection(h.as_array()), &reflection(from.as_array()));
        return Rotation3(m);
    }
    let axis = half_turn_axis(from);
    let half_turn = Rotation3::from_axis_angle(&axis, PI);
    let flipped = half_turn.rotate(from);
    rodrigues_rotation(&flipped, to).compose(&half_turn)
}

/// Output of [`frechet_median`].
#[derive(Debug, Clone, Copy)]
pub struct FrechetMedian {
    pub point: UnitVector3,
    /// Mean geodesic distance from the sample at `point`.
    pub objective: f64,
    pub iterations: usize,
    /// False when `max_iter` was exhausted before the step fell below `tol`.
    pub converged: bool,
}

fn mean_distance(points: &[UnitVector3], z: &UnitVector3) -> f64 {
    points.iter().map(|p| geodesic_distance(p, z)).sum::<f64>() / points.len() as f64
}

/// Minimizer of `z ↦ mean_i d(X_i, z)` by Riemannian subgradient descent
/// with steps `1/(k+1)`, started from the normalized Euclidean mean.
pub fn frechet_median(points: &[UnitVector3], tol: f64, max_iter: usize) -> Result<FrechetMedian> {
    if points.is_empty() {
        return Err(Error::Domain("Fréchet median of an empty sample".into()));
    }
    let mean = points
        .iter()
        .fold([0.0; 3], |acc, p| add(&acc, p.as_array()));
    let mut z = UnitVector3::normalize(mean).unwrap_or(points[0]);
    let mut best = FrechetMedian {
        point: z,
        objective: mean_distance(points, &z),
        iterations: 0,
        converged: false,
    };
    for k in 0..max_iter {
        let mut direction = [0.0; 3];
        let mut count = 0usize;
        for p in points {
            let d = geodesic_distance(p, &z);
            if d < 1e-14 || d > PI - 1e-9 {
                continue;
            }
            let log = log_map_unchecked(&z, p);
            direction = axpy(&direction, -1.0 / d, log.vector());
            count += 1;
        }
        best.iterations = k + 1;
        if count == 0 {
            best.converged = true;
            break;
        }
        let subgrad = scale(&direction, 1.0 / points.len() as f64);
        let step = 1.0 / (k as f64 + 1.0);
        let update = TangentVector {
            base: z,
            v: scale(&subgrad, -step),
        };
        let moved = update.norm();
        z = exp_map(&update);
        let objective = mean_distance(points, &z);
        if objective < best.objective {
            best.point = z;
            best.objective = objective;
        }
        if moved < tol {
            best.converged = true;
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        (0..3).all(|i| (a[i] - b[i]).abs() <= tol)
    }

    #[test]
    fn spherical_coordinates() {
        let p = UnitVector3::from_spherical(0.0, 1.3).unwrap();
        assert!(close(p.as_array(), &[0.0, 0.0, 1.0], 1e-15));
        let p = UnitVector3::from_spherical(FRAC_PI_2, 0.0).unwrap();
        assert!(close(p.as_array(), &[1.0, 0.0, 0.0], 1e-15));
        let p = UnitVector3::from_spherical(FRAC_PI_2, FRAC_PI_2).unwrap();
        assert!(close(p.as_array(), &[0.0, 1.0, 0.0], 1e-15));
        assert_eq!(UnitVector3::E3.to_spherical(), (0.0, 0.0));
        assert!(UnitVector3::from_spherical(-0.1, 0.0).is_err());
        assert!(UnitVector3::from_spherical(1.0, 3.5).is_err());
        let (t, p) = UnitVector3::from_spherical(1.1, -2.0).unwrap().to_spherical();
        assert!((t - 1.1).abs() < 1e-14 && (p + 2.0).abs() < 1e-14);
    }

    #[test]
    fn unit_vector_validation() {
        assert!(UnitVector3::new(0.0, 0.0, 1.5).is_err());
        assert!(UnitVector3::new(f64::NAN, 0.0, 1.0).is_err());
        assert!(UnitVector3::normalize([0.0; 3]).is_err());
        assert!(TangentVector::new(UnitVector3::E3, [0.0, 0.0, 1e-3]).is_err());
    }

    #[test]
    fn distances_and_costs() {
        let (e1, e2, e3) = (UnitVector3::E1, UnitVector3::E2, UnitVector3::E3);
        assert_eq!(geodesic_distance(&e1, &e1), 0.0);
        assert!((geodesic_distance(&e3, &-e3) - PI).abs() < 1e-15);
        assert!((geodesic_distance(&e1, &e2) - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(cost(&e2, &e2), 0.0);
        assert!((cost(&e1, &e2) - PI * PI / 8.0).abs() < 1e-14);
        assert!((cost(&e3, &-e3) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn projection_examples() {
        let x = UnitVector3::normalize([0.3, -0.4, 0.8]).unwrap();
        assert!(norm(tangent_project(&x, x.as_array()).vector()) < 1e-15);
        let p = tangent_project(&UnitVector3::E3, &[1.5, -2.0, 3.0]);
        assert_eq!(p.vector(), &[1.5, -2.0, 0.0]);
        let xi = [0.7, 0.1, -2.0];
        let once = tangent_project(&x, &xi);
        let twice = tangent_project(&x, once.vector());
        assert!(close(once.vector(), twice.vector(), 1e-15));
        let pm = projection_matrix(&x);
        let trace = pm[0][0] + pm[1][1] + pm[2][2];
        assert!((trace - 2.0).abs() < 1e-15);
    }

    #[test]
    fn exp_log_examples() {
        let x = UnitVector3::normalize([0.3, -0.4, 0.8]).unwrap();
        assert_eq!(exp_map(&TangentVector::zero(x)), x);
        let v = TangentVector::new(UnitVector3::E3, [FRAC_PI_2, 0.0, 0.0]).unwrap();
        assert!(close(exp_map(&v).as_array(), &[1.0, 0.0, 0.0], 1e-15));
        assert!(norm(log_map(&x, &x).unwrap().vector()) < 1e-15);
        let l = log_map(&UnitVector3::E3, &UnitVector3::E1).unwrap();
        assert!(close(l.vector(), &[FRAC_PI_2, 0.0, 0.0], 1e-15));
        assert!(matches!(
            log_map(&x, &-x),
            Err(Error::Antipodal { .. })
        ));
    }

    #[test]
    fn small_angle_log_is_first_order() {
        let x = UnitVector3::E3;
        let z = UnitVector3::normalize([1e-10, 0.0, 1.0]).unwrap();
        let l = log_map(&x, &z).unwrap();
        assert!((l.norm() - 1e-10).abs() < 1e-20);
    }

    #[test]
    fn exp_log_roundtrip_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 1000 {
            let x = UnitVector3::random(&mut rng);
            let z = UnitVector3::random(&mut rng);
            if geodesic_distance(&x, &z) >= PI - 1e-3 {
                continue;
            }
            let l = log_map(&x, &z).unwrap();
            assert!((l.norm() - geodesic_distance(&x, &z)).abs() < 1e-12);
            let back = exp_map(&l);
            assert!(close(back.as_array(), z.as_array(), 1e-9));
            checked += 1;
        }
    }

    #[test]
    fn gradient_examples() {
        let x = UnitVector3::normalize([0.2, 0.5, -0.4]).unwrap();
        assert!(norm(riemannian_gradient(&x, x.as_array()).vector()) < 1e-15);
        let g = riemannian_gradient(&UnitVector3::E1, &[0.0, 0.0, 1.0]);
        assert_eq!(g.vector(), &[0.0, 0.0, 1.0]);
        assert_eq!(g.base(), UnitVector3::E1);
    }

    #[test]
    fn hessian_examples() {
        let x = UnitVector3::E1;
        let zero = riemannian_hessian(&x, &[0.0; 3], &[[0.0; 3]; 3]);
        assert_eq!(zero, [[0.0; 3]; 3]);
        // f(x) = <e3, x> at e1: Df = e3, D²f = 0, <Df, x> = 0
        let h = riemannian_hessian(&x, &[0.0, 0.0, 1.0], &[[0.0; 3]; 3]);
        assert!(h.iter().flatten().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn rodrigues_examples() {
        let r = rodrigues_rotation(&UnitVector3::E3, &UnitVector3::E3);
        for i in 0..3 {
            for j in 0..3 {
                assert!((r.matrix()[i][j] - IDENTITY3[i][j]).abs() < 1e-15);
            }
        }
        let r = rodrigues_rotation(&UnitVector3::E3, &UnitVector3::E1);
        let expected = Rotation3::from_axis_angle(&UnitVector3::E2, FRAC_PI_2);
        for i in 0..3 {
            for j in 0..3 {
                assert!((r.matrix()[i][j] - expected.matrix()[i][j]).abs() < 1e-15);
            }
        }
        // antipodal: half-turn about e1-projection
        let r = rodrigues_rotation(&UnitVector3::E3, &-UnitVector3::E3);
        assert!(close(&r.apply(&[0.0, 0.0, 1.0]), &[0.0, 0.0, -1.0], 1e-15));
        assert!(close(&r.apply(&[1.0, 0.0, 0.0]), &[1.0, 0.0, 0.0], 1e-15));
        Rotation3::new(*r.matrix()).unwrap();
    }

    #[test]
    fn rodrigues_nearly_antipodal() {
        let from = UnitVector3::E3;
        let to = UnitVector3::normalize([1e-7, 2e-7, -1.0]).unwrap();
        let r = rodrigues_rotation(&from, &to);
        assert!(close(&r.apply(from.as_array()), to.as_array(), 1e-12));
        Rotation3::new(*r.matrix()).unwrap();
    }

    #[test]
    fn frechet_median_of_repeated_point() {
        let pts = vec![UnitVector3::E3; 10];
        let m = frechet_median(&pts, 1e-10, 100).unwrap();
        assert!(close(m.point.as_array(), &[0.0, 0.0, 1.0], 1e-12));
        assert!(m.converged);
        assert!(frechet_median(&[], 1e-8, 10).is_err());
    }

    #[test]
    fn frechet_median_beats_sample_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<_> = (0..40)
            .map(|_| {
                let v = UnitVector3::random(&mut rng);
                UnitVector3::normalize(axpy(v.as_array(), 2.0, &[0.0, 1.0, 0.0])).unwrap()
            })
            .collect();
        let m = frechet_median(&pts, 1e-9, 5000).unwrap();
        for p in &pts {
            assert!(m.objective <= mean_distance(&pts, p) + 1e-12);
        }
    }
}
