//! Center-outward analytics: directional signs, quantile contours, sign
//! curves, Monge–Kantorovich depth and scale curves.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{RotInvariantLaw, SphericalSample};
use crate::error::{Error, Result};
use crate::geometry::{dot, frechet_median, geodesic_distance, norm, rodrigues_rotation, scale, sub, UnitVector3, Vec3};
use crate::maps::EntropicMapContext;

/// Number of points on a sign curve.
pub const SIGN_CURVE_POINTS: usize = 200;
/// Sign curves stop this far (in latitude) short of the antipode.
pub const SIGN_CURVE_GUARD: f64 = 1e-3;

/// A distribution map `F` and its inverse quantile map `Q`.
pub trait TransportMaps {
    fn distribution_map(&self, z: &UnitVector3) -> Result<UnitVector3>;
    fn quantile_map(&self, x: &UnitVector3) -> Result<UnitVector3>;
}

impl TransportMaps for EntropicMapContext {
    fn distribution_map(&self, z: &UnitVector3) -> Result<UnitVector3> {
        self.map_f(z)
    }
    fn quantile_map(&self, x: &UnitVector3) -> Result<UnitVector3> {
        self.map_q(x)
    }
}

impl TransportMaps for RotInvariantLaw {
    fn distribution_map(&self, z: &UnitVector3) -> Result<UnitVector3> {
        Ok(self.closed_form_f(z))
    }
    fn quantile_map(&self, x: &UnitVector3) -> Result<UnitVector3> {
        Ok(self.closed_form_q(x))
    }
}

/// Normalized component of a point orthogonal to a pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionalSign {
    /// Unit vector orthogonal to the pole, or zero at `±pole`.
    pub vector: Vec3,
    /// Set when the point coincides with `±pole` and the sign is undefined.
    pub degenerate: bool,
}

impl DirectionalSign {
    pub fn unit(&self) -> Option<UnitVector3> {
        if self.degenerate {
            None
        } else {
            UnitVector3::normalize(self.vector).ok()
        }
    }
}

/// `(x − ⟨x,p⟩p)/‖x − ⟨x,p⟩p‖`, with `0/0 = 0`.
pub fn directional_sign(x: &UnitVector3, pole: &UnitVector3) -> DirectionalSign {
    let p = pole.as_array();
    let perp = sub(x.as_array(), &scale(p, dot(x.as_array(), p)));
    let n = norm(&perp);
    if n < 1e-14 {
        return DirectionalSign {
            vector: [0.0; 3],
            degenerate: true,
        };
    }
    let mut v = scale(&perp, 1.0 / n);
    // remove the roundoff left along the pole
    let r = dot(&v, p);
    v = sub(&v, &scale(p, r));
    DirectionalSign {
        vector: v,
        degenerate: false,
    }
}

/// An ordered closed polyline on the sphere at quantile order `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileContour {
    pub tau: f64,
    pub pole: UnitVector3,
    pub points: Vec<UnitVector3>,
}

/// The image of one meridian from the pole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignCurve {
    pub sign: UnitVector3,
    pub pole: UnitVector3,
    /// Latitude parameters `t` of the reference points, descending.
    pub t: Vec<f64>,
    pub points: Vec<UnitVector3>,
}

/// Depth values at query points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthReport {
    pub pole: UnitVector3,
    pub points: Vec<UnitVector3>,
    pub depth: Vec<f64>,
}

/// `n_pts` equally spaced points on the circle `⟨x, pole⟩ = 1 − 2τ`, which
/// bounds the cap of uniform probability `τ` around the pole.
pub fn reference_contour(tau: f64, pole: &UnitVector3, n_pts: usize) -> Result<QuantileContour> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain(format!("quantile order {tau} outside [0, 1]")));
    }
    if n_pts < 3 {
        return Err(Error::Domain(format!("a contour needs at least 3 points, got {n_pts}")));
    }
    let rot = rodrigues_rotation(&UnitVector3::E3, pole);
    let t = 1.0 - 2.0 * tau;
    // sin of the colatitude, from (1 − t)(1 + t) = 4τ(1 − τ)
    let s = 2.0 * (tau * (1.0 - tau)).sqrt();
    let points = (0..n_pts)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n_pts as f64;
            let local = [s * phi.cos(), s * phi.sin(), t];
            let v = rot.apply(&local);
            // snap the latitude exactly onto the circle
            let along = dot(&v, pole.as_array());
            let perp = sub(&v, &scale(pole.as_array(), along));
            let pn = norm(&perp);
            if pn == 0.0 {
                if t > 0.0 {
                    *pole
                } else {
                    -*pole
                }
            } else {
                let out = [
                    t * pole.x() + s * perp[0] / pn,
                    t * pole.y() + s * perp[1] / pn,
                    t * pole.z() + s * perp[2] / pn,
                ];
                UnitVector3::normalize(out).unwrap_or(*pole)
            }
        })
        .collect();
    Ok(QuantileContour {
        tau,
        pole: *pole,
        points,
    })
}

/// Image under the quantile map of the reference contour of order `tau`.
pub fn quantile_contour<M: TransportMaps + Sync + ?Sized>(
    maps: &M,
    tau: f64,
    pole: &UnitVector3,
    n_pts: usize,
) -> Result<QuantileContour> {
    let reference = reference_contour(tau, pole, n_pts)?;
    let points = reference
        .points
        .par_iter()
        .map(|x| maps.quantile_map(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuantileContour {
        tau,
        pole: *pole,
        points,
    })
}

/// Points `x_t = t·pole + √(1 − t²)·s` for `t` from 1 down to `−1 + guard`.
pub fn reference_meridian(sign: &UnitVector3, pole: &UnitVector3, n_pts: usize) -> Result<(UnitVector3, Vec<f64>, Vec<UnitVector3>)> {
    if n_pts < 2 {
        return Err(Error::Domain(format!("a sign curve needs at least 2 points, got {n_pts}")));
    }
    let s = directional_sign(sign, pole)
        .unit()
        .ok_or_else(|| Error::Domain("sign direction is parallel to the pole".into()))?;
    let lo = -1.0 + SIGN_CURVE_GUARD;
    let ts: Vec<f64> = (0..n_pts)
        .map(|k| 1.0 - (1.0 - lo) * k as f64 / (n_pts - 1) as f64)
        .collect();
    let points = ts
        .iter()
        .map(|&t| {
            let r = ((1.0 - t) * (1.0 + t)).max(0.0).sqrt();
            UnitVector3::normalize([
                t * pole.x() + r * s.x(),
                t * pole.y() + r * s.y(),
                t * pole.z() + r * s.z(),
            ])
            .unwrap_or(*pole)
        })
        .collect();
    Ok((s, ts, points))
}

/// Image under the quantile map of the meridian with sign `sign`.
pub fn sign_curve<M: TransportMaps + Sync + ?Sized>(
    maps: &M,
    sign: &UnitVector3,
    pole: &UnitVector3,
    n_pts: usize,
) -> Result<SignCurve> {
    let (s, t, reference) = reference_meridian(sign, pole, n_pts)?;
    let points = reference
        .par_iter()
        .map(|x| maps.quantile_map(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(SignCurve {
        sign: s,
        pole: *pole,
        t,
        points,
    })
}

/// `F̂(θ̂_M)` for the empirical Fréchet median `θ̂_M` of the data.
pub fn estimate_pole<M: TransportMaps + ?Sized>(maps: &M, data: &SphericalSample) -> Result<UnitVector3> {
    let median = frechet_median(&data.points, 1e-10, 10_000)?;
    maps.distribution_map(&median.point)
}

/// `1 − d(F(x), pole)/π`.
pub fn mk_depth<M: TransportMaps + ?Sized>(maps: &M, x: &UnitVector3, pole: &UnitVector3) -> Result<f64> {
    let f = maps.distribution_map(x)?;
    Ok((1.0 - geodesic_distance(&f, pole) / PI).clamp(0.0, 1.0))
}

/// Depth at many points.
pub fn depth_report<M: TransportMaps + Sync + ?Sized>(
    maps: &M,
    points: &[UnitVector3],
    pole: &UnitVector3,
) -> Result<DepthReport> {
    let depth = points
        .par_iter()
        .map(|x| mk_depth(maps, x, pole))
        .collect::<Result<Vec<_>>>()?;
    Ok(DepthReport {
        pole: *pole,
        points: points.to_vec(),
        depth,
    })
}

/// Scale curve `V(α) = (1/N) Σ 1{⟨F(U_i), pole⟩ ≥ 1 − 2α}`: the uniform
/// volume of the quantile region of order `α`.
pub fn scale_curve<M: TransportMaps + Sync + ?Sized>(
    maps: &M,
    alphas: &[f64],
    uniform_sample: &SphericalSample,
    pole: &UnitVector3,
) -> Result<Vec<(f64, f64)>> {
    if uniform_sample.is_empty() {
        return Err(Error::Domain("scale curve needs a nonempty uniform sample".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::Domain(format!("order {a} outside [0, 1]")));
    }
    // 1 − ⟨F(U), pole⟩ = ‖F(U) − pole‖²/2, compared against 2α
    let gaps = uniform_sample
        .points
        .par_iter()
        .map(|u| {
            let f = maps.distribution_map(u)?;
            let d = sub(f.as_array(), pole.as_array());
            Ok(dot(&d, &d) / 2.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = gaps.len() as f64;
    Ok(alphas
        .iter()
        .map(|&a| {
            let count = gaps.iter().filter(|&&g| g <= 2.0 * a).count();
            (a, count as f64 / n)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::sample_uniform;
    use crate::geometry::Rotation3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn signs() {
        let s = directional_sign(&UnitVector3::E3, &UnitVector3::E3);
        assert!(s.degenerate && s.vector == [0.0; 3] && s.unit().is_none());
        assert!(directional_sign(&-UnitVector3::E3, &UnitVector3::E3).degenerate);
        for t in [0.1, 1.0, 2.5] {
            let x = UnitVector3::from_spherical(t, 0.0).unwrap();
            let s = directional_sign(&x, &UnitVector3::E3);
            assert!(norm(&sub(&s.vector, UnitVector3::E1.as_array())) < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = UnitVector3::random(&mut rng);
            let p = UnitVector3::random(&mut rng);
            assert!(dot(&directional_sign(&x, &p).vector, p.as_array()).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_contours() {
        let pole = UnitVector3::normalize([0.2, -0.4, 0.7]).unwrap();
        let half = reference_contour(0.5, &pole, 64).unwrap();
        assert!(half.points.iter().all(|x| x.dot(&pole).abs() <= 1e-12));
        let zero = reference_contour(0.0, &pole, 8).unwrap();
        assert!(zero.points.iter().all(|x| geodesic_distance(x, &pole) < 1e-7));
        for tau in [0.1, 0.25, 0.9] {
            let c = reference_contour(tau, &pole, 33).unwrap();
            assert!(c.points.iter().all(|x| (x.dot(&pole) - (1.0 - 2.0 * tau)).abs() <= 1e-12));
        }
        assert!(reference_contour(1.5, &pole, 8).is_err());
        assert!(reference_contour(0.5, &pole, 2).is_err());

        // cap content
        let u = sample_uniform(100_000, 2);
        for tau in [0.1, 0.4] {
            let frac = u.iter().filter(|x| x.dot(&pole) >= 1.0 - 2.0 * tau).count() as f64 / 1e5;
            assert!((frac - tau).abs() < 0.01);
        }
    }

    #[test]
    fn oracle_depth_and_contours() {
        let law = RotInvariantLaw::von_mises_fisher(UnitVector3::E2, 10.0).unwrap();
        let pole = law.closed_form_f(&law.axis());
        assert_eq!(mk_depth(&law, &law.axis(), &pole).unwrap(), 1.0);
        assert!(mk_depth(&law, &-law.axis(), &pole).unwrap() < 1e-12);

        let uniform = RotInvariantLaw::uniform(UnitVector3::E3);
        let c = quantile_contour(&uniform, 0.3, &UnitVector3::E3, 40).unwrap();
        let r = reference_contour(0.3, &UnitVector3::E3, 40).unwrap();
        for (a, b) in c.points.iter().zip(&r.points) {
            assert!(geodesic_distance(a, b) < 1e-12);
        }

        // depth is monotone along sign curves
        let curve = sign_curve(&law, &UnitVector3::E1, &pole, 50).unwrap();
        let d: Vec<f64> = curve.points.iter().map(|x| mk_depth(&law, x, &pole).unwrap()).collect();
        assert!(d.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(sign_curve(&law, &pole, &pole, 50).is_err());
    }

    #[test]
    fn rotated_law_has_rotated_contours() {
        let law = RotInvariantLaw::von_mises_fisher(UnitVector3::E3, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let o = Rotation3::random(&mut rng);
        let rotated = law.with_axis(o.rotate(&law.axis()));
        let c = quantile_contour(&law, 0.25, &law.axis(), 24).unwrap();
        let rc = quantile_contour(&rotated, 0.25, &rotated.axis(), 24).unwrap();
        // the two reference frames differ by a rotation about the pole, so
        // compare as point sets through latitude and nearest points
        for p in &c.points {
            let q = o.rotate(p);
            let nearest = rc
                .points
                .iter()
                .map(|r| geodesic_distance(r, &q))
                .fold(f64::MAX, f64::min);
            assert!((q.dot(&rotated.axis()) - p.dot(&law.axis())).abs() < 1e-10);
            assert!(nearest < 0.5);
        }
    }

    #[test]
    fn scale_curves() {
        let uniform = RotInvariantLaw::uniform(UnitVector3::E3);
        let u = sample_uniform(20_000, 4);
        let n = u.len() as f64;
        let alphas: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let v = scale_curve(&uniform, &alphas, &u, &UnitVector3::E3).unwrap();
        assert_eq!(v[0].1, 0.0);
        assert_eq!(v[10].1, 1.0);
        for (a, vol) in &v {
            assert!((vol - a).abs() <= 2.0 / n.sqrt());
        }
        assert!(v.windows(2).all(|w| w[0].1 <= w[1].1));

        let spread = RotInvariantLaw::von_mises_fisher(UnitVector3::E3, 1.0).unwrap();
        let tight = RotInvariantLaw::von_mises_fisher(UnitVector3::E3, 15.0).unwrap();
        let vs = scale_curve(&spread, &alphas, &u, &UnitVector3::E3).unwrap();
        let vt = scale_curve(&tight, &alphas, &u, &UnitVector3::E3).unwrap();
        for k in 1..10 {
            assert!(vs[k].1 >= vt[k].1);
        }
    }
}
