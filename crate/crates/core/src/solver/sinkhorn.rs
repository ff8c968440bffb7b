//! Log-domain Sinkhorn iterations between the quadrature discretization of
//! the uniform measure and an empirical target, used as an independent
//! reference for the stochastic solver.

use rayon::prelude::*;

use super::log_sum_exp;
use crate::distributions::SphericalSample;
use crate::error::{Error, Result};
use crate::geometry::cost;
use crate::harmonics::SphereGrid;

const MAX_SWEEPS: usize = 100_000;

/// Converged potentials: `u` at the grid nodes (quadrature mean 0) and `v`
/// at the sample points, with `v = u^{c,ε}` against the quadrature.
#[derive(Debug, Clone)]
pub struct SinkhornSolution {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub sweeps: usize,
    pub residual: f64,
}

/// Alternates `v ← u^{c,ε}` (against the quadrature measure) and
/// `u ← v^{c,ε}` (against `(1/n) Σ δ_{X_j}`) until the sup-norm change of
/// `u` over one sweep falls below `tol`.
pub fn sinkhorn_semidiscrete_oracle(
    sample: &SphericalSample,
    eps: f64,
    grid: &SphereGrid,
    tol: f64,
) -> Result<SinkhornSolution> {
    if sample.is_empty() {
        return Err(Error::Domain("Sinkhorn oracle needs a nonempty sample".into()));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {eps}")));
    }
    let nodes = grid.points();
    let n = sample.len();
    // cost / ε, row-major by grid node
    let scaled: Vec<f64> = nodes
        .par_iter()
        .flat_map_iter(|z| sample.iter().map(move |x| cost(z, x) / eps))
        .collect();
    let log_mu: Vec<f64> = grid.mu_weights().iter().map(|w| w.ln()).collect();
    let log_n = (n as f64).ln();

    let mut u = vec![0.0; nodes.len()];
    let mut v = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for sweep in 1..=MAX_SWEEPS {
        // v_j = −ε log Σ_i μ_i exp((u_i − c_ij)/ε)
        v = (0..n)
            .into_par_iter()
            .map(|j| {
                let terms: Vec<f64> = (0..nodes.len())
                    .map(|i| u[i] / eps - scaled[i * n + j] + log_mu[i])
                    .collect();
                -eps * log_sum_exp(&terms)
            })
            .collect();
        let next: Vec<f64> = scaled
            .par_chunks(n)
            .map(|row| {
                let terms: Vec<f64> = row.iter().zip(&v).map(|(c, vj)| vj / eps - c).collect();
                -eps * (log_sum_exp(&terms) - log_n)
            })
            .collect();
        residual = next
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        u = next;
        if !residual.is_finite() {
            break;
        }
        if residual < tol {
            let mean = grid.mean(&u);
            u.iter_mut().for_each(|x| *x -= mean);
            v.iter_mut().for_each(|x| *x += mean);
            return Ok(SinkhornSolution {
                u,
                v,
                sweeps: sweep,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        sweeps: MAX_SWEEPS,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitVector3;
    use crate::harmonics::ShTransform;
    use crate::solver::SemiDualProblem;

    #[test]
    fn single_atom_has_explicit_potentials() {
        let grid = SphereGrid::new(12);
        let sample = SphericalSample::new(vec![UnitVector3::E3]);
        let sol = sinkhorn_semidiscrete_oracle(&sample, 0.5, &grid, 1e-12).unwrap();
        // u(x) + v(e3) = c(x, e3) + const
        let offsets: Vec<f64> = grid
            .points()
            .iter()
            .zip(&sol.u)
            .map(|(x, u)| u + sol.v[0] - cost(x, &UnitVector3::E3))
            .collect();
        let spread = offsets.iter().cloned().fold(f64::MIN, f64::max)
            - offsets.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-10);
        assert!(grid.mean(&sol.u).abs() < 1e-10);
    }

    #[test]
    fn converged_potential_is_a_fixed_point() {
        let transform = ShTransform::new(8);
        let sample = crate::distributions::sample_vmf(&UnitVector3::E1, 4.0, 60, 3).unwrap();
        let eps = 0.3;
        let tol = 1e-10;
        let sol = sinkhorn_semidiscrete_oracle(&sample, eps, transform.grid(), tol).unwrap();
        let problem = SemiDualProblem::new(8, eps).unwrap();
        // v is the quadrature conjugate of u
        for (x, v) in sample.iter().zip(&sol.v) {
            assert!((problem.conjugate_from_grid(&sol.u, x) - v).abs() < 1e-9);
        }
        assert!(sinkhorn_semidiscrete_oracle(&SphericalSample::default(), eps, transform.grid(), tol).is_err());
    }
}
