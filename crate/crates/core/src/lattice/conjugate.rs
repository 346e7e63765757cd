//! `e^{tau phi_p} (-Delta) e^{-tau phi_p}` with `phi_p = phi + p/(2 tau) log(r^2 + 1)`.

use faer::c64;

use super::{DiscreteOperator, Grid, OperatorKind, RadialGrid};
use crate::error::{Error, Result};
use crate::linalg::Csr;
use crate::weights::CarlemanParams;

/// Radial phase of the conjugation; `params = None` sets `phi = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugationWeight {
    pub params: Option<CarlemanParams<f64>>,
    pub tau: f64,
    pub p_exp: f64,
}

impl ConjugationWeight {
    pub fn new(params: CarlemanParams<f64>, p_exp: f64) -> Self {
        Self { tau: params.tau, params: Some(params), p_exp }
    }

    /// `tau phi_p'(r)`.
    pub fn g(&self, r: f64) -> Result<f64> {
        let phi = match &self.params {
            Some(p) => p.phi_prime(r)?,
            None => 0.0,
        };
        Ok(self.tau * phi + self.p_exp * r / (r * r + 1.0))
    }

    /// `tau phi_p''(r)`.
    pub fn g_prime(&self, r: f64) -> Result<f64> {
        let phi = match &self.params {
            Some(p) => p.phi_double_prime(r)?,
            None => 0.0,
        };
        let q = r * r + 1.0;
        Ok(self.tau * phi + self.p_exp * (1.0 - r * r) / (q * q))
    }

    /// `tau phi_p(r)`, for direct conjugation checks.
    pub fn phase(&self, r: f64) -> Result<f64> {
        let phi = match &self.params {
            Some(p) => p.phi(r)?,
            None => 0.0,
        };
        Ok(self.tau * phi + 0.5 * self.p_exp * (r * r + 1.0).ln())
    }
}

/// Radial form on `u = r^{(d-1)/2} f`:
/// `-u'' + c u / r^2 + 2 g u' + (g' - g^2) u` with `g = tau phi_p'`, Dirichlet walls.
pub fn conjugated_radial(grid: &RadialGrid, d_eff: usize, nu: usize, w: &ConjugationWeight) -> Result<DiscreteOperator> {
    let base = super::assemble_radial_sector(nu, d_eff, &super::Profile::Zero, grid, super::RadialBoundary::Dirichlet)?;
    let (n, h) = (grid.n, grid.h);
    let radii = grid.radii();
    let mut trips = base.matrix.triplets();
    for (j, &r) in radii.iter().enumerate() {
        let g = w.g(r)?;
        trips.push((j, j, c64::new(w.g_prime(r)? - g * g, 0.0)));
        let a = g / h;
        if j + 1 < n {
            trips.push((j, j + 1, c64::new(a, 0.0)));
        }
        if j > 0 {
            trips.push((j, j - 1, c64::new(-a, 0.0)));
        } else if grid.from_origin {
            // odd ghost u_{-1} = -u_0
            trips.push((0, 0, c64::new(a, 0.0)));
        }
    }
    Ok(DiscreteOperator {
        matrix: Csr::from_triplets(n, n, &trips),
        kind: OperatorKind::Conjugated { tau: w.tau, p_exp: w.p_exp },
        self_adjoint: false,
        ..base
    })
}

/// Cartesian form on `f`: `-Delta f + 2 g x/r . grad f + (g' + (d-1) g / r - g^2) f`.
pub fn conjugated_operator(grid: &Grid, w: &ConjugationWeight) -> Result<DiscreteOperator> {
    let d = grid.d;
    let base = super::assemble_dirichlet_exterior(grid, &super::Profile::Zero)?;
    let (n, h) = (grid.n, grid.h);
    let mut trips = base.matrix.triplets();
    for k in 0..grid.unknowns() {
        let full = grid.full_of(k);
        let x = grid.coord(full);
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 && d > 1 {
            return Err(Error::Domain("grid node at the origin where Delta phi is singular".into()));
        }
        let g = w.g(r)?;
        let lap_phi = w.g_prime(r)? + if d > 1 { (d - 1) as f64 * g / r } else { 0.0 };
        trips.push((k, k, c64::new(lap_phi - g * g, 0.0)));
        let idx = grid.multi_index(full);
        for j in 0..d {
            let comp = if r > 0.0 { g * x[j] / r } else { 0.0 };
            for (step, sgn) in [(1isize, 1.0), (-1, -1.0)] {
                let mut nb = idx.clone();
                let pos = idx[j] as isize + step;
                let pos = if grid.periodic {
                    pos.rem_euclid(n as isize)
                } else if pos < 0 || pos >= n as isize {
                    continue;
                } else {
                    pos
                };
                nb[j] = pos as usize;
                if let Some(q) = grid.unknown_of(grid.flat(&nb)) {
                    trips.push((k, q, c64::new(sgn * comp / h, 0.0)));
                }
            }
        }
    }
    let m = grid.unknowns();
    Ok(DiscreteOperator {
        matrix: Csr::from_triplets(m, m, &trips),
        kind: OperatorKind::Conjugated { tau: w.tau, p_exp: w.p_exp },
        self_adjoint: false,
        ..base
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cr;

    #[test]
    fn zero_conjugation_is_laplacian() {
        let g = Grid::cartesian(2, 8, 1.0).unwrap();
        let w = ConjugationWeight { params: None, tau: 0.0, p_exp: 0.0 };
        let a = conjugated_operator(&g, &w).unwrap();
        let b = crate::lattice::assemble_dirichlet_exterior(&g, &crate::lattice::Profile::Zero).unwrap();
        assert!(a.matrix.add(&b.matrix, cr(-1.0)).max_abs() < 1e-14);
    }
}
