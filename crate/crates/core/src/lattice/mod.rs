//! Finite-difference realizations of `(i grad + b)^2 + V`, of the Dirichlet
//! exterior Laplacian, of radial reductions and of conjugated operators.

mod assemble;
mod conjugate;
mod fields;
mod grid;
mod mm;
mod radial;

pub use assemble::{assemble_dirichlet_exterior, assemble_magnetic, assemble_magnetic_literal, assemble_with};
pub use conjugate::{conjugated_operator, conjugated_radial, ConjugationWeight};
pub use fields::{DecayClass, FieldSpec, Magnetic, Profile};
pub use grid::{Grid, Obstacle, RadialGrid};
pub use mm::{from_matrix_market, to_matrix_market};
pub use radial::{assemble_radial_sector, centrifugal, hankel_order, RadialBoundary, SectorStack};

use faer::c64;

use crate::error::{Error, Result};
use crate::freekernel::{hankel_minus, hankel_plus, lattice_theta};
use crate::linalg::{dot, Csr, SparseLu};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    Free,
    Magnetic,
    DirichletExterior,
    Conjugated { tau: f64, p_exp: f64 },
    RadialSector { nu: usize },
    Literal,
}

/// Forward-difference gradient: rows are edges, `G* G` is the kinetic part
/// (up to `O(h^2)` for radial sectors with a negative centrifugal term).
#[derive(Debug, Clone)]
pub struct Gradient {
    pub matrix: Csr,
    /// `|x|` at the edge midpoints, used for weighting.
    pub edge_radius: Vec<f64>,
}

/// Node carrying an outgoing ghost relation `u_ghost = zeta(k) u_node`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutgoingSlot {
    pub node: usize,
    /// Centrifugal coefficient `c` of the radial equation at this end.
    pub c: f64,
    /// Order of the Hankel function solving `-u'' + c u / r^2 = k^2 u`.
    pub order: f64,
    pub r_node: f64,
    pub r_ghost: f64,
}

impl OutgoingSlot {
    /// Ratio `u_out(r_ghost) / u_out(r_node)` for the outgoing solution with
    /// `Im k <= 0` continued analytically in `k`. The lattice wave number
    /// `theta(k)/h` replaces `k` so that `c = 0` is exact on the grid.
    pub fn ratio(&self, k: c64, h: f64) -> Result<c64> {
        let theta = lattice_theta(h, k);
        if self.c == 0.0 {
            return Ok((-c64::new(0.0, 1.0) * theta).exp());
        }
        let ke = theta / h;
        let scale = (self.r_ghost / self.r_node).sqrt();
        if ke.re < 0.0 {
            let m = -ke;
            return Ok(scale * hankel_plus(self.order, m * self.r_ghost)? / hankel_plus(self.order, m * self.r_node)?);
        }
        Ok(scale * hankel_minus(self.order, ke * self.r_ghost)? / hankel_minus(self.order, ke * self.r_node)?)
    }
}

/// Sign of the absorption in `P - (lambda^2 -+ i eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// `lambda^2 - i eps`, outgoing at `eps -> 0`.
    Minus,
    /// `lambda^2 + i eps`.
    Plus,
}

/// Spectral parameter of a resolvent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spectral {
    Absorbing { lambda: f64, epsilon: f64, sign: Sign },
    /// `(P - lambda^2)^{-1}` continued from `Im lambda < 0`.
    Continued(c64),
}

impl Spectral {
    pub fn energy(&self) -> c64 {
        match *self {
            Spectral::Absorbing { lambda, epsilon, sign } => match sign {
                Sign::Minus => c64::new(lambda * lambda, -epsilon),
                Sign::Plus => c64::new(lambda * lambda, epsilon),
            },
            Spectral::Continued(l) => l * l,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub matrix: Csr,
    pub kind: OperatorKind,
    pub d_eff: usize,
    /// `|x|` per unknown.
    pub radius: Vec<f64>,
    /// Volume element of the discrete `L^2` product.
    pub cell: f64,
    pub h: f64,
    /// Hermitian nonnegative part `-Delta_h` (or its magnetic version).
    pub kinetic: Csr,
    pub gradient: Option<Gradient>,
    /// Diagonal potential term.
    pub potential: Vec<f64>,
    pub outgoing: Vec<OutgoingSlot>,
    pub self_adjoint: bool,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.matrix.hermitian_defect() / self.matrix.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Diagonal corrections from the outgoing ghosts.
    pub fn boundary_diag(&self, spectral: Spectral) -> Result<Vec<(usize, c64)>> {
        let mut out = Vec::with_capacity(self.outgoing.len());
        let h2 = self.h * self.h;
        for slot in &self.outgoing {
            let zeta = match spectral {
                Spectral::Continued(l) => slot.ratio(l, self.h)?,
                Spectral::Absorbing { lambda, epsilon, sign } => {
                    let k = c64::new(lambda * lambda, -epsilon).sqrt();
                    let z = slot.ratio(k, self.h)?;
                    match sign {
                        Sign::Minus => z,
                        Sign::Plus => z.conj(),
                    }
                }
            };
            out.push((slot.node, -zeta / h2));
        }
        Ok(out)
    }

    /// `M - E` with outgoing boundary terms for the given spectral parameter.
    pub fn shifted(&self, spectral: Spectral) -> Result<Csr> {
        let bd = self.boundary_diag(spectral)?;
        Ok(self.matrix.shifted(spectral.energy(), &bd))
    }

    pub fn factor(&self, spectral: Spectral) -> Result<SparseLu> {
        SparseLu::new(&self.shifted(spectral)?)
    }

    /// Discrete `L^2` norm.
    pub fn l2_norm(&self, f: &[c64]) -> f64 {
        (dot(f, f).re * self.cell).sqrt()
    }

    /// `(sum |grad f|^2 cell)^{1/2}` through the kinetic form.
    pub fn gradient_norm(&self, f: &[c64]) -> f64 {
        (dot(f, &self.kinetic.matvec(f)).re.max(0.0) * self.cell).sqrt()
    }

    /// Semiclassical norms: order `+1` gives `(||f||^2 + h^2 ||grad f||^2)^{1/2}`,
    /// order `-1` gives `<f, (1 + h^2 K)^{-1} f>^{1/2}`.
    pub fn sobolev_norm(&self, f: &[c64], h_semi: f64, order: i32) -> Result<f64> {
        match order {
            1 => Ok((self.l2_norm(f).powi(2) + h_semi * h_semi * self.gradient_norm(f).powi(2)).sqrt()),
            -1 => {
                let lu = SparseLu::new(&self.sobolev_matrix(h_semi))?;
                let x = lu.solve(f);
                Ok((dot(f, &x).re.max(0.0) * self.cell).sqrt())
            }
            _ => Err(Error::InvalidParams(format!("Sobolev order must be +1 or -1, got {order}"))),
        }
    }

    /// `1 + h^2 K`.
    pub fn sobolev_matrix(&self, h_semi: f64) -> Csr {
        Csr::identity(self.dim()).add(&self.kinetic, c64::new(h_semi * h_semi, 0.0))
    }
}
