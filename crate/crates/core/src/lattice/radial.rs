//! Radial reductions `-d^2/dr^2 + c / r^2 + V(r)` acting on `u = r^{(d-1)/2} f`.

use faer::c64;

use super::{DiscreteOperator, Gradient, OperatorKind, OutgoingSlot, Profile, RadialGrid};
use crate::error::{invalid, Result};
use crate::linalg::Csr;

/// `nu (nu + d - 2) + (d - 1)(d - 3)/4`.
pub fn centrifugal(nu: usize, d_eff: usize) -> f64 {
    let (nu, d) = (nu as f64, d_eff as f64);
    nu * (nu + d - 2.0) + (d - 1.0) * (d - 3.0) / 4.0
}

/// Order `nu + (d - 2)/2` of the Hankel function `sqrt(k r) H_order(k r)` solving
/// the free radial equation.
pub fn hankel_order(nu: usize, d_eff: usize) -> f64 {
    nu as f64 + (d_eff as f64 - 2.0) / 2.0
}

/// Condition at the outer end of a radial grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialBoundary {
    Dirichlet,
    Outgoing,
}

pub fn assemble_radial_sector(
    nu: usize,
    d_eff: usize,
    v: &Profile,
    grid: &RadialGrid,
    boundary: RadialBoundary,
) -> Result<DiscreteOperator> {
    if d_eff < 2 {
        return invalid("radial reduction needs d_eff >= 2");
    }
    let (n, h) = (grid.n, grid.h);
    let c = centrifugal(nu, d_eff);
    let inv = 1.0 / h;
    let radii = grid.radii();
    let mut grad = Vec::new();
    let mut edge_radius = Vec::new();
    // inner end: odd ghost at the origin (half edge) or a wall at r_in
    if grid.from_origin {
        grad.push((0, 0, c64::new(2f64.sqrt() * inv, 0.0)));
        edge_radius.push(0.0);
    } else {
        grad.push((0, 0, c64::new(inv, 0.0)));
        edge_radius.push(grid.r_inner + 0.5 * h);
    }
    for j in 0..n - 1 {
        let e = edge_radius.len();
        grad.push((e, j, c64::new(-inv, 0.0)));
        grad.push((e, j + 1, c64::new(inv, 0.0)));
        edge_radius.push(0.5 * (radii[j] + radii[j + 1]));
    }
    let e = edge_radius.len();
    grad.push((e, n - 1, c64::new(-inv, 0.0)));
    edge_radius.push(grid.r_outer() - 0.5 * h);
    let with_centrifugal = c > 0.0;
    if with_centrifugal {
        for (j, &r) in radii.iter().enumerate() {
            let e = edge_radius.len();
            grad.push((e, j, c64::new(c.sqrt() / r, 0.0)));
            edge_radius.push(r);
        }
    }
    let g = Csr::from_triplets(edge_radius.len(), n, &grad);
    let mut kin = g.adjoint().mul(&g);
    if !with_centrifugal && c != 0.0 {
        let trips: Vec<_> = radii.iter().enumerate().map(|(j, &r)| (j, j, c64::new(c / (r * r), 0.0))).collect();
        kin = kin.add(&Csr::from_triplets(n, n, &trips), c64::new(1.0, 0.0));
    }
    let potential: Vec<f64> = radii.iter().map(|&r| v.eval(r)).collect();
    let mut trips = kin.triplets();
    trips.extend(potential.iter().enumerate().map(|(j, &p)| (j, j, c64::new(p, 0.0))));
    let matrix = Csr::from_triplets(n, n, &trips);
    let outgoing = match boundary {
        RadialBoundary::Dirichlet => Vec::new(),
        RadialBoundary::Outgoing => vec![OutgoingSlot {
            node: n - 1,
            c,
            order: hankel_order(nu, d_eff),
            r_node: radii[n - 1],
            r_ghost: grid.r_outer(),
        }],
    };
    Ok(DiscreteOperator {
        matrix,
        kind: OperatorKind::RadialSector { nu },
        d_eff,
        radius: radii,
        cell: h,
        h,
        kinetic: kin,
        gradient: Some(if c >= 0.0 { Gradient { matrix: g, edge_radius } } else { physical_gradient(grid) }),
        potential,
        outgoing,
        self_adjoint: boundary == RadialBoundary::Dirichlet,
    })
}

/// Difference quotients of `f = u / sqrt(r)` scaled by `sqrt(r_edge)`, for the
/// sectors whose centrifugal term is negative. `G* G` agrees with the kinetic
/// part only up to `O(h^2)`; it serves for measuring `|grad f|`.
fn physical_gradient(grid: &RadialGrid) -> Gradient {
    let (n, h) = (grid.n, grid.h);
    let radii = grid.radii();
    let w: Vec<f64> = radii.iter().map(|r| 1.0 / r.sqrt()).collect();
    let mut trips = Vec::new();
    let mut edge_radius = Vec::new();
    if !grid.from_origin {
        let re = grid.r_inner + 0.5 * h;
        trips.push((0, 0, c64::new(w[0] * re.sqrt() / h, 0.0)));
        edge_radius.push(re);
    }
    for j in 0..n - 1 {
        let e = edge_radius.len();
        let re = 0.5 * (radii[j] + radii[j + 1]);
        trips.push((e, j, c64::new(-w[j] * re.sqrt() / h, 0.0)));
        trips.push((e, j + 1, c64::new(w[j + 1] * re.sqrt() / h, 0.0)));
        edge_radius.push(re);
    }
    let e = edge_radius.len();
    let re = grid.r_outer() - 0.5 * h;
    trips.push((e, n - 1, c64::new(-w[n - 1] * re.sqrt() / h, 0.0)));
    edge_radius.push(re);
    Gradient { matrix: Csr::from_triplets(edge_radius.len(), n, &trips), edge_radius }
}

/// Sectors `nu = 0..=nu_max` of a radial potential; the full operator is their
/// orthogonal sum.
#[derive(Debug, Clone)]
pub struct SectorStack {
    pub d_eff: usize,
    pub grid: RadialGrid,
    pub sectors: Vec<DiscreteOperator>,
}

impl SectorStack {
    pub fn build(d_eff: usize, v: &Profile, grid: &RadialGrid, nu_max: usize, boundary: RadialBoundary) -> Result<Self> {
        let sectors = (0..=nu_max)
            .map(|nu| assemble_radial_sector(nu, d_eff, v, grid, boundary))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { d_eff, grid: *grid, sectors })
    }
}
