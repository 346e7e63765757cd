//! Cartesian assembly by covariant forward differences.

use faer::c64;

use super::{DiscreteOperator, FieldSpec, Gradient, Grid, OperatorKind, Profile};
use crate::error::{invalid, Result};
use crate::linalg::Csr;

/// `P = sum_j D_j* D_j + V` with `D_j u(x) = (e^{-i h b_j(x + h e_j/2)} u(x + h e_j) - u(x)) / h`.
/// Absent neighbours (walls, obstacle) carry the value zero.
pub fn assemble_with(
    grid: &Grid,
    v: &dyn Fn(&[f64]) -> f64,
    b: &dyn Fn(&[f64]) -> Vec<f64>,
    kind: OperatorKind,
) -> Result<DiscreteOperator> {
    let (d, n, h) = (grid.d, grid.n, grid.h);
    let inv_h = 1.0 / h;
    let m = grid.unknowns();
    let mut kin = Vec::new();
    let mut grad = Vec::new();
    let mut edge_radius = Vec::new();
    let lo: isize = if grid.periodic { 0 } else { -1 };
    let hi: isize = n as isize;
    let other = n.pow(d as u32 - 1);
    for j in 0..d {
        for rest in 0..other {
            // multi-index with axis j left free
            let mut idx = Vec::with_capacity(d);
            let mut r = rest;
            for a in 0..d {
                if a == j {
                    idx.push(0usize);
                } else {
                    idx.push(r % n);
                    r /= n;
                }
            }
            for i in lo..hi {
                let left = i;
                let right = if grid.periodic { (i + 1).rem_euclid(n as isize) } else { i + 1 };
                let node = |pos: isize, idx: &mut Vec<usize>| -> Option<usize> {
                    if pos < 0 || pos >= n as isize {
                        return None;
                    }
                    idx[j] = pos as usize;
                    grid.unknown_of(grid.flat(idx))
                };
                let p = node(left, &mut idx);
                let q = node(right, &mut idx);
                if p.is_none() && q.is_none() {
                    continue;
                }
                let mut mid: Vec<f64> = (0..d).map(|a| grid.axis_coord(idx[a] as isize)).collect();
                mid[j] = grid.axis_coord(i) + 0.5 * h;
                let bj = b(&mid)[j];
                let w = c64::from_polar(1.0, -h * bj);
                let e = edge_radius.len();
                edge_radius.push(mid.iter().map(|x| x * x).sum::<f64>().sqrt());
                if let Some(p) = p {
                    kin.push((p, p, c64::new(inv_h * inv_h, 0.0)));
                    grad.push((e, p, c64::new(-inv_h, 0.0)));
                }
                if let Some(q) = q {
                    kin.push((q, q, c64::new(inv_h * inv_h, 0.0)));
                    grad.push((e, q, w * inv_h));
                }
                if let (Some(p), Some(q)) = (p, q) {
                    kin.push((p, q, -w * inv_h * inv_h));
                    kin.push((q, p, -w.conj() * inv_h * inv_h));
                }
            }
        }
    }
    let kinetic = Csr::from_triplets(m, m, &kin);
    let gradient = Csr::from_triplets(edge_radius.len(), m, &grad);
    let positions = grid.positions();
    let potential: Vec<f64> = positions.iter().map(|x| v(x)).collect();
    let mut trips = kinetic.triplets();
    trips.extend(potential.iter().enumerate().map(|(k, &p)| (k, k, c64::new(p, 0.0))));
    let matrix = Csr::from_triplets(m, m, &trips);
    Ok(DiscreteOperator {
        matrix,
        kind,
        d_eff: d,
        radius: grid.radii(),
        cell: grid.cell(),
        h,
        kinetic,
        gradient: Some(Gradient { matrix: gradient, edge_radius }),
        potential,
        outgoing: Vec::new(),
        self_adjoint: true,
    })
}

/// Magnetic Schrodinger operator on an obstacle-free grid.
pub fn assemble_magnetic(grid: &Grid, fields: &FieldSpec) -> Result<DiscreteOperator> {
    if grid.has_obstacle() {
        return invalid("magnetic assembly is restricted to grids without obstacle");
    }
    let kind = if fields.b.is_zero() && fields.v == Profile::Zero { OperatorKind::Free } else { OperatorKind::Magnetic };
    check_field_dims(grid, fields)?;
    assemble_with(grid, &|x| fields.v_at(x), &|x| fields.b_at(x), kind)
}

fn check_field_dims(grid: &Grid, fields: &FieldSpec) -> Result<()> {
    let probe = vec![0.0; grid.d];
    if fields.b_at(&probe).len() != grid.d {
        return Err(crate::Error::Domain("magnetic field dimension does not match the grid".into()));
    }
    Ok(())
}

/// Dirichlet realization of `-Delta + V` outside the masked obstacle.
pub fn assemble_dirichlet_exterior(grid: &Grid, v: &Profile) -> Result<DiscreteOperator> {
    let kind = if grid.has_obstacle() { OperatorKind::DirichletExterior } else { OperatorKind::Free };
    let d = grid.d;
    assemble_with(grid, &|x| v.eval(x.iter().map(|t| t * t).sum::<f64>().sqrt()), &|_| vec![0.0; d], kind)
}

/// Literal expansion `-Delta u + i div(b u) + i b . grad u + (V + |b|^2) u` by
/// central differences, kept as a consistency check for the covariant form.
pub fn assemble_magnetic_literal(grid: &Grid, fields: &FieldSpec) -> Result<DiscreteOperator> {
    if grid.has_obstacle() {
        return invalid("magnetic assembly is restricted to grids without obstacle");
    }
    check_field_dims(grid, fields)?;
    let base = assemble_with(grid, &|x| fields.vtilde_at(x), &|x| vec![0.0; x.len()], OperatorKind::Literal)?;
    let (d, n, h) = (grid.d, grid.n, grid.h);
    let mut trips = base.matrix.triplets();
    let i = c64::new(0.0, 1.0);
    for k in 0..grid.unknowns() {
        let full = grid.full_of(k);
        let idx = grid.multi_index(full);
        let x = grid.coord(full);
        let bx = fields.b_at(&x);
        for j in 0..d {
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
                let q = match grid.unknown_of(grid.flat(&nb)) {
                    Some(q) => q,
                    None => continue,
                };
                let bq = fields.b_at(&grid.coord(grid.flat(&nb)))[j];
                // i d_j(b_j u) + i b_j d_j u
                trips.push((k, q, i * (sgn / (2.0 * h)) * (bq + bx[j])));
            }
        }
    }
    let m = grid.unknowns();
    Ok(DiscreteOperator { matrix: Csr::from_triplets(m, m, &trips), self_adjoint: false, ..base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Magnetic, Obstacle};
    use crate::linalg::cr;

    #[test]
    fn one_dimensional_stencil() {
        let g = Grid::cartesian(1, 4, 2.5).unwrap();
        assert!((g.h - 1.0).abs() < 1e-15);
        let op = assemble_magnetic(&g, &FieldSpec::free()).unwrap();
        let dense = op.matrix.to_dense();
        for r in 0..4usize {
            for c in 0..4 {
                let want = if r == c {
                    2.0
                } else if r.abs_diff(c) == 1 {
                    -1.0
                } else {
                    0.0
                };
                assert_eq!(dense[(r, c)], cr(want));
            }
        }
    }

    #[test]
    fn gradient_factorizes_kinetic_part() {
        let g = Grid::cartesian(2, 6, 1.0).unwrap();
        let f = FieldSpec {
            v: Profile::Zero,
            b: Magnetic::Exponential { amp: vec![0.7, -0.4], rate: 0.5 },
            class: crate::lattice::DecayClass::Exponential { c: 0.5 },
        };
        let op = assemble_magnetic(&g, &f).unwrap();
        let gm = &op.gradient.as_ref().unwrap().matrix;
        let gg = gm.adjoint().mul(gm);
        let diff = gg.add(&op.kinetic, cr(-1.0));
        assert!(diff.max_abs() < 1e-12);
        assert!(op.hermitian_defect() < 1e-13);
    }

    #[test]
    fn obstacle_without_field_matches_plain_assembly() {
        let g = Grid::cartesian(2, 8, 2.0).unwrap();
        let a = assemble_dirichlet_exterior(&g, &Profile::Zero).unwrap();
        let b = assemble_magnetic(&g, &FieldSpec::free()).unwrap();
        assert_eq!(a.matrix, b.matrix);
    }

    #[test]
    fn disconnected_exterior_rejected() {
        // a ball covering everything but the corners leaves them isolated
        let r = Grid::cartesian(2, 6, 1.0).unwrap().with_obstacle(&Obstacle::ball(vec![0.0, 0.0], 1.0));
        assert!(matches!(r, Err(crate::Error::Domain(_))));
        let ok = Grid::cartesian(2, 6, 1.0).unwrap().with_obstacle(&Obstacle::ball(vec![0.0, 0.0], 0.3));
        assert!(ok.is_ok());
    }
}
