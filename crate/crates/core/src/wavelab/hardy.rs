//! Hardy-type bound `|| |x|^{-1} f || <= C || (i grad + b) f ||` on lattices.

use faer::c64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{assemble_magnetic, assemble_radial_sector, DiscreteOperator, FieldSpec, Grid, Profile, RadialBoundary, RadialGrid};
use crate::linalg::{lanczos_norm, norm2, rng, CVec, Gram, SparseLu};

#[derive(Debug, Clone)]
pub enum HardyMode {
    /// Spherically symmetric sector on `(0, r_max]`.
    Radial { n: usize, r_max: f64 },
    /// Outside the ball `r <= r_in` around the origin, Dirichlet at both ends.
    Exterior { n: usize, r_in: f64, r_out: f64 },
    /// Cartesian magnetic lattice; no node may sit at the origin.
    Magnetic { grid: Grid, fields: FieldSpec },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyReport {
    pub d_eff: usize,
    /// Discrete supremum from the generalized eigenproblem `W f = theta G* G f`.
    pub optimizer: f64,
    pub random_max: f64,
    pub max_ratio: f64,
    /// `2 / (d - 2)`.
    pub sharp: f64,
    pub trials: usize,
}

fn ratio(op: &DiscreteOperator, f: &[c64]) -> Option<f64> {
    let g = op.gradient.as_ref()?;
    let den = norm2(&g.matrix.matvec(f));
    let num = f.iter().zip(&op.radius).map(|(v, r)| v.norm_sqr() / (r * r)).sum::<f64>().sqrt();
    if den > 0.0 {
        Some(num / den)
    } else {
        None
    }
}

pub fn hardy_check(d_eff: usize, mode: &HardyMode, trials: usize, seed: u64) -> Result<HardyReport> {
    if d_eff < 3 {
        return Err(Error::Precondition(format!("Hardy bound needs d >= 3, got {d_eff}")));
    }
    let op = match mode {
        HardyMode::Radial { n, r_max } => {
            let grid = RadialGrid::origin(*n, *r_max)?;
            assemble_radial_sector(0, d_eff, &Profile::Zero, &grid, RadialBoundary::Dirichlet)?
        }
        HardyMode::Exterior { n, r_in, r_out } => {
            let grid = RadialGrid::exterior(*n, *r_in, *r_out)?;
            assemble_radial_sector(0, d_eff, &Profile::Zero, &grid, RadialBoundary::Dirichlet)?
        }
        HardyMode::Magnetic { grid, fields } => {
            if grid.d != d_eff {
                return Err(Error::Domain(format!("grid dimension {} differs from d = {d_eff}", grid.d)));
            }
            assemble_magnetic(grid, fields)?
        }
    };
    if op.radius.iter().any(|&r| r < 1e-12) {
        return Err(Error::Domain("a lattice node sits at the origin".into()));
    }
    let n = op.dim();
    let lu = SparseLu::new(&op.kinetic)?;
    let weight: Vec<f64> = op.radius.iter().map(|r| 1.0 / (r * r)).collect();
    let apply_w = |x: &[c64]| -> CVec { x.iter().zip(&weight).map(|(a, b)| a * b).collect() };
    let apply_k = |x: &[c64]| op.kinetic.matvec(x);
    let apply_kinv = |x: &[c64]| lu.solve(x);
    let gram = Gram::General { apply: &apply_k, apply_inv: &apply_kinv };
    let optimizer = lanczos_norm(n, &apply_w, &gram, 300, 1e-12, seed).value;
    let mut r = rng(seed);
    let r_top = op.radius.iter().cloned().fold(0.0, f64::max);
    let positions: Vec<Vec<f64>> = match mode {
        HardyMode::Magnetic { grid, .. } => grid.positions(),
        _ => op.radius.iter().map(|&x| vec![x]).collect(),
    };
    let dim = positions[0].len();
    let mut random_max: f64 = 0.0;
    for _ in 0..trials {
        let bumps = r.random_range(1..=4);
        let mut f = vec![c64::new(0.0, 0.0); n];
        for _ in 0..bumps {
            let centre: Vec<f64> = (0..dim)
                .map(|_| if dim == 1 { r.random::<f64>() * 0.5 * r_top } else { (r.random::<f64>() - 0.5) * r_top })
                .collect();
            let width = 0.3 + 2.7 * r.random::<f64>();
            let amp = c64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5);
            for (fi, p) in f.iter_mut().zip(&positions) {
                let d2: f64 = p.iter().zip(&centre).map(|(a, b)| (a - b) * (a - b)).sum();
                *fi += amp * (-d2 / (width * width)).exp();
            }
        }
        if let Some(v) = ratio(&op, &f) {
            random_max = random_max.max(v);
        }
    }
    Ok(HardyReport {
        d_eff,
        optimizer,
        random_max,
        max_ratio: optimizer.max(random_max),
        sharp: 2.0 / (d_eff as f64 - 2.0),
        trials,
    })
}
