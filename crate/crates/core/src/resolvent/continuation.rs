//! Continuation of `mu (P - lambda^2)^{-1} mu` across the real axis.
//!
//! All problems live in a window of an infinite lattice whose ends carry the
//! exact outgoing relation, so the window matrix is the restriction of the
//! full-lattice resolvent. The free resolvent enters through the lattice Green's
//! function, which continues to complex `lambda` in closed form.
//!
//! Case a (whole space, `P = P0 + Q`): with `D0 = R0(lambda) - R0(z)`,
//! `X_z = mu R(z) mu`, `Qh = mu^{-1} Q mu^{-1}` and `K = mu D0 mu`,
//!
//! ```text
//! F1 = X_z + (I - X_z Qh) K,   F2 = -(I - X_z Qh) K Qh,   mu R mu = (I - F2)^{-1} F1.
//! ```
//!
//! Case b (exterior of a ball, `eta = 1` near the obstacle):
//!
//! ```text
//! Q1 = (1 - eta) + R(z) [P0, eta] - R(z) (1 - eta) V
//! (I + K) mu R mu = mu R(z) mu + mu Q1 D0 (1 - eta) mu
//! K = -(lambda^2 - z^2) X_z eta (2 - eta) mu^{-2} + mu Q1 D0 ([P0, eta] + (1 - eta) V) mu^{-1}.
//! ```

use faer::{c64, Mat};

use crate::error::{invalid, Error, Result};
use crate::freekernel::{lattice_halfline_green, lattice_line_green};
use crate::lattice::{
    assemble_radial_sector, assemble_with, DiscreteOperator, Grid, OperatorKind, OutgoingSlot, Profile, RadialBoundary,
    RadialGrid, Spectral,
};
use crate::linalg::{cr, dense_solve, Csr};
use crate::weights::mu;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContinuationCase {
    /// Perturbation of the free operator on the whole space.
    A,
    /// Dirichlet exterior problem glued to the free resolvent by a cutoff.
    B,
}

/// Which free lattice resolvent the window is cut from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreenKind {
    /// Window node `j` is lattice site `j` of the line.
    Line,
    /// Window node `j` is site `offset + j + 1` of the odd-ghost half-line.
    HalfLine { offset: usize },
}

impl GreenKind {
    fn entry(&self, h: f64, lambda: c64, j: usize, k: usize) -> c64 {
        match *self {
            GreenKind::Line => lattice_line_green(h, lambda, j as i64 - k as i64),
            GreenKind::HalfLine { offset } => lattice_halfline_green(h, lambda, offset + j + 1, offset + k + 1),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationProblem {
    pub case: ContinuationCase,
    /// Window operator with outgoing ends.
    pub op: DiscreteOperator,
    /// Same window, free operator (case a) or `P0` on the exterior nodes (case b).
    pub free: DiscreteOperator,
    pub green: GreenKind,
    /// Weight constant: `mu = e^{-c <x> / 2}`.
    pub c: f64,
    /// Cutoff values per node, case b only.
    pub eta: Vec<f64>,
}

fn line_slots(grid: &Grid) -> Vec<OutgoingSlot> {
    let n = grid.n;
    let h = grid.h;
    vec![
        OutgoingSlot { node: 0, c: 0.0, order: 0.5, r_node: grid.axis_coord(0).abs(), r_ghost: grid.axis_coord(-1).abs() },
        OutgoingSlot {
            node: n - 1,
            c: 0.0,
            order: 0.5,
            r_node: grid.axis_coord(n as isize - 1).abs(),
            r_ghost: grid.axis_coord(n as isize - 1).abs() + h,
        },
    ]
}

/// Case a on the line with potential `v` and magnetic potential `b`, both cut
/// to the window. The two wall edges carry no field.
pub fn line_problem(n: usize, half_width: f64, v: &dyn Fn(f64) -> f64, b: &dyn Fn(f64) -> f64, c: f64) -> Result<ContinuationProblem> {
    let grid = Grid::cartesian(1, n, half_width)?;
    let (x_lo, x_hi) = (grid.axis_coord(0), grid.axis_coord(n as isize - 1));
    let bw = |x: &[f64]| -> Vec<f64> { vec![if x[0] < x_lo || x[0] > x_hi { 0.0 } else { b(x[0]) }] };
    let mut op = assemble_with(&grid, &|x| v(x[0]), &bw, OperatorKind::Magnetic)?;
    let mut free = assemble_with(&grid, &|_| 0.0, &|_| vec![0.0], OperatorKind::Free)?;
    op.outgoing = line_slots(&grid);
    op.self_adjoint = false;
    free.outgoing = line_slots(&grid);
    free.self_adjoint = false;
    check_weight(c)?;
    Ok(ContinuationProblem { case: ContinuationCase::A, op, free, green: GreenKind::Line, c, eta: Vec::new() })
}

/// Case a on the `nu = 0` sector in three dimensions, `b = 0`.
pub fn radial_problem(n: usize, r_max: f64, v: &Profile, c: f64) -> Result<ContinuationProblem> {
    let grid = RadialGrid::origin(n, r_max)?;
    let op = assemble_radial_sector(0, 3, v, &grid, RadialBoundary::Outgoing)?;
    let free = assemble_radial_sector(0, 3, &Profile::Zero, &grid, RadialBoundary::Outgoing)?;
    check_weight(c)?;
    Ok(ContinuationProblem { case: ContinuationCase::A, op, free, green: GreenKind::HalfLine { offset: 0 }, c, eta: Vec::new() })
}

/// Case b outside the ball of radius `(k0 - 1/2) h`, `nu = 0` sector in three
/// dimensions. `eta = 1` up to `r_in + eta_flat`, then drops smoothly to zero
/// over `eta_width`.
#[allow(clippy::too_many_arguments)]
pub fn exterior_ball_problem(
    k0: usize,
    n: usize,
    h: f64,
    v: &Profile,
    c: f64,
    eta_flat: f64,
    eta_width: f64,
) -> Result<ContinuationProblem> {
    if k0 == 0 {
        return invalid("the obstacle must contain at least one half-line site");
    }
    let r_in = (k0 as f64 - 0.5) * h;
    let grid = RadialGrid::exterior(n, r_in, r_in + (n + 1) as f64 * h)?;
    let op = assemble_radial_sector(0, 3, v, &grid, RadialBoundary::Outgoing)?;
    let free = assemble_radial_sector(0, 3, &Profile::Zero, &grid, RadialBoundary::Outgoing)?;
    let eta: Vec<f64> = grid
        .radii()
        .iter()
        .map(|&r| 1.0 - crate::cutoffs::hs::smooth_step((r - r_in - eta_flat) / eta_width).0)
        .collect();
    if eta[0] != 1.0 {
        return Err(Error::Support("eta must equal 1 at the first exterior node".into()));
    }
    if eta[n - 1] != 0.0 || eta[n - 2] != 0.0 {
        return Err(Error::Support("eta must vanish near the outer end of the window".into()));
    }
    check_weight(c)?;
    Ok(ContinuationProblem { case: ContinuationCase::B, op, free, green: GreenKind::HalfLine { offset: k0 }, c, eta })
}

fn check_weight(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return invalid("weight constant must be positive");
    }
    Ok(())
}

fn diag_scale(m: &Mat<c64>, left: &[f64], right: &[f64]) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (left[i] * right[j]))
}

fn sparse_dense(a: &Csr) -> Mat<c64> {
    a.to_dense()
}

/// Blocks at a fixed anchor. Immutable once built.
#[derive(Debug, Clone)]
pub struct ContinuationState {
    pub problem: ContinuationProblem,
    pub z: c64,
    pub mu: Vec<f64>,
    /// `mu R(z) mu`.
    pub x_z: Mat<c64>,
    /// Case a: `mu^{-1} Q mu^{-1}`.
    q_hat: Mat<c64>,
    /// Case a: `I - X_z Qh`. Case b: `mu Q1 mu^{-1}`.
    left: Mat<c64>,
    /// Case b: `mu^{-1} ([P0, eta] + (1 - eta) V) mu^{-1}`.
    b_hat: Mat<c64>,
    /// Case b: `eta (2 - eta) mu^{-2}`.
    n_diag: Vec<f64>,
}

impl ContinuationState {
    /// Assembles all anchor blocks. `z` real or with `Im z < 0`.
    pub fn build(problem: ContinuationProblem, z: c64) -> Result<Self> {
        if z.im > 0.0 {
            return invalid("anchor must be real or in the lower half plane");
        }
        if z.norm() == 0.0 {
            return invalid("anchor must be nonzero");
        }
        let op = &problem.op;
        let n = op.dim();
        let mu_v: Vec<f64> = op.radius.iter().map(|&r| mu(r, problem.c)).collect();
        let inv: Vec<f64> = mu_v.iter().map(|m| 1.0 / m).collect();
        let lu = op.factor(Spectral::Continued(z)).map_err(|e| Error::Numerical(format!("anchor solve failed: {e}")))?;
        let rhs = Mat::from_fn(n, n, |i, j| if i == j { cr(mu_v[i]) } else { cr(0.0) });
        let sol = lu.solve_many(&rhs);
        let x_z = diag_scale(&sol, &mu_v, &vec![1.0; n]);
        if x_z.as_ref().col_iter().any(|c| c.iter().any(|v| !v.re.is_finite() || !v.im.is_finite())) {
            return Err(Error::Numerical("anchor solve failed: singular at z".into()));
        }
        let ident = Mat::<c64>::identity(n, n);
        let (q_hat, left, b_hat, n_diag) = match problem.case {
            ContinuationCase::A => {
                let q = op.matrix.add(&problem.free.matrix, cr(-1.0));
                let q_hat = diag_scale(&sparse_dense(&q), &inv, &inv);
                let left = &ident - &x_z * &q_hat;
                (q_hat, left, Mat::zeros(0, 0), Vec::new())
            }
            ContinuationCase::B => {
                let eta = &problem.eta;
                let p0 = sparse_dense(&problem.free.kinetic);
                // [P0, eta]_{jk} = P0_{jk} (eta_k - eta_j)
                let comm = Mat::from_fn(n, n, |j, k| p0[(j, k)] * (eta[k] - eta[j]));
                let v = &op.potential;
                let tail = |j: usize| (1.0 - eta[j]) * v[j];
                // B~ = [P0, eta] - (1 - eta) V, B' = (1 - eta) V + [P0, eta] = -B
                let bt = Mat::from_fn(n, n, |j, k| comm[(j, k)] - if j == k { cr(tail(j)) } else { cr(0.0) });
                let bp = Mat::from_fn(n, n, |j, k| comm[(j, k)] + if j == k { cr(tail(j)) } else { cr(0.0) });
                let bt_hat = diag_scale(&bt, &inv, &inv);
                let one_minus = Mat::from_fn(n, n, |i, j| if i == j { cr(1.0 - eta[i]) } else { cr(0.0) });
                let left = &one_minus + &x_z * &bt_hat;
                let b_hat = diag_scale(&bp, &inv, &inv);
                let n_diag = (0..n).map(|j| eta[j] * (2.0 - eta[j]) * inv[j] * inv[j]).collect();
                (Mat::zeros(0, 0), left, b_hat, n_diag)
            }
        };
        Ok(Self { problem, z, mu: mu_v, x_z, q_hat, left, b_hat, n_diag })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `mu (R0(lambda) - R0(z)) mu` on the window.
    pub fn kernel_difference(&self, lambda: c64) -> Mat<c64> {
        let h = self.problem.op.h;
        let g = self.problem.green;
        let n = self.dim();
        Mat::from_fn(n, n, |j, k| (g.entry(h, lambda, j, k) - g.entry(h, self.z, j, k)) * (self.mu[j] * self.mu[k]))
    }

    /// `(I - F2, F1)` in case a, `(I + K, right side)` in case b.
    pub fn system(&self, lambda: c64) -> (Mat<c64>, Mat<c64>) {
        let n = self.dim();
        let k = self.kernel_difference(lambda);
        let ident = Mat::<c64>::identity(n, n);
        match self.problem.case {
            ContinuationCase::A => {
                let lk = &self.left * &k;
                let f1 = &self.x_z + &lk;
                let f2 = -(&lk * &self.q_hat);
                (&ident - &f2, f1)
            }
            ContinuationCase::B => {
                let eta = &self.problem.eta;
                let lk = &self.left * &k;
                let de = lambda * lambda - self.z * self.z;
                let xn = diag_scale(&self.x_z, &vec![1.0; n], &self.n_diag);
                let kk = Mat::from_fn(n, n, |i, j| -de * xn[(i, j)]) + &lk * &self.b_hat;
                let rhs = &self.x_z + diag_scale(&lk, &vec![1.0; n], &eta.iter().map(|e| 1.0 - e).collect::<Vec<_>>());
                (&ident + &kk, rhs)
            }
        }
    }

    /// `mu R(lambda) mu` from the continuation formula.
    pub fn evaluate(&self, lambda: c64) -> Result<Mat<c64>> {
        let (a, b) = self.system(lambda);
        let x = dense_solve(&a, &b);
        if x.as_ref().col_iter().any(|c| c.iter().any(|v| !v.re.is_finite() || !v.im.is_finite())) {
            return Err(Error::Numerical(format!("continuation singular at lambda={lambda}")));
        }
        Ok(x)
    }

    /// `mu_e grad R(lambda) mu`, edge weights taken at the edge radii.
    pub fn evaluate_gradient(&self, lambda: c64) -> Result<Mat<c64>> {
        let x = self.evaluate(lambda)?;
        let g = self
            .problem
            .op
            .gradient
            .as_ref()
            .ok_or_else(|| Error::InvalidParams("operator has no gradient factorization".into()))?;
        let inv: Vec<f64> = self.mu.iter().map(|m| 1.0 / m).collect();
        let me: Vec<f64> = g.edge_radius.iter().map(|&r| mu(r, self.problem.c)).collect();
        let gd = diag_scale(&g.matrix.to_dense(), &me, &inv);
        Ok(&gd * &x)
    }

    /// Smallest singular value of `I - F2` (case a) or `I + K` (case b).
    pub fn min_singular(&self, lambda: c64) -> Result<f64> {
        crate::linalg::min_singular_value(&self.system(lambda).0)
    }

    /// `det(I - F2)` or `det(I + K)`.
    pub fn determinant(&self, lambda: c64) -> c64 {
        self.system(lambda).0.as_ref().determinant()
    }

    /// `mu (M - E(lambda))^{-1} mu` by a sparse solve on the window.
    pub fn direct(&self, spectral: Spectral) -> Result<Mat<c64>> {
        let op = &self.problem.op;
        let n = self.dim();
        let lu = op.factor(spectral)?;
        let rhs = Mat::from_fn(n, n, |i, j| if i == j { cr(self.mu[i]) } else { cr(0.0) });
        Ok(diag_scale(&lu.solve_many(&rhs), &self.mu, &vec![1.0; n]))
    }
}
