//! Limiting-absorption solves, weighted resolvent norms and frequency sweeps.
//!
//! Norms are those of the matrices `W_out D^a (M - E)^{-1} D^b W_in` in the
//! coefficient basis. Since domain and range carry the same cell factor this is
//! the operator norm on the weighted lattice `L^2`.

mod analytic;
mod carleman;
mod continuation;

pub use analytic::{
    cauchy_derivatives, derivative_bounds, pole_scan, scalar_derivative_bounds, square_well_bound_state,
    winding_number, DerivativeBounds, PoleCandidate, PoleMap, ScanRegion,
};
pub use carleman::{
    carleman_ratio, carleman_sides, conjugated_resolvent_check, conjugated_resolvent_norms, neumann_threshold,
    test_function, CarlemanSetup, CarlemanSides, CarlemanVariant, ConjugatedResolvent, ConjugatedResolventReport,
    RatioStats, TestShape,
};
pub use continuation::{
    exterior_ball_problem, line_problem, radial_problem, ContinuationCase, ContinuationProblem, ContinuationState,
    GreenKind,
};

use faer::c64;

use crate::error::{invalid, Error, Result};
use crate::fit::loglog_fit;
use crate::lattice::{DiscreteOperator, Sign, Spectral, SectorStack};
use crate::linalg::{lanczos_norm, norm2, CVec, Gram, NormEstimate, SparseLu};
use crate::weights::{japanese, mu};

/// Spatial weight `W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    /// `<x>^{-s}`.
    Poly { s: f64 },
    /// `mu = e^{-c <x> / 2}`.
    Exp { c: f64 },
}

impl Weight {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Weight::Poly { s } => japanese(r).powf(-s),
            Weight::Exp { c } => mu(r, c),
        }
    }

    pub fn sample(&self, radii: &[f64]) -> Vec<f64> {
        radii.iter().map(|&r| self.eval(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventQuery {
    pub lambda: f64,
    pub epsilon: f64,
    pub sign: Sign,
    pub weight: Weight,
    /// Gradient order on the left, 0 or 1.
    pub alpha: u8,
    /// Gradient order on the right, 0 or 1.
    pub beta: u8,
}

impl ResolventQuery {
    pub fn new(lambda: f64, epsilon: f64, weight: Weight) -> Self {
        Self { lambda, epsilon, sign: Sign::Minus, weight, alpha: 0, beta: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return invalid(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return invalid(format!("epsilon must lie in (0, 1], got {}", self.epsilon));
        }
        if self.alpha > 1 || self.beta > 1 {
            return invalid("derivative orders are limited to 0 and 1");
        }
        match self.weight {
            Weight::Poly { s } if !(s > 0.5) => invalid(format!("polynomial weight needs s > 1/2, got {s}")),
            Weight::Exp { c } if !(c > 0.0) => invalid(format!("exponential weight needs c > 0, got {c}")),
            _ => Ok(()),
        }
    }

    pub fn spectral(&self) -> Spectral {
        Spectral::Absorbing { lambda: self.lambda, epsilon: self.epsilon, sign: self.sign }
    }

    /// `|alpha| + |beta|`.
    pub fn order(&self) -> i32 {
        (self.alpha + self.beta) as i32
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-6, seed: 0x5eed }
    }
}

/// Solves `(M - (lambda^2 -+ i eps)) u = rhs` for a Hermitian operator.
pub fn la_solve(op: &DiscreteOperator, lambda: f64, epsilon: f64, sign: Sign, rhs: &[c64]) -> Result<CVec> {
    if !op.self_adjoint {
        return invalid("la_solve expects a self-adjoint operator");
    }
    if !(epsilon > 0.0) {
        return invalid("la_solve needs epsilon > 0");
    }
    if rhs.len() != op.dim() {
        return invalid("right-hand side has the wrong length");
    }
    let a = op.shifted(Spectral::Absorbing { lambda, epsilon, sign })?;
    let lu = SparseLu::new(&a)?;
    let u = lu.solve(rhs);
    let res: CVec = a.matvec(&u).iter().zip(rhs).map(|(x, y)| x - y).collect();
    let scale = norm2(rhs);
    if !(norm2(&res) <= 1e-10 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::Numerical(format!(
            "factorization failure at lambda={lambda}, epsilon={epsilon}; retry with a larger epsilon"
        )));
    }
    Ok(u)
}

struct WeightedSides {
    node: Vec<f64>,
    edge: Vec<f64>,
}

/// Norm of `W D^alpha (M - E(spectral))^{-1} D^beta* W`.
pub fn weighted_norm_spectral(
    op: &DiscreteOperator,
    spectral: Spectral,
    weight: Weight,
    alpha: u8,
    beta: u8,
    opts: &NormOptions,
) -> Result<NormEstimate> {
    let lu = op.factor(spectral)?;
    let grad = if alpha == 1 || beta == 1 {
        Some(op.gradient.as_ref().ok_or_else(|| Error::InvalidParams("operator has no gradient factorization".into()))?)
    } else {
        None
    };
    let w = WeightedSides {
        node: weight.sample(&op.radius),
        edge: grad.map(|g| weight.sample(&g.edge_radius)).unwrap_or_default(),
    };
    let weigh = |x: &[c64], s: &[f64]| -> CVec { x.iter().zip(s).map(|(a, b)| a * b).collect() };
    let right = |x: &[c64]| -> CVec {
        match grad {
            Some(g) if beta == 1 => g.matrix.matvec_adjoint(&weigh(x, &w.edge)),
            _ => weigh(x, &w.node),
        }
    };
    let right_adj = |u: &[c64]| -> CVec {
        match grad {
            Some(g) if beta == 1 => weigh(&g.matrix.matvec(u), &w.edge),
            _ => weigh(u, &w.node),
        }
    };
    let left = |u: &[c64]| -> CVec {
        match grad {
            Some(g) if alpha == 1 => weigh(&g.matrix.matvec(u), &w.edge),
            _ => weigh(u, &w.node),
        }
    };
    let left_adj = |x: &[c64]| -> CVec {
        match grad {
            Some(g) if alpha == 1 => g.matrix.matvec_adjoint(&weigh(x, &w.edge)),
            _ => weigh(x, &w.node),
        }
    };
    let normal = |x: &[c64]| -> CVec {
        let y = left(&lu.solve(&right(x)));
        right_adj(&lu.solve_adjoint(&left_adj(&y)))
    };
    let n = if beta == 1 { w.edge.len() } else { op.dim() };
    let est = lanczos_norm(n, &normal, &Gram::Identity, opts.max_iter, opts.tol, opts.seed);
    if !est.value.is_finite() {
        return Err(Error::Numerical("weighted norm is not finite".into()));
    }
    Ok(est)
}

pub fn weighted_norm(op: &DiscreteOperator, query: &ResolventQuery) -> Result<NormEstimate> {
    weighted_norm_with(op, query, &NormOptions::default())
}

pub fn weighted_norm_with(op: &DiscreteOperator, query: &ResolventQuery, opts: &NormOptions) -> Result<NormEstimate> {
    query.validate()?;
    weighted_norm_spectral(op, query.spectral(), query.weight, query.alpha, query.beta, opts)
}

/// Outcome of the exact bound `||(M - (lambda - i eps)^2)^{-1}|| <= 1 / (2 eps lambda)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactBound {
    pub lambda: f64,
    pub epsilon: f64,
    pub norm: f64,
    pub bound: f64,
}

impl ExactBound {
    pub fn holds(&self, rel: f64) -> bool {
        self.norm <= self.bound * (1.0 + rel)
    }
}

pub fn exact_bound_check(op: &DiscreteOperator, lambda: f64, epsilon: f64, opts: &NormOptions) -> Result<ExactBound> {
    if !op.self_adjoint || !op.outgoing.is_empty() {
        return invalid("the exact bound needs a self-adjoint operator without outgoing ends");
    }
    if !(lambda > 0.0 && epsilon > 0.0) {
        return invalid("lambda and epsilon must be positive");
    }
    let k = c64::new(lambda, -epsilon);
    let lu = op.factor(Spectral::Continued(k))?;
    let normal = |x: &[c64]| -> CVec { lu.solve_adjoint(&lu.solve(x)) };
    let est = lanczos_norm(op.dim(), &normal, &Gram::Identity, opts.max_iter, opts.tol, opts.seed);
    Ok(ExactBound { lambda, epsilon, norm: est.value, bound: 1.0 / (2.0 * epsilon * lambda) })
}

/// What a sweep evaluates: one operator, or the sectors of a radial problem
/// (the norm being the supremum over sectors).
#[derive(Debug, Clone, Copy)]
pub enum SweepTarget<'a> {
    Operator(&'a DiscreteOperator),
    Sectors(&'a SectorStack),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundProfile {
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
    /// Norms at `epsilon / 2`.
    pub norms_half_eps: Vec<f64>,
    pub epsilon: f64,
    /// `|alpha| + |beta|`.
    pub order: i32,
    /// `sup norm * lambda^{1 - order}`.
    pub fitted_constant: f64,
    /// `|norm(eps/2) / norm(eps) - 1|` per point.
    pub stability: Vec<f64>,
    /// Sectors evaluated per point (1 for a single operator).
    pub sectors_used: Vec<usize>,
    /// Worst relative Lanczos change reached.
    pub reached_tol: f64,
}

impl BoundProfile {
    pub fn max_stability(&self) -> f64 {
        self.stability.iter().cloned().fold(0.0, f64::max)
    }

    /// `norm * lambda^{1 - order}` per point.
    pub fn scaled(&self) -> Vec<f64> {
        self.lambdas.iter().zip(&self.norms).map(|(l, n)| n * l.powi(1 - self.order)).collect()
    }

    pub fn loglog_slope(&self) -> Result<f64> {
        Ok(loglog_fit(&self.lambdas, &self.norms)?.slope)
    }

    /// `max / min - 1` of the norms.
    pub fn variation(&self) -> f64 {
        let hi = self.norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.norms.iter().cloned().fold(f64::INFINITY, f64::min);
        hi / lo - 1.0
    }
}

pub(crate) fn check_lambda_grid(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParams("invalid lambda grid: empty".into()));
    }
    if lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::InvalidParams("invalid lambda grid: entries must be positive and finite".into()));
    }
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) && lambdas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParams("invalid lambda grid: not monotone".into()));
    }
    if lambdas.windows(2).any(|w| w[1] == w[0]) {
        return Err(Error::InvalidParams("invalid lambda grid: repeated entry".into()));
    }
    Ok(())
}

/// Supremum over sectors. Sectors are visited in order and the scan stops once
/// three consecutive sectors are decreasing and below half the running maximum.
fn sector_sup(stack: &SectorStack, spectral: Spectral, q: &ResolventQuery, opts: &NormOptions) -> Result<(f64, usize, f64)> {
    let mut best: f64 = 0.0;
    let mut run = 0;
    let mut prev = f64::INFINITY;
    let mut used = 0;
    let mut reached: f64 = 0.0;
    for op in &stack.sectors {
        let est = weighted_norm_spectral(op, spectral, q.weight, q.alpha, q.beta, opts)?;
        used += 1;
        reached = reached.max(est.reached_tol);
        best = best.max(est.value);
        if est.value < 0.5 * best && est.value < prev {
            run += 1;
        } else {
            run = 0;
        }
        prev = est.value;
        if run >= 3 {
            break;
        }
    }
    Ok((best, used, reached))
}

fn target_norm(target: SweepTarget<'_>, q: &ResolventQuery, opts: &NormOptions) -> Result<(f64, usize, f64)> {
    match target {
        SweepTarget::Operator(op) => {
            let e = weighted_norm_spectral(op, q.spectral(), q.weight, q.alpha, q.beta, opts)?;
            Ok((e.value, 1, e.reached_tol))
        }
        SweepTarget::Sectors(stack) => sector_sup(stack, q.spectral(), q, opts),
    }
}

/// `weighted_norm` over a monotone frequency grid, each point repeated at
/// `epsilon / 2` for the stability record.
pub fn lambda_sweep(target: SweepTarget<'_>, lambdas: &[f64], template: &ResolventQuery, opts: &NormOptions) -> Result<BoundProfile> {
    check_lambda_grid(lambdas)?;
    let mut prof = BoundProfile {
        lambdas: lambdas.to_vec(),
        norms: Vec::new(),
        norms_half_eps: Vec::new(),
        epsilon: template.epsilon,
        order: template.order(),
        fitted_constant: 0.0,
        stability: Vec::new(),
        sectors_used: Vec::new(),
        reached_tol: 0.0,
    };
    for &lambda in lambdas {
        let q = ResolventQuery { lambda, ..*template };
        q.validate()?;
        let (n1, used, r1) = target_norm(target, &q, opts)?;
        let q2 = ResolventQuery { epsilon: q.epsilon / 2.0, ..q };
        let (n2, _, r2) = target_norm(target, &q2, opts)?;
        prof.norms.push(n1);
        prof.norms_half_eps.push(n2);
        prof.stability.push((n2 / n1 - 1.0).abs());
        prof.sectors_used.push(used);
        prof.reached_tol = prof.reached_tol.max(r1).max(r2);
    }
    prof.fitted_constant = prof.scaled().into_iter().fold(0.0, f64::max);
    if !prof.fitted_constant.is_finite() {
        return Err(Error::Numerical("non-finite bound profile".into()));
    }
    Ok(prof)
}

/// Low-frequency profile of `sum_{l=0,1} ||<x>^{-s} grad^l R <x>^{-s}||` on a
/// radial sector stack with `d_eff >= 5` and `V >= 0`.
pub fn low_frequency_sweep(stack: &SectorStack, s: f64, lambdas: &[f64], epsilon: f64, opts: &NormOptions) -> Result<BoundProfile> {
    if stack.d_eff < 5 {
        return Err(Error::Precondition(format!("low-frequency sweep needs d_eff >= 5, got {}", stack.d_eff)));
    }
    if !(s > 1.0) {
        return Err(Error::Precondition(format!("s > 1 required, got {s}")));
    }
    if stack.sectors.iter().any(|op| op.potential.iter().any(|v| *v < 0.0)) {
        return Err(Error::Precondition("V >= 0 required".into()));
    }
    check_lambda_grid(lambdas)?;
    let weight = Weight::Poly { s };
    let mut prof = BoundProfile {
        lambdas: lambdas.to_vec(),
        norms: Vec::new(),
        norms_half_eps: Vec::new(),
        epsilon,
        order: 1,
        fitted_constant: 0.0,
        stability: Vec::new(),
        sectors_used: Vec::new(),
        reached_tol: 0.0,
    };
    for &lambda in lambdas {
        let mut pair = [0.0; 2];
        let mut used = 0;
        for (slot, eps) in [epsilon, epsilon / 2.0].into_iter().enumerate() {
            let mut total = 0.0;
            for ell in 0..2u8 {
                let q = ResolventQuery { lambda, epsilon: eps, sign: Sign::Minus, weight, alpha: ell, beta: 0 };
                q.validate()?;
                let (v, u, r) = sector_sup(stack, q.spectral(), &q, opts)?;
                total += v;
                used = used.max(u);
                prof.reached_tol = prof.reached_tol.max(r);
            }
            pair[slot] = total;
        }
        prof.norms.push(pair[0]);
        prof.norms_half_eps.push(pair[1]);
        prof.stability.push((pair[1] / pair[0] - 1.0).abs());
        prof.sectors_used.push(used);
    }
    prof.fitted_constant = prof.norms.iter().cloned().fold(0.0, f64::max);
    Ok(prof)
}
