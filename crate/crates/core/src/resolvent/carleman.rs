//! Carleman ratio experiments and the conjugated resolvent bounds, both on the
//! `nu = 0` sector in three dimensions, acting on `u = r f`.

use faer::c64;
use rand::Rng;

use super::NormOptions;
use crate::cutoffs::hs::smooth_step;
use crate::error::{invalid, Error, Result};
use crate::fit::loglog_fit;
use crate::lattice::{assemble_radial_sector, conjugated_radial, ConjugationWeight, DiscreteOperator, Profile, RadialBoundary, RadialGrid, Sign};
use crate::linalg::{lanczos_norm, rng, CVec, Csr, Gram, SparseLu};
use crate::weights::{japanese, CarlemanParams};

/// Which form of the estimate is tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CarlemanVariant {
    /// `f` vanishes for `r < 1` (the `(1 - psi)` form), `L^2` right side.
    Cutoff,
    /// No support condition, `L^2` right side.
    Whole,
    /// No support condition, `H^{-1}_h` right side.
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlemanSides {
    pub lhs: f64,
    /// `h tau^{-1/2} ||<x>^s (P_phi - lambda^2 +- i eps) f||`.
    pub rhs_main: f64,
    /// `A^l (eps h)^{1/2} ||f||`.
    pub rhs_absorption: f64,
}

impl CarlemanSides {
    /// `None` when both sides vanish.
    pub fn ratio(&self) -> Option<f64> {
        let rhs = self.rhs_main + self.rhs_absorption;
        if rhs == 0.0 {
            if self.lhs == 0.0 {
                None
            } else {
                Some(f64::INFINITY)
            }
        } else {
            Some(self.lhs / rhs)
        }
    }
}

/// Operators and weights shared by all trials of one `(params, lambda, eps)`.
pub struct CarlemanSetup {
    pub params: CarlemanParams<f64>,
    pub lambda: f64,
    pub epsilon: f64,
    pub h: f64,
    pub grid: RadialGrid,
    base: DiscreteOperator,
    shifted: Csr,
    w_minus: Vec<f64>,
    w_plus: Vec<f64>,
    dual_lu: SparseLu,
}

impl CarlemanSetup {
    pub fn new(params: &CarlemanParams<f64>, lambda: f64, epsilon: f64, sign: Sign, grid: &RadialGrid) -> Result<Self> {
        if !(lambda > 0.0 && epsilon > 0.0 && epsilon <= 1.0) {
            return invalid("need lambda > 0 and 0 < eps <= 1");
        }
        if !grid.from_origin {
            return invalid("Carleman experiments run on grids from the origin");
        }
        let h = 1.0 / (lambda + params.tau);
        let base = assemble_radial_sector(0, 3, &Profile::Zero, grid, RadialBoundary::Dirichlet)?;
        let conj = conjugated_radial(grid, 3, 0, &ConjugationWeight::new(*params, 0.0))?;
        let e = crate::lattice::Spectral::Absorbing { lambda, epsilon, sign }.energy();
        let shifted = conj.matrix.shifted(e, &[]);
        let radii = grid.radii();
        let s = params.s;
        let w_minus = radii.iter().map(|&r| japanese(r).powf(-s)).collect();
        let w_plus = radii.iter().map(|&r| japanese(r).powf(s)).collect();
        let dual_lu = SparseLu::new(&base.sobolev_matrix(h))?;
        Ok(Self { params: *params, lambda, epsilon, h, grid: *grid, base, shifted, w_minus, w_plus, dual_lu })
    }

    pub fn sides(&self, u: &[c64], variant: CarlemanVariant) -> Result<CarlemanSides> {
        if u.len() != self.base.dim() {
            return invalid("test function has the wrong length");
        }
        if variant == CarlemanVariant::Cutoff {
            let inner = self.grid.radii().iter().zip(u).any(|(r, v)| *r < 1.0 && v.norm() > 0.0);
            if inner {
                return Err(Error::Support("cutoff variant needs f = 0 for r < 1".into()));
            }
        }
        let scale = |x: &[c64], w: &[f64]| -> CVec { x.iter().zip(w).map(|(a, b)| a * b).collect() };
        let h = self.h;
        let lhs = self.base.sobolev_norm(&scale(u, &self.w_minus), h, 1)?;
        let g = scale(&self.shifted.matvec(u), &self.w_plus);
        let g_norm = match variant {
            CarlemanVariant::Dual => {
                let x = self.dual_lu.solve(&g);
                (crate::linalg::dot(&g, &x).re.max(0.0) * self.base.cell).sqrt()
            }
            _ => self.base.l2_norm(&g),
        };
        let rhs_main = h * self.params.tau.powf(-0.5) * g_norm;
        let rhs_absorption = self.params.a().powf(self.params.ell) * (self.epsilon * h).sqrt() * self.base.l2_norm(u);
        Ok(CarlemanSides { lhs, rhs_main, rhs_absorption })
    }
}

impl CarlemanSetup {
    /// Quadratic forms `W- (1 + h^2 K) W-` and `L* W+^2 L` on the `u` that vanish
    /// at the outer node (and for `r < 1` in the cutoff form). Since `L u` is
    /// kept on every node, the zero extension of `u` sees the whole-space
    /// operator.
    pub fn pencil(&self, cutoff: bool) -> Result<Pencil> {
        let n = self.base.dim();
        let radii = self.grid.radii();
        let keep: Vec<usize> = (0..n - 1).filter(|&j| !cutoff || radii[j] >= 1.0).collect();
        let m = keep.len();
        if m == 0 {
            return invalid("no admissible nodes");
        }
        let trips: Vec<_> = keep.iter().enumerate().map(|(k, &j)| (j, k, c64::new(1.0, 0.0))).collect();
        let embed = Csr::from_triplets(n, m, &trips);
        let sob = self.base.sobolev_matrix(self.h);
        let a = embed.adjoint().mul(&sob.scaled(&self.w_minus, &self.w_minus)).mul(&embed);
        let l = self.shifted.mul(&embed);
        let w2: Vec<f64> = self.w_plus.iter().map(|w| w * w).collect();
        let b = l.adjoint().mul(&l.scaled(&w2, &vec![1.0; m]));
        let lu = SparseLu::new(&b)?;
        Ok(Pencil { embed, a, b, lu, scale: self.h * self.params.tau.powf(-0.5) })
    }

    /// Supremum of `lhs / rhs_main` for the `L^2` forms. Dropping the
    /// absorption term makes this an upper bound for every sampled ratio.
    pub fn best_constant(&self, variant: CarlemanVariant, opts: &NormOptions) -> Result<f64> {
        if variant == CarlemanVariant::Dual {
            return invalid("best constant is available for the L^2 forms only");
        }
        self.pencil(variant == CarlemanVariant::Cutoff)?.constant(opts)
    }
}

/// Generalized pair `(A, B)` whose top eigenvalue is the squared best constant.
pub struct Pencil {
    embed: Csr,
    a: Csr,
    b: Csr,
    lu: SparseLu,
    scale: f64,
}

impl Pencil {
    pub fn constant(&self, opts: &NormOptions) -> Result<f64> {
        let apply = |x: &[c64]| self.b.matvec(x);
        let apply_inv = |x: &[c64]| self.lu.solve(x);
        let g = Gram::General { apply: &apply, apply_inv: &apply_inv };
        let m = self.a.nrows;
        let v = lanczos_norm(m, &|x: &[c64]| self.a.matvec(x), &g, opts.max_iter, opts.tol, opts.seed).value;
        Ok(v / self.scale)
    }

    /// `steps` rounds of `u <- B^{-1} A u` on the admissible part of `u`.
    pub fn filter(&self, u: &[c64], steps: usize) -> CVec {
        let mut x = self.embed.matvec_adjoint(u);
        for _ in 0..steps {
            x = self.lu.solve(&self.a.matvec(&x));
            let nrm = crate::linalg::norm2(&x);
            if nrm > 0.0 {
                x.iter_mut().for_each(|v| *v /= nrm);
            }
        }
        self.embed.matvec(&x)
    }
}

pub fn carleman_sides(
    params: &CarlemanParams<f64>,
    lambda: f64,
    epsilon: f64,
    sign: Sign,
    variant: CarlemanVariant,
    grid: &RadialGrid,
    u: &[c64],
) -> Result<CarlemanSides> {
    CarlemanSetup::new(params, lambda, epsilon, sign, grid)?.sides(u, variant)
}

/// Shape of a random test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestShape {
    /// Smooth envelope times a random low-pass trigonometric sum.
    Noise,
    /// `e^{tau phi}` times a random band around `lambda`, so that the
    /// conjugated operator nearly annihilates it.
    QuasiMode,
    /// Noise after a few generalized power steps toward the extremal function.
    Filtered,
}

fn envelope(r: f64, lo: f64, hi: f64, taper_left: bool) -> f64 {
    let w = ((hi - lo) / 3.0).min(1.0);
    let left = if taper_left { smooth_step((r - lo) / w).0 } else { f64::from(r < hi) };
    let right = smooth_step((hi - r) / w).0;
    left * right
}

/// Random `u = r f` on the grid.
pub fn test_function(
    params: &CarlemanParams<f64>,
    lambda: f64,
    grid: &RadialGrid,
    variant: CarlemanVariant,
    shape: TestShape,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<CVec> {
    let r_max = grid.r_outer();
    let lo = if variant == CarlemanVariant::Cutoff { 1.0 } else { 0.0 };
    let hi = (0.5 * params.a()).max(lo + 2.0).min(0.9 * r_max);
    if !(hi > lo + grid.h * 8.0) {
        return invalid("radial grid too short for the test support");
    }
    let modes = 8;
    let (freqs, amps): (Vec<f64>, Vec<(f64, f64)>) = (0..modes)
        .map(|k| {
            let w = match shape {
                TestShape::Noise | TestShape::Filtered => 4.0 * (k as f64 + rng.random::<f64>()) / modes as f64,
                TestShape::QuasiMode => lambda * (0.9 + 0.2 * rng.random::<f64>()),
            };
            (w, (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        })
        .unzip();
    let radii = grid.radii();
    let phase_max = match shape {
        TestShape::Noise | TestShape::Filtered => 0.0,
        TestShape::QuasiMode => {
            let w = ConjugationWeight::new(*params, 0.0);
            radii.iter().filter(|&&r| r <= hi).map(|&r| w.phase(r)).collect::<Result<Vec<_>>>()?.into_iter().fold(f64::NEG_INFINITY, f64::max)
        }
    };
    let w = ConjugationWeight::new(*params, 0.0);
    radii
        .iter()
        .map(|&r| {
            let env = envelope(r, lo, hi, variant == CarlemanVariant::Cutoff);
            if env == 0.0 {
                return Ok(c64::new(0.0, 0.0));
            }
            let mut v = 0.0;
            for (om, (a, b)) in freqs.iter().zip(&amps) {
                v += match shape {
                    TestShape::Noise | TestShape::Filtered => r * (a * (om * r).cos() + b * (om * r).sin()),
                    TestShape::QuasiMode => a * (om * r).sin() + b * r * (om * r).cos(),
                };
            }
            let amp = match shape {
                TestShape::Noise | TestShape::Filtered => 1.0,
                TestShape::QuasiMode => (w.phase(r)? - phase_max).exp(),
            };
            Ok(c64::new(env * amp * v, 0.0))
        })
        .collect()
}

const FILTER_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct RatioStats {
    pub ratios: Vec<f64>,
    pub max: f64,
    pub median: f64,
    /// Largest observed ratio, the empirical constant.
    pub fitted_constant: f64,
    pub degenerate: usize,
    pub trials: usize,
    /// Supremum over all admissible `u` for the `L^2` forms.
    pub best_constant: Option<f64>,
}

impl RatioStats {
    pub fn from_ratios(ratios: Vec<Option<f64>>) -> Self {
        let trials = ratios.len();
        let mut r: Vec<f64> = ratios.into_iter().flatten().collect();
        let degenerate = trials - r.len();
        r.sort_by(|a, b| a.total_cmp(b));
        let max = r.last().copied().unwrap_or(f64::NAN);
        let median = if r.is_empty() {
            f64::NAN
        } else if r.len() % 2 == 1 {
            r[r.len() / 2]
        } else {
            0.5 * (r[r.len() / 2 - 1] + r[r.len() / 2])
        };
        Self { ratios: r, max, median, fitted_constant: max, degenerate, trials, best_constant: None }
    }
}

/// LHS / RHS over `trials` random functions cycling through the three shapes.
#[allow(clippy::too_many_arguments)]
pub fn carleman_ratio(
    params: &CarlemanParams<f64>,
    lambda: f64,
    epsilon: f64,
    sign: Sign,
    trials: usize,
    variant: CarlemanVariant,
    grid: &RadialGrid,
    seed: u64,
) -> Result<RatioStats> {
    let setup = CarlemanSetup::new(params, lambda, epsilon, sign, grid)?;
    let pencil = setup.pencil(variant == CarlemanVariant::Cutoff)?;
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(trials);
    let shapes = [TestShape::Filtered, TestShape::QuasiMode, TestShape::Noise];
    for t in 0..trials {
        let shape = shapes[t % 3];
        let mut u = test_function(params, lambda, grid, variant, shape, &mut r)?;
        if shape == TestShape::Filtered {
            u = pencil.filter(&u, FILTER_STEPS);
        }
        out.push(setup.sides(&u, variant)?.ratio());
    }
    let mut stats = RatioStats::from_ratios(out);
    if variant != CarlemanVariant::Dual {
        stats.best_constant = Some(pencil.constant(&NormOptions { seed, ..NormOptions::default() })?);
    }
    Ok(stats)
}

/// `(h^2 P_phi +- i theta^2)^{-1}` conjugated by `<x>^{-+p}`, with `-h^2 Delta`
/// as the reference for the Neumann series.
pub struct ConjugatedResolvent {
    pub h: f64,
    pub sign: Sign,
    base: DiscreteOperator,
    /// `h^2 P_{phi_{-p}}`.
    hp: Csr,
    /// `h^2 Q_{-p}`.
    hq: Csr,
    sob: Csr,
    sob_lu: SparseLu,
}

impl ConjugatedResolvent {
    /// `params = None` drops the Carleman phase, keeping only the `<x>^p` twist.
    pub fn new(params: Option<CarlemanParams<f64>>, tau: f64, lambda: f64, p: f64, sign: Sign, grid: &RadialGrid) -> Result<Self> {
        if !(lambda > 0.0 && tau >= 0.0) {
            return invalid("need lambda > 0 and tau >= 0");
        }
        let h = 1.0 / (lambda + tau);
        let w = ConjugationWeight { params, tau: params.map(|q| q.tau).unwrap_or(tau), p_exp: -p };
        let base = assemble_radial_sector(0, 3, &Profile::Zero, grid, RadialBoundary::Dirichlet)?;
        let conj = conjugated_radial(grid, 3, 0, &w)?;
        let hp = conj.matrix.scaled(&vec![h * h; grid.n], &vec![1.0; grid.n]);
        let hq = conj.matrix.add(&base.matrix, c64::new(-1.0, 0.0)).scaled(&vec![h * h; grid.n], &vec![1.0; grid.n]);
        let sob = base.sobolev_matrix(h);
        let sob_lu = SparseLu::new(&sob)?;
        Ok(Self { h, sign, base, hp, hq, sob, sob_lu })
    }

    fn shift(&self, theta: f64) -> c64 {
        // the sign acts on the subtracted energy, as for absorbing solves
        match self.sign {
            Sign::Minus => c64::new(0.0, -theta * theta),
            Sign::Plus => c64::new(0.0, theta * theta),
        }
    }

    /// `||h^2 Q (-h^2 Delta +- i theta^2)^{-1}||` on `L^2`.
    pub fn neumann_norm(&self, theta: f64, opts: &NormOptions) -> Result<f64> {
        let h2 = self.h * self.h;
        let free = self.base.matrix.scaled(&vec![h2; self.base.dim()], &vec![1.0; self.base.dim()]);
        let lu = SparseLu::new(&free.shifted(self.shift(theta), &[]))?;
        let normal = |x: &[c64]| -> CVec { lu.solve_adjoint(&self.hq.matvec_adjoint(&self.hq.matvec(&lu.solve(x)))) };
        Ok(lanczos_norm(self.base.dim(), &normal, &Gram::Identity, opts.max_iter, opts.tol, opts.seed).value)
    }

    /// Norms `H^{-1}_h -> H^1_h`, `H^{-1}_h -> L^2`, `L^2 -> H^1_h`, `L^2 -> L^2`.
    pub fn norms(&self, theta: f64, opts: &NormOptions) -> Result<[f64; 4]> {
        let lu = SparseLu::new(&self.hp.shifted(self.shift(theta), &[]))?;
        let n = self.base.dim();
        let plain = |x: &[c64]| -> CVec { lu.solve_adjoint(&lu.solve(x)) };
        let to_h1 = |x: &[c64]| -> CVec { lu.solve_adjoint(&self.sob.matvec(&lu.solve(x))) };
        let apply = |x: &[c64]| self.sob_lu.solve(x);
        let apply_inv = |x: &[c64]| self.sob.matvec(x);
        let dual = Gram::General { apply: &apply, apply_inv: &apply_inv };
        let run = |a: &dyn Fn(&[c64]) -> CVec, g: &Gram<'_>| lanczos_norm(n, a, g, opts.max_iter, opts.tol, opts.seed).value;
        let out = [run(&to_h1, &dual), run(&plain, &dual), run(&to_h1, &Gram::Identity), run(&plain, &Gram::Identity)];
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite conjugated resolvent norm".into()));
        }
        Ok(out)
    }
}

/// Smallest `theta` (above `floor`) with Neumann norm at most 1/2, by bracketing
/// and geometric bisection.
pub fn neumann_threshold(cr: &ConjugatedResolvent, floor: f64, opts: &NormOptions) -> Result<f64> {
    let ok = |t: f64| -> Result<bool> { Ok(cr.neumann_norm(t, opts)? <= 0.5) };
    if ok(floor)? {
        return Ok(floor);
    }
    let mut hi = floor;
    let mut lo = floor;
    for _ in 0..60 {
        hi *= 2.0;
        if ok(hi)? {
            break;
        }
        lo = hi;
    }
    if !ok(hi)? {
        return Err(Error::Numerical("Neumann series does not converge for any tested theta".into()));
    }
    while hi / lo > 1.0 + 1e-3 {
        let mid = (hi * lo).sqrt();
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugatedResolventReport {
    pub theta0: f64,
    pub thetas: Vec<f64>,
    /// `norms[i][k]` is norm `k` at `thetas[i]`.
    pub norms: Vec<[f64; 4]>,
    /// Fitted log-log exponents per norm.
    pub exponents: [f64; 4],
}

/// Norms at one `theta`, rejected below the Neumann threshold.
#[allow(clippy::too_many_arguments)]
pub fn conjugated_resolvent_norms(
    params: Option<CarlemanParams<f64>>,
    tau: f64,
    lambda: f64,
    theta: f64,
    p: f64,
    sign: Sign,
    grid: &RadialGrid,
    opts: &NormOptions,
) -> Result<[f64; 4]> {
    let cr = ConjugatedResolvent::new(params, tau, lambda, p, sign, grid)?;
    let n = cr.neumann_norm(theta, opts)?;
    if n > 0.5 {
        return Err(Error::Numerical(format!("Neumann series diverges at theta={theta} (norm {n:.3})")));
    }
    cr.norms(theta, opts)
}

/// Threshold, norms at `theta0 * {1, 2, 4}` and the fitted exponents.
#[allow(clippy::too_many_arguments)]
pub fn conjugated_resolvent_check(
    params: Option<CarlemanParams<f64>>,
    tau: f64,
    lambda: f64,
    p: f64,
    sign: Sign,
    grid: &RadialGrid,
    floor: f64,
    opts: &NormOptions,
) -> Result<ConjugatedResolventReport> {
    let cr = ConjugatedResolvent::new(params, tau, lambda, p, sign, grid)?;
    let theta0 = neumann_threshold(&cr, floor, opts)?;
    let thetas = vec![theta0, 2.0 * theta0, 4.0 * theta0];
    let norms = thetas.iter().map(|&t| cr.norms(t, opts)).collect::<Result<Vec<_>>>()?;
    let mut exponents = [0.0; 4];
    for (k, e) in exponents.iter_mut().enumerate() {
        let y: Vec<f64> = norms.iter().map(|v| v[k]).collect();
        *e = loglog_fit(&thetas, &y)?.slope;
    }
    Ok(ConjugatedResolventReport { theta0, thetas, norms, exponents })
}
