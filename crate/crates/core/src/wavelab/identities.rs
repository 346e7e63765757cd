//! Time-domain identities of the spectral propagator: Duhamel, Fourier
//! transform against the resolvent, the weighted energy derivative, norm
//! equivalences and short-time bounds with growing weights.

use faer::c64;

use super::{propagate, propagate_coefficients, sinc_t, SpectralDecomposition};
use crate::cutoffs::hs::smooth_step;
use crate::error::{invalid, Error, Result};
use crate::linalg::{cz, norm2, random_cvec, rng, CVec, SparseLu};
use crate::quad::gauss_legendre;
use crate::weights::{japanese, mu};

/// `phi(t) = 0` for `t <= gamma/3`, `1` for `t >= gamma/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSwitch {
    pub gamma: f64,
}

impl TimeSwitch {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return invalid("switch width gamma must be positive");
        }
        Ok(Self { gamma })
    }

    fn span(&self) -> (f64, f64) {
        (self.gamma / 3.0, self.gamma / 2.0)
    }

    /// `(phi, phi', phi'')`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (a, b) = self.span();
        let w = b - a;
        let (s, s1, s2) = smooth_step((t - a) / w);
        (s, s1 / w, s2 / (w * w))
    }
}

/// Nodes and weights of a composite Gauss rule on `[lo, hi]` with panel width at most `step`.
fn composite(lo: f64, hi: f64, step: f64, order: usize) -> Vec<(f64, f64)> {
    if !(hi > lo) {
        return Vec::new();
    }
    let (x, w) = gauss_legendre(order);
    let panels = ((hi - lo) / step).ceil().max(1.0) as usize;
    let hw = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * hw;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((mid + 0.5 * hw * xi, 0.5 * hw * wi));
        }
    }
    out
}

/// Coefficients of `v = phi'' u + 2 phi' u_t` at time `s`.
fn source(w: &[f64], a: &[c64], b: &[c64], sw: &TimeSwitch, s: f64) -> CVec {
    let (_, p1, p2) = sw.eval(s);
    let (u, ut) = propagate_coefficients(w, a, b, s);
    u.iter().zip(&ut).map(|(x, y)| x * p2 + y * (2.0 * p1)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuhamelReport {
    /// `max_t ||(phi u)(t) - int_0^t sin((t-s) sqrt P) P^{-1/2} v(s) ds||`.
    pub residual: f64,
    /// Same divided by `max_t ||phi u||`.
    pub relative: f64,
    pub worst_t: f64,
}

/// Duhamel check with a composite Gauss rule of `order` points per panel of
/// width `step` on the support of `v`.
pub fn duhamel_residual(
    dec: &SpectralDecomposition,
    sw: &TimeSwitch,
    f1: &[c64],
    f2: &[c64],
    t_grid: &[f64],
    step: f64,
    order: usize,
) -> Result<DuhamelReport> {
    if !(step > 0.0) || order == 0 {
        return invalid("quadrature step and order must be positive");
    }
    let w = dec.frequencies();
    let a = dec.coefficients(f1);
    let b = dec.coefficients(f2);
    let (lo, hi) = sw.span();
    let mut report = DuhamelReport { residual: 0.0, relative: 0.0, worst_t: 0.0 };
    let mut scale: f64 = 0.0;
    for &t in t_grid {
        let (u, _) = propagate_coefficients(&w, &a, &b, t);
        let phi = sw.eval(t).0;
        let mut diff: CVec = u.iter().map(|x| x * phi).collect();
        scale = scale.max(norm2(&diff));
        for (s, q) in composite(lo, hi.min(t), step, order) {
            let v = source(&w, &a, &b, sw, s);
            for j in 0..w.len() {
                diff[j] -= v[j] * (sinc_t(t - s, w[j]) * q);
            }
        }
        let r = norm2(&diff) * dec.cell.sqrt();
        if r > report.residual {
            report.residual = r;
            report.worst_t = t;
        }
    }
    let scale = scale * dec.cell.sqrt();
    report.relative = if scale > 0.0 { report.residual / scale } else { 0.0 };
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierReport {
    pub lambdas: Vec<f64>,
    /// Relative residual per `lambda` (absolute when both sides are negligible).
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Truncation time with `e^{-eps T} < 1e-10`.
    pub t_max: f64,
}

/// Compares the transform of `e^{-eps t} d_t^j (phi u)` over `[0, T]` with
/// `(i z)^j (P - z^2)^{-1} v_hat(z)`, `z = lambda - i eps`.
pub fn fourier_identity_check(
    dec: &SpectralDecomposition,
    sw: &TimeSwitch,
    f1: &[c64],
    f2: &[c64],
    epsilon: f64,
    lambdas: &[f64],
    j: usize,
) -> Result<FourierReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid("epsilon must lie in (0, 1)");
    }
    if j > 1 {
        return invalid("only j = 0 and j = 1 are supported");
    }
    let t_max = (1e10f64).ln() / epsilon;
    let w = dec.frequencies();
    let a = dec.coefficients(f1);
    let b = dec.coefficients(f2);
    let amp: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.norm() + y.norm()).collect();
    let top = amp.iter().cloned().fold(0.0, f64::max);
    let live: Vec<usize> = (0..w.len()).filter(|&k| amp[k] > 1e-15 * top).collect();
    let w_top = live.iter().map(|&k| w[k]).fold(1.0, f64::max);
    let (lo, hi) = sw.span();
    // sample phi u (or its derivative) once on the time nodes
    let time_nodes = composite(lo, t_max, (0.5 / w_top).min(0.25), 8);
    let mut samples: Vec<(f64, f64, CVec)> = Vec::with_capacity(time_nodes.len());
    for &(s, q) in &time_nodes {
        let (p0, p1, _) = sw.eval(s);
        let (u, ut) = propagate_coefficients(&w, &a, &b, s);
        let val: CVec = live.iter().map(|&k| if j == 0 { u[k] * p0 } else { u[k] * p1 + ut[k] * p0 }).collect();
        samples.push((s, q, val));
    }
    let src_nodes = composite(lo, hi, (hi - lo) / 16.0, 12);
    let srcs: Vec<(f64, f64, CVec)> = src_nodes.iter().map(|&(s, q)| (s, q, source(&w, &a, &b, sw, s))).collect();
    let mut residuals = Vec::with_capacity(lambdas.len());
    let n = dec.dim();
    for &lambda in lambdas {
        let z = c64::new(lambda, -epsilon);
        let mut coeff = vec![cz(); n];
        for (s, q, val) in &samples {
            let e = (-c64::new(0.0, 1.0) * z * *s).exp() * *q;
            for (slot, &k) in live.iter().enumerate() {
                coeff[k] += val[slot] * e;
            }
        }
        let time_side = dec.synthesize(&coeff);
        let mut vhat = vec![cz(); n];
        for (s, q, v) in &srcs {
            let e = (-c64::new(0.0, 1.0) * z * *s).exp() * *q;
            for k in 0..n {
                vhat[k] += v[k] * e;
            }
        }
        let rhs = dec.synthesize(&vhat);
        let lu = SparseLu::new(&dec.matrix.shifted(z * z, &[]))?;
        let mut res_side = lu.solve(&rhs);
        if j == 1 {
            let f = c64::new(0.0, 1.0) * z;
            res_side.iter_mut().for_each(|x| *x *= f);
        }
        let diff: f64 = time_side.iter().zip(&res_side).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        let size = norm2(&res_side).max(norm2(&time_side));
        let guard = 1e-13 * norm2(&rhs).max(1e-300);
        residuals.push(if size > guard { diff / size } else { diff });
    }
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    if !max_residual.is_finite() {
        return Err(Error::Numerical("Fourier identity produced a non-finite residual".into()));
    }
    Ok(FourierReport { lambdas: lambdas.to_vec(), residuals, max_residual, t_max })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyIdentity {
    /// Central difference of the weighted energy.
    pub finite_difference: f64,
    /// `E_1 + E_2` from the displayed formula.
    pub assembled: f64,
}

/// Weighted energy `||eta u||^2 + ||eta u_t||^2 + ||eta grad u||^2` and its
/// derivative `2 Re <eta u_t, eta u> + 2 Re <eta u_tt, eta u_t> + 2 Re <eta grad u_t, eta grad u>`.
pub fn energy_identity_check(
    dec: &SpectralDecomposition,
    eta: &dyn Fn(f64) -> f64,
    f1: &[c64],
    f2: &[c64],
    t: f64,
    dt: f64,
) -> Result<EnergyIdentity> {
    let g = dec.gradient.as_ref().ok_or_else(|| Error::Domain("operator carries no gradient".into()))?;
    let en = |s: f64| -> Result<f64> {
        let (u, ut) = propagate(dec, f1, f2, s);
        Ok(dec.weighted_norm(&u, eta).powi(2) + dec.weighted_norm(&ut, eta).powi(2) + dec.gradient_norm(&u, eta)?.powi(2))
    };
    let fd = (en(t + dt)? - en(t - dt)?) / (2.0 * dt);
    let (u, ut) = propagate(dec, f1, f2, t);
    let utt: CVec = dec.matrix.matvec(&u).into_iter().map(|x| -x).collect();
    let node = |x: &[c64], y: &[c64]| -> f64 {
        x.iter().zip(y).zip(&dec.radius).map(|((a, b), &r)| (a.conj() * b).re * eta(r) * eta(r)).sum::<f64>() * dec.cell
    };
    let gu = g.matrix.matvec(&u);
    let gut = g.matrix.matvec(&ut);
    let edge: f64 =
        gut.iter().zip(&gu).zip(&g.edge_radius).map(|((a, b), &r)| (a.conj() * b).re * eta(r) * eta(r)).sum::<f64>() * dec.cell;
    let assembled = 2.0 * node(&ut, &u) + 2.0 * node(&utt, &ut) + 2.0 * edge;
    Ok(EnergyIdentity { finite_difference: fd, assembled })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEquivalence {
    /// `max ||grad g|| / (||g|| + ||P^{1/2} g||)`.
    pub gradient_ratio: f64,
    /// `max ||P^{1/2} g|| / (||g|| + ||grad g||)`.
    pub root_ratio: f64,
    /// The two ratios on the highest eigenvector.
    pub extremal: (f64, f64),
    pub samples: usize,
}

/// Both ratios for one function; `None` when `g = 0`.
pub fn equivalence_ratios(dec: &SpectralDecomposition, g: &[c64]) -> Result<Option<(f64, f64)>> {
    let l2 = dec.l2_norm(g);
    if l2 == 0.0 {
        return Ok(None);
    }
    let grad = dec.gradient_norm(g, &|_| 1.0)?;
    let mg = dec.matrix.matvec(g);
    let root = (g.iter().zip(&mg).map(|(a, b)| (a.conj() * b).re).sum::<f64>().max(0.0) * dec.cell).sqrt();
    Ok(Some((grad / (l2 + root), root / (l2 + grad))))
}

pub fn norm_equivalence_check(dec: &SpectralDecomposition, samples: usize, seed: u64) -> Result<NormEquivalence> {
    let n = dec.dim();
    let mut r = rng(seed);
    let mut out = NormEquivalence { gradient_ratio: 0.0, root_ratio: 0.0, extremal: (0.0, 0.0), samples };
    let mut probes: Vec<CVec> = (0..samples).map(|_| random_cvec(&mut r, n)).collect();
    // smooth bump on the inner half of the radii
    let r_top = dec.radius.iter().cloned().fold(0.0, f64::max);
    probes.push(dec.radius.iter().map(|&x| c64::new(1.0 - smooth_step(2.0 * x / r_top - 0.5).0, 0.0)).collect());
    for g in &probes {
        if let Some((a, b)) = equivalence_ratios(dec, g)? {
            out.gradient_ratio = out.gradient_ratio.max(a);
            out.root_ratio = out.root_ratio.max(b);
        }
    }
    let top: CVec = (0..n).map(|i| dec.vectors[(i, n - 1)]).collect();
    if let Some(e) = equivalence_ratios(dec, &top)? {
        out.extremal = e;
        out.gradient_ratio = out.gradient_ratio.max(e.0);
        out.root_ratio = out.root_ratio.max(e.1);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortTimeBound {
    /// Truncation scales `k` of the growing weight `mu_k^{-1}`.
    pub scales: Vec<f64>,
    /// `sup_{t, f} (||mu_k^{-1} cos mu f|| + ||mu_k^{-1} P^{-1/2} sin mu f||) / ||f||` per scale.
    pub sup: Vec<f64>,
    /// Value at `t = 0` (only the cosine term is nonzero): `max_f ||mu_k^{-1} mu f|| / ||f||`.
    pub at_zero: Vec<f64>,
    /// Relative change between the last two scales.
    pub k_stability: f64,
}

/// `mu_k^{-1}(x) = exp(c/2 <x> chi(x/k))`, `chi = 1` on `|x| <= a`, `0` on `|x| >= 2a`.
pub fn truncated_inverse_weight(r: f64, c: f64, k: f64, a: f64) -> f64 {
    let chi = 1.0 - smooth_step((r / k - a) / a).0;
    (0.5 * c * japanese(r) * chi).exp()
}

pub fn short_time_bound_check(
    dec: &SpectralDecomposition,
    mu_c: f64,
    gamma: f64,
    data: &[CVec],
    scales: &[f64],
    a: f64,
    t_points: usize,
) -> Result<ShortTimeBound> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return invalid("short-time window gamma must lie in (0, 1)");
    }
    if scales.is_empty() || t_points < 2 {
        return invalid("need at least one scale and two time points");
    }
    let n = dec.dim();
    let zero = vec![cz(); n];
    let mut sup = Vec::with_capacity(scales.len());
    let mut at_zero = Vec::with_capacity(scales.len());
    for &k in scales {
        let inv = |r: f64| truncated_inverse_weight(r, mu_c, k, a);
        let mut best: f64 = 0.0;
        let mut best0: f64 = 0.0;
        for f in data {
            let norm = dec.l2_norm(f);
            if norm == 0.0 {
                continue;
            }
            let mf: CVec = f.iter().zip(&dec.radius).map(|(x, &r)| x * mu(r, mu_c)).collect();
            for i in 0..t_points {
                let t = gamma * i as f64 / (t_points - 1) as f64;
                let (uc, _) = propagate(dec, &mf, &zero, t);
                let (us, _) = propagate(dec, &zero, &mf, t);
                let v = (dec.weighted_norm(&uc, &inv) + dec.weighted_norm(&us, &inv)) / norm;
                best = best.max(v);
                if i == 0 {
                    best0 = best0.max(dec.weighted_norm(&uc, &inv) / norm);
                }
            }
        }
        sup.push(best);
        at_zero.push(best0);
    }
    let k_stability = if sup.len() >= 2 {
        let (p, q) = (sup[sup.len() - 2], sup[sup.len() - 1]);
        if p > 0.0 { (q / p - 1.0).abs() } else { 0.0 }
    } else {
        0.0
    };
    Ok(ShortTimeBound { scales: scales.to_vec(), sup, at_zero, k_stability })
}
