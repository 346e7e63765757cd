//! Weighted local energy decay, with and without frequency cutoffs.

use std::collections::HashMap;

use faer::{c64, Mat};

use super::{propagate, sinc_t, SpectralDecomposition};
use crate::cutoffs::{cutoff_order_for_time, CutoffFamily};
use crate::error::{invalid, Error, Result};
use crate::fit::{aic, linear_fit};
use crate::lattice::SectorStack;
use crate::linalg::{cz, lanczos_norm, random_cvec, rng, CVec, Gram};
use crate::quad::gauss_legendre;
use crate::resolvent::{low_frequency_sweep, NormOptions};
use crate::weights::mu;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Probe {
    /// Sum of the three operator norms of the cosine/sine propagators.
    OperatorNorm,
    /// Worst local energy over a seeded batch of data `mu g`.
    RandomData { batch: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySettings {
    /// `mu = e^{-c <x> / 2}`.
    pub mu_c: f64,
    /// Resolved band `Omega h`; every propagator carries `e^{-P / Omega^2}`.
    pub band: f64,
    pub probe: Probe,
    pub fit_window: (f64, f64),
    pub opts: NormOptions,
}

impl Default for DecaySettings {
    fn default() -> Self {
        Self {
            mu_c: 1.0,
            band: 0.25,
            probe: Probe::OperatorNorm,
            fit_window: (2.0, 30.0),
            opts: NormOptions { max_iter: 60, tol: 1e-9, seed: 0x5eed },
        }
    }
}

/// Time-dependent order `m(t) = floor(t / (C e))`, clamped to `[1, m_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSchedule {
    pub delta: f64,
    pub constant: f64,
    pub m_max: usize,
}

impl CutoffSchedule {
    /// `C` from the fitted derivative constant of `rho_{m_max}`.
    pub fn fitted(delta: f64, m_max: usize) -> Result<Self> {
        let fam = CutoffFamily::<f64>::new(m_max, delta)?;
        Ok(Self { delta, constant: fam.fitted_rho_constant(), m_max })
    }

    pub fn order(&self, t: f64) -> usize {
        cutoff_order_for_time(t, self.constant).min(self.m_max)
    }
}

/// Evidence that the zero frequency is regular: a bounded low-frequency profile.
#[derive(Debug, Clone, PartialEq)]
pub struct LowFrequencyCertificate {
    pub d_eff: usize,
    pub s: f64,
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
    pub variation: f64,
    pub tolerance: f64,
}

pub fn certify_low_frequency(
    stack: &SectorStack,
    s: f64,
    lambdas: &[f64],
    epsilon: f64,
    tolerance: f64,
    opts: &NormOptions,
) -> Result<LowFrequencyCertificate> {
    let prof = low_frequency_sweep(stack, s, lambdas, epsilon, opts)?;
    let variation = prof.variation();
    if !(variation < tolerance) {
        return Err(Error::Precondition(format!(
            "low-frequency profile varies by {variation:.3} (tolerance {tolerance}); zero may be a resonance"
        )));
    }
    Ok(LowFrequencyCertificate { d_eff: stack.d_eff, s, lambdas: lambdas.to_vec(), norms: prof.norms, variation, tolerance })
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecayMode {
    Cutoff(CutoffSchedule),
    Fixed { m: usize, delta: f64 },
    NoCutoff(Option<LowFrequencyCertificate>),
}

impl DecayMode {
    fn delta(&self) -> Option<f64> {
        match self {
            DecayMode::Cutoff(s) => Some(s.delta),
            DecayMode::Fixed { delta, .. } => Some(*delta),
            DecayMode::NoCutoff(_) => None,
        }
    }

    fn order(&self, t: f64) -> usize {
        match self {
            DecayMode::Cutoff(s) => s.order(t),
            DecayMode::Fixed { m, .. } => *m,
            DecayMode::NoCutoff(_) => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `q ~ C1 e^{-c1 t}`.
    pub c1: f64,
    pub big_c1: f64,
    pub r2: f64,
    /// Standard error of the fitted slope.
    pub slope_se: f64,
    pub points: usize,
    /// Exponent of the competing power law `q ~ t^p`.
    pub power_exponent: f64,
    pub power_r2: f64,
    pub aic_exponential: f64,
    pub aic_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    pub t: Vec<f64>,
    pub quantity: Vec<f64>,
    /// Cutoff order per time, 0 without cutoff.
    pub orders: Vec<usize>,
    pub delta: Option<f64>,
    pub fit: DecayFit,
}

fn fit_decay(t: &[f64], q: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (&ti, &qi) in t.iter().zip(q) {
        if ti > 0.0 && ti >= window.0 && ti <= window.1 && qi > 0.0 {
            x.push(ti);
            y.push(qi.ln());
        }
    }
    if x.len() < 3 {
        return Err(Error::Numerical("fewer than three positive samples in the fit window".into()));
    }
    let e = linear_fit(&x, &y)?;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let p = linear_fit(&lx, &y)?;
    let n = x.len();
    let mx = x.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let slope_se = if n > 2 { (e.rss / (n - 2) as f64 / sxx).sqrt() } else { f64::INFINITY };
    Ok(DecayFit {
        c1: -e.slope,
        big_c1: e.intercept.exp(),
        r2: e.r2,
        slope_se,
        points: n,
        power_exponent: p.slope,
        power_r2: p.r2,
        aic_exponential: aic(e.rss, n, 2),
        aic_power: aic(p.rss, n, 2),
    })
}

fn check_times(t: &[f64]) -> Result<()> {
    if t.is_empty() || t.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || t.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("time grid must be nonnegative, finite and increasing");
    }
    Ok(())
}

pub(crate) fn dense_mv(m: &Mat<c64>, x: &[c64]) -> CVec {
    (0..m.nrows()).map(|i| (0..m.ncols()).fold(cz(), |acc, j| acc + m[(i, j)] * x[j])).collect()
}

fn hermitian_sqrt(s: &Mat<c64>) -> Result<Mat<c64>> {
    let eig = s
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let (u, d) = (eig.U(), eig.S().column_vector());
    let k = s.nrows();
    let ud = Mat::<c64>::from_fn(k, k, |i, j| u[(i, j)] * d[j].re.max(0.0).sqrt());
    Ok(&ud * u.adjoint())
}

/// One sector restricted to the modes the propagators can see.
struct Band<'a> {
    dec: &'a SpectralDecomposition,
    modes: Vec<usize>,
    w: Vec<f64>,
    filter: Vec<f64>,
    weight: Vec<f64>,
    mu_c: f64,
    /// `(V* mu^2 V)^{1/2}` and `(G mu V)* (G mu V)` on the band.
    s_half: Option<Mat<c64>>,
    s_grad: Option<Mat<c64>>,
}

impl<'a> Band<'a> {
    fn new(dec: &'a SpectralDecomposition, lo: f64, settings: &DecaySettings, operator: bool) -> Result<Self> {
        let omega = settings.band / dec.h;
        let weight: Vec<f64> = dec.radius.iter().map(|&r| mu(r, settings.mu_c)).collect();
        let mut modes = Vec::new();
        let mut w = Vec::new();
        let mut filter = Vec::new();
        for (j, f) in dec.frequencies().into_iter().enumerate() {
            let fl = (-(f / omega).powi(2)).exp();
            if f > lo && fl > 1e-18 {
                modes.push(j);
                w.push(f);
                filter.push(fl);
            }
        }
        let mut band = Self { dec, modes, w, filter, weight, mu_c: settings.mu_c, s_half: None, s_grad: None };
        if operator && !band.modes.is_empty() {
            let (n, k) = (dec.dim(), band.modes.len());
            let x = Mat::<c64>::from_fn(n, k, |i, j| dec.vectors[(i, band.modes[j])] * band.weight[i]);
            band.s_half = Some(hermitian_sqrt(&(x.adjoint() * &x))?);
            let g = dec.gradient.as_ref().ok_or_else(|| Error::Domain("operator carries no gradient".into()))?;
            let m = g.matrix.nrows;
            let mut z = Mat::<c64>::zeros(m, k);
            for j in 0..k {
                let col: CVec = (0..n).map(|i| dec.vectors[(i, band.modes[j])]).collect();
                let gc = g.matrix.matvec(&col);
                for e in 0..m {
                    z[(e, j)] = gc[e] * mu(g.edge_radius[e], settings.mu_c);
                }
            }
            band.s_grad = Some(z.adjoint() * &z);
        }
        Ok(band)
    }

    fn synth(&self, c: &[c64]) -> CVec {
        let n = self.dec.dim();
        let mut out = vec![cz(); n];
        for (j, &cj) in c.iter().enumerate() {
            let col = self.modes[j];
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.dec.vectors[(i, col)] * cj;
            }
        }
        out
    }

    fn project(&self, x: &[c64]) -> CVec {
        let n = self.dec.dim();
        self.modes.iter().map(|&col| (0..n).fold(cz(), |acc, i| acc + self.dec.vectors[(i, col)].conj() * x[i])).collect()
    }

    /// `||mu cos ψ mu|| + ||mu sin/w ψ mu|| + ||mu grad sin/w ψ mu||`.
    fn operator_norms(&self, cutoff: &[f64], t: f64, opts: &NormOptions) -> f64 {
        let (Some(sh), Some(sg)) = (&self.s_half, &self.s_grad) else { return 0.0 };
        let k = self.w.len();
        let dcos: Vec<f64> = (0..k).map(|j| (t * self.w[j]).cos() * cutoff[j] * self.filter[j]).collect();
        let dsin: Vec<f64> = (0..k).map(|j| sinc_t(t, self.w[j]) * cutoff[j] * self.filter[j]).collect();
        let sandwich = |d: &[f64], x: &[c64]| -> CVec {
            let y = dense_mv(sh, x);
            let y: CVec = y.iter().zip(d).map(|(a, b)| a * b).collect();
            dense_mv(sh, &y)
        };
        let herm = |d: &[f64]| {
            let a = |x: &[c64]| sandwich(d, &sandwich(d, x));
            lanczos_norm(k, &a, &Gram::Identity, opts.max_iter, opts.tol, opts.seed).value
        };
        let grad = {
            let a = |x: &[c64]| {
                let y = dense_mv(sh, x);
                let y: CVec = y.iter().zip(&dsin).map(|(a, b)| a * b).collect();
                let y = dense_mv(sg, &y);
                let y: CVec = y.iter().zip(&dsin).map(|(a, b)| a * b).collect();
                dense_mv(sh, &y)
            };
            lanczos_norm(k, &a, &Gram::Identity, opts.max_iter, opts.tol, opts.seed).value
        };
        herm(&dcos) + herm(&dsin) + grad
    }

    /// Local energy `||mu u|| + ||mu grad u|| + ||mu u_t||` (root of the sum of squares)
    /// for band coefficients `(a, b)` of the data.
    fn local_energy(&self, cutoff: &[f64], a: &[c64], b: &[c64], t: f64) -> Result<f64> {
        let k = self.w.len();
        let mut cu = vec![cz(); k];
        let mut cv = vec![cz(); k];
        for j in 0..k {
            let (s, c) = (t * self.w[j]).sin_cos();
            let f = cutoff[j] * self.filter[j];
            cu[j] = (a[j] * c + b[j] * sinc_t(t, self.w[j])) * f;
            cv[j] = (-a[j] * (self.w[j] * s) + b[j] * c) * f;
        }
        let u = self.synth(&cu);
        let ut = self.synth(&cv);
        let m0 = weighted(&u, &self.weight) * self.dec.cell.sqrt();
        let m2 = weighted(&ut, &self.weight) * self.dec.cell.sqrt();
        let c = self.mu_c;
        let m1 = self.dec.gradient_norm(&u, &|r| mu(r, c))?;
        Ok((m0 * m0 + m1 * m1 + m2 * m2).sqrt())
    }
}

fn weighted(x: &[c64], w: &[f64]) -> f64 {
    x.iter().zip(w).map(|(a, b)| (a * b).norm_sqr()).sum::<f64>().sqrt()
}

struct Families {
    delta: Option<f64>,
    cache: HashMap<usize, CutoffFamily<f64>>,
}

impl Families {
    fn weights(&mut self, m: usize, w: &[f64]) -> Result<Vec<f64>> {
        let Some(delta) = self.delta else { return Ok(vec![1.0; w.len()]) };
        if !self.cache.contains_key(&m) {
            self.cache.insert(m, CutoffFamily::new(m, delta)?);
        }
        let fam = &self.cache[&m];
        Ok(w.iter().map(|&x| fam.psi(x)).collect())
    }
}

/// Random data batch: per batch member the band coefficients of `mu g1`, `mu g2`
/// and `||g1||^2 + ||g2||^2`.
fn random_batch(band: &Band, batch: usize, seed: u64) -> Vec<(CVec, CVec, f64)> {
    let n = band.dec.dim();
    let mut r = rng(seed);
    (0..batch)
        .map(|_| {
            let g1 = random_cvec(&mut r, n);
            let g2 = random_cvec(&mut r, n);
            let f1: CVec = g1.iter().zip(&band.weight).map(|(a, b)| a * b).collect();
            let f2: CVec = g2.iter().zip(&band.weight).map(|(a, b)| a * b).collect();
            let norm = (crate::linalg::norm2(&g1).powi(2) + crate::linalg::norm2(&g2).powi(2)) * band.dec.cell;
            (band.project(&f1), band.project(&f2), norm)
        })
        .collect()
}

/// Decay curve of the weighted propagators on a list of sectors (the quantity is
/// the maximum over sectors). No preconditions are checked here.
pub fn decay_curve(
    decs: &[SpectralDecomposition],
    mode: &DecayMode,
    t_grid: &[f64],
    settings: &DecaySettings,
) -> Result<DecayCurve> {
    check_times(t_grid)?;
    if decs.is_empty() {
        return invalid("decay curve needs at least one decomposition");
    }
    if !(settings.band > 0.0 && settings.mu_c > 0.0) {
        return invalid("band and weight rate must be positive");
    }
    let lo = mode.delta().unwrap_or(-1.0);
    let operator = settings.probe == Probe::OperatorNorm;
    let bands = decs.iter().map(|d| Band::new(d, lo, settings, operator)).collect::<Result<Vec<_>>>()?;
    let batches: Vec<_> = match settings.probe {
        Probe::RandomData { batch, seed } => bands.iter().map(|b| random_batch(b, batch.max(1), seed)).collect(),
        Probe::OperatorNorm => Vec::new(),
    };
    let mut fams = Families { delta: mode.delta(), cache: HashMap::new() };
    let mut quantity = Vec::with_capacity(t_grid.len());
    let mut orders = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let m = mode.order(t);
        orders.push(m);
        let mut q: f64 = 0.0;
        for (s, band) in bands.iter().enumerate() {
            let cut = fams.weights(m.max(1), &band.w)?;
            let v = match settings.probe {
                Probe::OperatorNorm => band.operator_norms(&cut, t, &settings.opts),
                Probe::RandomData { .. } => {
                    let mut best: f64 = 0.0;
                    for (a, b, norm) in &batches[s] {
                        best = best.max(band.local_energy(&cut, a, b, t)? / norm.sqrt());
                    }
                    best
                }
            };
            q = q.max(v);
        }
        if !q.is_finite() {
            return Err(Error::Numerical(format!("non-finite decay quantity at t = {t}")));
        }
        quantity.push(q);
    }
    let fit = fit_decay(t_grid, &quantity, settings.fit_window)?;
    Ok(DecayCurve { t: t_grid.to_vec(), quantity, orders, delta: mode.delta(), fit })
}

/// [`decay_curve`] with the preconditions of the decay theorem: without a
/// cutoff the dimension must be odd and a low-frequency certificate present.
pub fn decay_experiment(
    decs: &[SpectralDecomposition],
    mode: &DecayMode,
    t_grid: &[f64],
    settings: &DecaySettings,
) -> Result<DecayCurve> {
    if let DecayMode::NoCutoff(cert) = mode {
        let Some(cert) = cert else {
            return Err(Error::Precondition("decay without cutoff needs a low-frequency certificate".into()));
        };
        for d in decs {
            if d.d_eff % 2 == 0 {
                return Err(Error::Precondition(format!("decay without cutoff needs odd dimension, got {}", d.d_eff)));
            }
            if d.d_eff != cert.d_eff {
                return Err(Error::Precondition("certificate was issued for another dimension".into()));
            }
        }
        if !(cert.variation < cert.tolerance) {
            return Err(Error::Precondition("certificate does not certify boundedness".into()));
        }
    }
    decay_curve(decs, mode, t_grid, settings)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffComparison {
    pub with_cutoff: DecayCurve,
    pub without_cutoff: DecayCurve,
    /// Fitted exponential slope with cutoff strictly more negative.
    pub cutoff_steeper: bool,
    /// Without cutoff the power law wins on AIC.
    pub power_law_preferred: bool,
}

pub fn cutoff_comparison(
    decs: &[SpectralDecomposition],
    schedule: CutoffSchedule,
    t_grid: &[f64],
    settings: &DecaySettings,
) -> Result<CutoffComparison> {
    let with_cutoff = decay_curve(decs, &DecayMode::Cutoff(schedule), t_grid, settings)?;
    let without_cutoff = decay_curve(decs, &DecayMode::NoCutoff(None), t_grid, settings)?;
    let cutoff_steeper = with_cutoff.fit.c1 > without_cutoff.fit.c1;
    let power_law_preferred = without_cutoff.fit.aic_power < without_cutoff.fit.aic_exponential;
    Ok(CutoffComparison { with_cutoff, without_cutoff, cutoff_steeper, power_law_preferred })
}

/// Energy inside the ball `r <= r_obs` at time `t`, relative to the total.
pub fn huygens_check(dec: &SpectralDecomposition, f1: &[c64], f2: &[c64], r_obs: f64, t: f64) -> Result<f64> {
    let (u, ut) = propagate(dec, f1, f2, t);
    let total = dec.energy(f1, f2);
    if !(total > 0.0) {
        return Ok(0.0);
    }
    let inside = |r: f64| if r <= r_obs { 1.0 } else { 0.0 };
    let kin = dec.weighted_norm(&ut, &inside);
    let grad = dec.gradient_norm(&u, &inside)?;
    Ok((kin * kin + grad * grad) / total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedDecay {
    pub t: Vec<f64>,
    /// `int_t^T ||mu cos(s sqrt P) psi mu f||^2 ds` plus the remainder estimate.
    pub tails: Vec<f64>,
    /// Bound on the neglected `int_T^inf`, from the observed exponential envelope.
    pub remainder: f64,
    pub data_norm: f64,
    /// Smallest `C_k` with `tail(t) <= C^{2k+2} (k!)^2 t^{-2k} ||f||^2` over the grid.
    pub constants: Vec<f64>,
    /// `max C_k / min C_k`.
    pub k_spread: f64,
}

/// Tails of the squared weighted cosine propagator for the datum `f`, with the
/// factorial envelope fitted for `k = 0..=k_max`.
pub fn integrated_decay_check(
    dec: &SpectralDecomposition,
    family: Option<&CutoffFamily<f64>>,
    f: &[c64],
    k_max: usize,
    t_grid: &[f64],
    t_max: f64,
    settings: &DecaySettings,
) -> Result<IntegratedDecay> {
    check_times(t_grid)?;
    if let Some(fam) = family {
        if k_max > fam.m() {
            return invalid(format!("k = {k_max} exceeds the cutoff order {}", fam.m()));
        }
    }
    if *t_grid.last().unwrap() >= t_max {
        return invalid("time grid must end before the truncation time");
    }
    let lo = family.map(|f| f.delta()).unwrap_or(-1.0);
    let band = Band::new(dec, lo, settings, false)?;
    let fw: CVec = f.iter().zip(&band.weight).map(|(a, b)| a * b).collect();
    let a = band.project(&fw);
    let cut: Vec<f64> = match family {
        Some(fam) => band.w.iter().map(|&x| fam.psi(x)).collect(),
        None => vec![1.0; band.w.len()],
    };
    let q2 = |s: f64| -> f64 {
        let c: CVec = (0..a.len()).map(|j| a[j] * ((s * band.w[j]).cos() * cut[j] * band.filter[j])).collect();
        let u = band.synth(&c);
        weighted(&u, &band.weight).powi(2) * dec.cell
    };
    let (x, w) = gauss_legendre(8);
    let seg = |lo: f64, hi: f64| -> f64 {
        let panels = ((hi - lo) / 0.25).ceil().max(1.0) as usize;
        let hw = (hi - lo) / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * hw;
            for (xi, wi) in x.iter().zip(&w) {
                acc += wi * q2(mid + 0.5 * hw * xi);
            }
        }
        acc * 0.5 * hw
    };
    // remainder from the envelope over the last fifth of [t_last, T]
    let t_last = *t_grid.last().unwrap();
    let (s0, s1) = (t_max - 0.2 * (t_max - t_last), t_max);
    let (q0, q1) = (q2(s0), q2(s1));
    let remainder = if q0 > 0.0 && q1 > 0.0 && q1 < q0 {
        let beta = (q0 / q1).ln() / (s1 - s0);
        q1 / beta
    } else {
        q1 * (t_max - t_last)
    };
    let mut tails = vec![0.0; t_grid.len()];
    let mut acc = remainder + seg(t_last, t_max);
    for i in (0..t_grid.len()).rev() {
        if i + 1 < t_grid.len() {
            acc += seg(t_grid[i], t_grid[i + 1]);
        }
        tails[i] = acc;
    }
    let data_norm = crate::linalg::norm2(f) * dec.cell.sqrt();
    let mut constants = Vec::with_capacity(k_max + 1);
    let mut fact = 1.0;
    for k in 0..=k_max {
        if k > 0 {
            fact *= k as f64;
        }
        let mut best: f64 = 0.0;
        if data_norm > 0.0 {
            for (&t, &tail) in t_grid.iter().zip(&tails) {
                let v = tail * t.powi(2 * k as i32) / (fact * fact * data_norm * data_norm);
                best = best.max(v.powf(1.0 / (2 * k + 2) as f64));
            }
        }
        constants.push(best);
    }
    let hi = constants.iter().cloned().fold(0.0, f64::max);
    let lo_c = constants.iter().cloned().fold(f64::INFINITY, f64::min);
    let k_spread = if lo_c > 0.0 { hi / lo_c } else { 1.0 };
    Ok(IntegratedDecay { t: t_grid.to_vec(), tails, remainder, data_norm, constants, k_spread })
}
