//! Pole scans, Cauchy-integral derivatives and the square-well oracle.

use faer::{c64, Mat};

use super::ContinuationState;
use crate::error::{invalid, Error, Result};
use crate::linalg::max_singular_value;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRegion {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub n_re: usize,
    pub n_im: usize,
}

impl ScanRegion {
    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![0.5 * (lo + hi)],
            _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleCandidate {
    /// Grid point where the local minimum was found.
    pub raw: c64,
    pub raw_value: f64,
    /// After local refinement.
    pub lambda: c64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleMap {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// `values[i][j]` at `re[j] + i im[i]`.
    pub values: Vec<Vec<f64>>,
    pub threshold: f64,
    pub candidates: Vec<PoleCandidate>,
}

impl PoleMap {
    pub fn min_value(&self) -> f64 {
        self.values.iter().flatten().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Compass search on `f` from `start` with initial step `step`, confined to
/// the box `|Re|, |Im| <= reach` around `start`.
fn refine(f: &dyn Fn(c64) -> Result<f64>, start: c64, step: f64, reach: (f64, f64)) -> Result<(c64, f64)> {
    let mut x = start;
    let mut fx = f(x)?;
    let mut s = step;
    let inside = |y: c64| (y.re - start.re).abs() <= reach.0 && (y.im - start.im).abs() <= reach.1;
    let dirs = [c64::new(1.0, 0.0), c64::new(-1.0, 0.0), c64::new(0.0, 1.0), c64::new(0.0, -1.0)];
    let mut evals = 0;
    while s > 1e-9 * (1.0 + x.norm()) && evals < 400 {
        let mut moved = false;
        for d in dirs {
            let y = x + d * s;
            if !inside(y) {
                continue;
            }
            let fy = f(y)?;
            evals += 1;
            if fy < fx {
                x = y;
                fx = fy;
                moved = true;
                break;
            }
        }
        if !moved {
            s *= 0.5;
        }
    }
    Ok((x, fx))
}

/// Minimum singular value map of the continuation system on a rectangle;
/// local minima below `threshold` are refined and reported.
pub fn pole_scan(state: &ContinuationState, region: &ScanRegion, threshold: f64) -> Result<PoleMap> {
    let re = ScanRegion::axis(region.re.0, region.re.1, region.n_re);
    let im = ScanRegion::axis(region.im.0, region.im.1, region.n_im);
    let mut values = Vec::with_capacity(im.len());
    for &y in &im {
        let row = re.iter().map(|&x| state.min_singular(c64::new(x, y))).collect::<Result<Vec<_>>>()?;
        values.push(row);
    }
    let mut candidates = Vec::new();
    let f = |l: c64| state.min_singular(l);
    let dx = if re.len() > 1 { re[1] - re[0] } else { 0.1 };
    let dy = if im.len() > 1 { im[1] - im[0] } else { 0.1 };
    for i in 0..im.len() {
        for j in 0..re.len() {
            let v = values[i][j];
            if !(v < threshold) {
                continue;
            }
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= im.len() as i64 || b >= re.len() as i64 {
                        continue;
                    }
                    if values[a as usize][b as usize] < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                let raw = c64::new(re[j], im[i]);
                let (lambda, value) = refine(&f, raw, 0.5 * dx.min(dy), (dx, dy))?;
                candidates.push(PoleCandidate { raw, raw_value: v, lambda, value });
            }
        }
    }
    Ok(PoleMap { re, im, values, threshold, candidates })
}

/// Winding number of `g` along `lambda0 + sigma e^{i t}` sampled at `nodes` points.
pub fn winding_number(g: &dyn Fn(c64) -> c64, lambda0: c64, sigma: f64, nodes: usize) -> Result<i64> {
    if nodes < 8 {
        return invalid("winding number needs at least 8 nodes");
    }
    let vals: Vec<c64> = (0..=nodes)
        .map(|j| g(lambda0 + c64::from_polar(sigma, 2.0 * std::f64::consts::PI * j as f64 / nodes as f64)))
        .collect();
    if vals.iter().any(|v| !(v.norm() > 0.0 && v.norm().is_finite())) {
        return Err(Error::Numerical("determinant vanishes or overflows on the contour".into()));
    }
    let mut total = 0.0;
    for w in vals.windows(2) {
        let step = (w[1] / w[0]).arg();
        if step.abs() > 2.5 {
            return Err(Error::Numerical("contour under-resolved for the winding number".into()));
        }
        total += step;
    }
    Ok((total / (2.0 * std::f64::consts::PI)).round() as i64)
}

/// `d^k f(lambda0)` for `k = 0..=k_max` by the trapezoid rule on the circle
/// of radius `sigma`: `k! / (N sigma^k) sum_j f(zeta_j) e^{-i k t_j}`.
pub fn cauchy_derivatives<F>(f: F, lambda0: c64, sigma: f64, k_max: usize, nodes: usize) -> Result<Vec<Mat<c64>>>
where
    F: Fn(c64) -> Result<Mat<c64>>,
{
    if !(sigma > 0.0) || nodes <= k_max {
        return invalid("need sigma > 0 and more nodes than derivatives");
    }
    let mut acc: Vec<Mat<c64>> = Vec::new();
    for j in 0..nodes {
        let t = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
        let v = f(lambda0 + c64::from_polar(sigma, t))?;
        if acc.is_empty() {
            acc = (0..=k_max).map(|_| Mat::zeros(v.nrows(), v.ncols())).collect();
        }
        for (k, a) in acc.iter_mut().enumerate() {
            let ph = c64::from_polar(1.0, -(k as f64) * t);
            *a += Mat::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)] * ph);
        }
    }
    let mut fact = 1.0;
    for (k, a) in acc.iter_mut().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        let scale = fact / (nodes as f64 * sigma.powi(k as i32));
        *a = Mat::from_fn(a.nrows(), a.ncols(), |r, c| a[(r, c)] * scale);
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBounds {
    pub lambda0: c64,
    pub sigma: f64,
    /// `||d^k||` for `k = 0..=k_max`.
    pub norms: Vec<f64>,
    /// `max_k (||d^k|| / k!)^{1/(k+1)}`.
    pub fitted_c: f64,
}

fn fitted(norms: &[f64]) -> f64 {
    let mut fact = 1.0;
    let mut best: f64 = 0.0;
    for (k, n) in norms.iter().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        best = best.max((n / fact).powf(1.0 / (k as f64 + 1.0)));
    }
    best
}

/// Scalar version, returning the derivatives themselves.
pub fn scalar_derivative_bounds(
    f: &dyn Fn(c64) -> c64,
    lambda0: c64,
    sigma: f64,
    k_max: usize,
    nodes: usize,
) -> Result<(Vec<c64>, DerivativeBounds)> {
    let d = cauchy_derivatives(|l| Ok(Mat::from_fn(1, 1, |_, _| f(l))), lambda0, sigma, k_max, nodes)?;
    let vals: Vec<c64> = d.iter().map(|m| m[(0, 0)]).collect();
    let norms: Vec<f64> = vals.iter().map(|v| v.norm()).collect();
    let fitted_c = fitted(&norms);
    Ok((vals, DerivativeBounds { lambda0, sigma, norms, fitted_c }))
}

/// Derivatives of `mu grad^l R mu` (`l = 0, 1`) on a disc that must be free of
/// poles; a nonzero winding of the system determinant is reported as an error.
pub fn derivative_bounds(
    state: &ContinuationState,
    ell: usize,
    lambda0: c64,
    sigma: f64,
    k_max: usize,
    nodes: usize,
) -> Result<DerivativeBounds> {
    if ell > 1 {
        return invalid("only l = 0 and l = 1 are supported");
    }
    let w = winding_number(&|l| state.determinant(l), lambda0, sigma, nodes.max(64))?;
    if w != 0 {
        return Err(Error::Numerical(format!("pole in disc: winding number {w} around {lambda0} radius {sigma}")));
    }
    let d = if ell == 0 {
        cauchy_derivatives(|l| state.evaluate(l), lambda0, sigma, k_max, nodes)?
    } else {
        cauchy_derivatives(|l| state.evaluate_gradient(l), lambda0, sigma, k_max, nodes)?
    };
    let norms = d.iter().map(max_singular_value).collect::<Result<Vec<_>>>()?;
    let fitted_c = fitted(&norms);
    Ok(DerivativeBounds { lambda0, sigma, norms, fitted_c })
}

/// Largest `kappa` with `k cot(k R) = -kappa`, `k^2 + kappa^2 = V0`: the ground
/// state `-kappa^2` of the attractive well of depth `V0` and radius `R` in the
/// `nu = 0` sector in three dimensions.
pub fn square_well_bound_state(depth: f64, radius: f64) -> Result<f64> {
    if !(depth > 0.0 && radius > 0.0) {
        return invalid("well depth and radius must be positive");
    }
    let top = depth.sqrt();
    let g = |kappa: f64| {
        let k = (depth - kappa * kappa).max(0.0).sqrt();
        k * (k * radius).cos() + kappa * (k * radius).sin()
    };
    // g = sin(kR) (k cot kR + kappa) has no spurious poles; scan from the top.
    let steps = 20000;
    let mut prev = (top, g(top * (1.0 - 1e-12)));
    for i in (0..steps).rev() {
        let kappa = top * i as f64 / steps as f64;
        let v = g(kappa);
        if v == 0.0 {
            return Ok(kappa);
        }
        if v.signum() != prev.1.signum() {
            let (mut lo, mut hi) = (kappa, prev.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid).signum() == g(lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            if root > 0.0 {
                return Ok(root);
            }
        }
        prev = (kappa, v);
    }
    Err(Error::Domain("the well has no bound state".into()))
}
