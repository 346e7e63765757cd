//! Almost-analytic extensions and the Helffer-Sjostrand functional calculus.

use faer::{c64, Mat};

use crate::error::{invalid, Error, Result};

/// A real function with closed-form derivatives of every order used.
pub trait Smooth {
    fn deriv(&self, x: f64, n: usize) -> f64;
    /// Interval outside of which all derivatives are negligible.
    fn window(&self) -> (f64, f64);
}

/// `amp * exp(-(x-x0)^2 / (2 w^2))`.
#[derive(Debug, Clone, Copy)]
pub struct Gaussian {
    pub center: f64,
    pub width: f64,
    pub amp: f64,
}

impl Gaussian {
    pub fn new(center: f64, width: f64) -> Self {
        Self { center, width, amp: 1.0 }
    }
}

impl Smooth for Gaussian {
    fn deriv(&self, x: f64, n: usize) -> f64 {
        let u = (x - self.center) / self.width;
        // probabilists' Hermite polynomials
        let (mut h0, mut h1) = (1.0, u);
        let he = if n == 0 {
            1.0
        } else {
            for k in 1..n {
                let h2 = u * h1 - k as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        };
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        self.amp * sign * he * (-0.5 * u * u).exp() / self.width.powi(n as i32)
    }

    fn window(&self) -> (f64, f64) {
        (self.center - 12.0 * self.width, self.center + 12.0 * self.width)
    }
}

/// Compactly supported samples on `[a, b)` differentiated through their
/// trigonometric interpolant. Samples should vanish near both ends.
#[derive(Debug, Clone)]
pub struct Sampled {
    a: f64,
    b: f64,
    freqs: Vec<f64>,
    coef: Vec<c64>,
}

impl Sampled {
    pub fn new(a: f64, b: f64, samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 4 || !(b > a) {
            return invalid("need at least 4 samples on a nondegenerate interval");
        }
        let period = b - a;
        let half = n as i64 / 2;
        let mut freqs = Vec::with_capacity(n);
        let mut coef = Vec::with_capacity(n);
        for k in -half..(n as i64 - half) {
            let mut c = c64::new(0.0, 0.0);
            for (j, &s) in samples.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (k * j as i64) as f64 / n as f64;
                c += c64::from_polar(s, ang);
            }
            let mut c = c / n as f64;
            // split the Nyquist mode evenly so the interpolant stays real
            if n % 2 == 0 && k == -half {
                c *= 0.5;
                freqs.push(2.0 * std::f64::consts::PI * half as f64 / period);
                coef.push(c.conj());
            }
            freqs.push(2.0 * std::f64::consts::PI * k as f64 / period);
            coef.push(c);
        }
        Ok(Self { a, b, freqs, coef })
    }
}

impl Smooth for Sampled {
    fn deriv(&self, x: f64, n: usize) -> f64 {
        let t = x - self.a;
        let mut acc = c64::new(0.0, 0.0);
        for (&w, &c) in self.freqs.iter().zip(&self.coef) {
            let iw = c64::new(0.0, w).powi(n as i32);
            acc += c * iw * c64::from_polar(1.0, w * t);
        }
        acc.re
    }

    fn window(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}

/// Smooth monotone step on `[0, 1]` built from `exp(-1/t)`; returns `(s, s', s'')`.
pub fn smooth_step(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    // s = 1 / (1 + e^q), q = 1/t - 1/(1-t)
    let q = 1.0 / t - 1.0 / (1.0 - t);
    let eq = (-q.abs()).exp();
    let l = if q > 0.0 { eq / (1.0 + eq) } else { 1.0 / (1.0 + eq) };
    let l1 = eq / ((1.0 + eq) * (1.0 + eq));
    if l1 == 0.0 {
        return (l, 0.0, 0.0);
    }
    let qp = -1.0 / (t * t) - 1.0 / ((1.0 - t) * (1.0 - t));
    let qpp = 2.0 / (t * t * t) - 2.0 / ((1.0 - t).powi(3));
    (l, -l1 * qp, l1 * ((1.0 - 2.0 * l) * qp * qp - qpp))
}

/// Cut in `y`: 1 for `|y| <= y_max/2`, 0 for `|y| >= y_max`. Returns value and d/dy.
fn y_cut(y: f64, y_max: f64) -> (f64, f64) {
    let half = 0.5 * y_max;
    let t = (y.abs() - half) / half;
    let (s, sp, _) = smooth_step(t);
    let dy = -sp / half * y.signum();
    (1.0 - s, dy)
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for k in 1..=n {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

/// Order-`N` almost-analytic extension `chi(y) sum_n f^(n)(x) (iy)^n / n!`.
pub struct AlmostAnalytic<'a, F: Smooth + ?Sized> {
    f: &'a F,
    order: usize,
    y_max: f64,
    fact: Vec<f64>,
}

impl<'a, F: Smooth + ?Sized> AlmostAnalytic<'a, F> {
    pub fn new(f: &'a F, order: usize, y_max: f64) -> Self {
        Self { f, order, y_max, fact: factorials(order + 1) }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn taylor(&self, x: f64, y: f64) -> c64 {
        let mut acc = c64::new(0.0, 0.0);
        let mut iy = c64::new(1.0, 0.0);
        for n in 0..=self.order {
            acc += iy * (self.f.deriv(x, n) / self.fact[n]);
            iy *= c64::new(0.0, y);
        }
        acc
    }

    pub fn eval(&self, z: c64) -> c64 {
        let (chi, _) = y_cut(z.im, self.y_max);
        self.taylor(z.re, z.im) * chi
    }

    /// `(d_x + i d_y) / 2` of the extension, in closed form.
    pub fn dbar(&self, z: c64) -> c64 {
        let (x, y) = (z.re, z.im);
        let (chi, dchi) = y_cut(y, self.y_max);
        let n = self.order;
        let top = c64::new(0.0, y).powi(n as i32) * (self.f.deriv(x, n + 1) / self.fact[n]);
        let mut out = top * chi;
        if dchi != 0.0 {
            out += c64::new(0.0, dchi) * self.taylor(x, y);
        }
        out * 0.5
    }
}

/// Householder reduction `M = Q T Q*` of a Hermitian matrix to a real
/// symmetric tridiagonal `T`. Returns `(Q, diag, offdiag)`.
pub fn tridiagonalize(m: &Mat<c64>) -> Result<(Mat<c64>, Vec<f64>, Vec<f64>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return invalid("matrix must be square");
    }
    let mut a = m.to_owned();
    let mut q = Mat::<c64>::identity(n, n);
    let zero = c64::new(0.0, 0.0);
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let mut v: Vec<c64> = (0..len).map(|i| a[(k + 1 + i, k)]).collect();
        let sigma = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if sigma == 0.0 {
            continue;
        }
        let phase = if v[0].norm() > 0.0 { v[0] / v[0].norm() } else { c64::new(1.0, 0.0) };
        let alpha = -phase * sigma;
        v[0] -= alpha;
        let vn = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for c in &mut v {
            *c /= vn;
        }
        // A <- A H on columns k+1.., then H A on rows k+1..
        for r in 0..n {
            let mut w = zero;
            for (i, vi) in v.iter().enumerate() {
                w += a[(r, k + 1 + i)] * vi;
            }
            for (i, vi) in v.iter().enumerate() {
                a[(r, k + 1 + i)] -= w * vi.conj() * 2.0;
            }
        }
        for c in 0..n {
            let mut w = zero;
            for (i, vi) in v.iter().enumerate() {
                w += vi.conj() * a[(k + 1 + i, c)];
            }
            for (i, vi) in v.iter().enumerate() {
                a[(k + 1 + i, c)] -= *vi * w * 2.0;
            }
        }
        for r in 0..n {
            let mut w = zero;
            for (i, vi) in v.iter().enumerate() {
                w += q[(r, k + 1 + i)] * vi;
            }
            for (i, vi) in v.iter().enumerate() {
                q[(r, k + 1 + i)] -= w * vi.conj() * 2.0;
            }
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    // rotate the subdiagonal phases into Q
    let mut d = c64::new(1.0, 0.0);
    for k in 0..n.saturating_sub(1) {
        let e = a[(k + 1, k)];
        let mag = e.norm();
        off.push(mag);
        if mag > 0.0 {
            d *= e / mag;
        }
        for r in 0..n {
            q[(r, k + 1)] *= d;
        }
    }
    Ok((q, diag, off))
}

/// Adds `w (T - z)^{-1}` to `acc` for a real symmetric tridiagonal `T`, `Im z != 0`.
fn accumulate_tridiag_inverse(diag: &[f64], off: &[f64], z: c64, w: c64, acc: &mut [c64], pivl: &mut [c64], pivr: &mut [c64]) {
    let n = diag.len();
    // left and right pivots of the elimination
    pivl[0] = c64::new(diag[0], 0.0) - z;
    for i in 1..n {
        pivl[i] = c64::new(diag[i], 0.0) - z - off[i - 1] * off[i - 1] / pivl[i - 1];
    }
    pivr[n - 1] = c64::new(diag[n - 1], 0.0) - z;
    for i in (0..n - 1).rev() {
        pivr[i] = c64::new(diag[i], 0.0) - z - off[i] * off[i] / pivr[i + 1];
    }
    for j in 0..n {
        // G_jj = 1 / (pivl_j + pivr_j - (a_j - z))
        let gjj = 1.0 / (pivl[j] + pivr[j] - (c64::new(diag[j], 0.0) - z));
        let mut g = gjj;
        acc[j * n + j] += w * g;
        for i in (0..j).rev() {
            g *= -off[i] / pivl[i];
            if g.norm() < 1e-300 {
                break;
            }
            let v = w * g;
            acc[i * n + j] += v;
            acc[j * n + i] += v;
        }
    }
}

/// Quadrature layout for [`hs_apply`].
#[derive(Debug, Clone, Copy)]
pub struct HsQuadrature {
    /// Side of the square cells.
    pub cell: f64,
    /// Gauss-Legendre points per cell side.
    pub order: usize,
    /// Height of the `y` cut of the extension.
    pub y_max: f64,
    /// Absolute tolerance used to place the floor `|Im z| >= y_floor`.
    pub tol: f64,
}

impl Default for HsQuadrature {
    fn default() -> Self {
        Self { cell: 0.1, order: 4, y_max: 2.0, tol: 1e-9 }
    }
}

#[derive(Debug, Clone)]
pub struct HsResult {
    pub value: Mat<c64>,
    pub y_floor: f64,
    /// Bound on the contribution of the excluded strip `|Im z| < y_floor`.
    pub excluded_bound: f64,
    pub nodes: usize,
}

/// `f(M) = (1/pi) int dbar f~(z) (M - z)^{-1} dx dy` for Hermitian `M`.
pub fn hs_apply<F: Smooth + ?Sized>(m: &Mat<c64>, f: &F, order: usize, quad: &HsQuadrature) -> Result<HsResult> {
    if order == 0 || quad.order == 0 || !(quad.cell > 0.0) || !(quad.y_max > 0.0) {
        return invalid("bad quadrature specification");
    }
    let n = m.nrows();
    let (q, diag, off) = tridiagonalize(m)?;
    let ext = AlmostAnalytic::new(f, order, quad.y_max);
    let (xa, xb) = f.window();

    // excluded strip: (1/pi) * 2 * int_0^f int |f^(N+1)| y^(N-1) / (2 N!) dx dy
    let probe = 2000;
    let mut dmax: f64 = 0.0;
    for k in 0..=probe {
        let x = xa + (xb - xa) * k as f64 / probe as f64;
        dmax = dmax.max(f.deriv(x, order + 1).abs());
    }
    let fact_n = factorials(order)[order];
    let width = xb - xa;
    let coeff = dmax * width / (std::f64::consts::PI * order as f64 * fact_n);
    let y_floor = if coeff > 0.0 { (quad.tol / coeff).powf(1.0 / order as f64).min(0.5 * quad.y_max) } else { 0.0 };
    let excluded_bound = coeff * y_floor.powi(order as i32);

    let nx = ((width / quad.cell).ceil() as usize).max(1);
    let hx = width / nx as f64;
    let ny = (((quad.y_max - y_floor) / quad.cell).ceil() as usize).max(1);
    let hy = (quad.y_max - y_floor) / ny as f64;
    let (gx, gw) = crate::quad::gauss_legendre(quad.order);

    let mut acc = vec![c64::new(0.0, 0.0); n * n];
    let mut pl = vec![c64::new(0.0, 0.0); n];
    let mut pr = vec![c64::new(0.0, 0.0); n];
    let mut nodes = 0;
    for iy in 0..ny {
        let y0 = y_floor + iy as f64 * hy;
        for (yi, yw) in gx.iter().zip(&gw) {
            let y = y0 + 0.5 * hy * (1.0 + yi);
            for ix in 0..nx {
                let x0 = xa + ix as f64 * hx;
                for (xi, xw) in gx.iter().zip(&gw) {
                    let x = x0 + 0.5 * hx * (1.0 + xi);
                    let z = c64::new(x, y);
                    let db = ext.dbar(z);
                    if db.norm() == 0.0 {
                        continue;
                    }
                    let w = db * (0.25 * hx * hy * xw * yw / std::f64::consts::PI);
                    accumulate_tridiag_inverse(&diag, &off, z, w, &mut acc, &mut pl, &mut pr);
                    nodes += 1;
                }
            }
        }
    }
    // lower half-plane contributes the adjoint
    let s = Mat::<c64>::from_fn(n, n, |i, j| acc[i * n + j] + acc[j * n + i].conj());
    let value = &q * &s * q.adjoint();
    if value.norm_max().is_nan() {
        return Err(Error::Numerical("Helffer-Sjostrand quadrature produced NaN".into()));
    }
    Ok(HsResult { value, y_floor, excluded_bound, nodes })
}

/// `f(M)` through a dense eigendecomposition, for comparison.
pub fn spectral_apply<F: Fn(f64) -> f64>(m: &Mat<c64>, f: F) -> Result<Mat<c64>> {
    let eig = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let u = eig.U();
    let s = eig.S().column_vector();
    let n = m.nrows();
    let fu = Mat::<c64>::from_fn(n, n, |i, j| u[(i, j)] * f(s[j].re));
    Ok(&fu * u.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_derivatives() {
        let g = Gaussian::new(0.3, 0.7);
        let h = 1e-5;
        for n in 0..6 {
            for &x in &[-0.5, 0.1, 1.2] {
                let fd = (g.deriv(x + h, n) - g.deriv(x - h, n)) / (2.0 * h);
                let ex = g.deriv(x, n + 1);
                assert!((fd - ex).abs() < 1e-6 * (1.0 + ex.abs()), "n={n}");
            }
        }
    }

    #[test]
    fn step_derivatives() {
        let h = 1e-6;
        for &t in &[0.2, 0.5, 0.77] {
            let (_, d1, d2) = smooth_step(t);
            let fd1 = (smooth_step(t + h).0 - smooth_step(t - h).0) / (2.0 * h);
            let fd2 = (smooth_step(t + h).1 - smooth_step(t - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-6);
            assert!((d2 - fd2).abs() < 1e-5);
        }
        assert_eq!(smooth_step(0.0).0, 0.0);
        assert_eq!(smooth_step(1.0).0, 1.0);
    }

    #[test]
    fn dbar_matches_finite_differences() {
        let g = Gaussian::new(0.0, 0.8);
        let e = AlmostAnalytic::new(&g, 4, 1.0);
        let h = 1e-5;
        for &(x, y) in &[(0.2, 0.3), (-0.4, 0.7), (0.1, -0.8)] {
            let z = c64::new(x, y);
            let dx = (e.eval(z + h) - e.eval(z - h)) / (2.0 * h);
            let dy = (e.eval(z + c64::new(0.0, h)) - e.eval(z - c64::new(0.0, h))) / (2.0 * h);
            let fd = (dx + c64::new(0.0, 1.0) * dy) * 0.5;
            assert!((fd - e.dbar(z)).norm() < 1e-6, "{fd} vs {}", e.dbar(z));
        }
    }

    #[test]
    fn sampled_reproduces_bump() {
        let g = Gaussian::new(0.0, 0.5);
        let n = 128;
        let (a, b) = (-6.0, 6.0);
        let samples: Vec<f64> = (0..n).map(|j| g.deriv(a + (b - a) * j as f64 / n as f64, 0)).collect();
        let s = Sampled::new(a, b, &samples).unwrap();
        for &x in &[-1.0, 0.13, 0.9] {
            for k in 0..4 {
                assert!((s.deriv(x, k) - g.deriv(x, k)).abs() < 1e-8, "k={k}");
            }
        }
    }

    #[test]
    fn tridiagonal_form_reconstructs() {
        let n = 12;
        let m = Mat::<c64>::from_fn(n, n, |i, j| {
            let (a, b) = (i.min(j) as f64, i.max(j) as f64);
            let v = c64::new((a + 1.0).sin() + b * 0.1, if i < j { (a * b).cos() } else if i > j { -(a * b).cos() } else { 0.0 });
            v
        });
        let (q, d, e) = tridiagonalize(&m).unwrap();
        let t = Mat::<c64>::from_fn(n, n, |i, j| {
            if i == j {
                c64::new(d[i], 0.0)
            } else if i == j + 1 {
                c64::new(e[j], 0.0)
            } else if j == i + 1 {
                c64::new(e[i], 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let back = &q * &t * q.adjoint();
        assert!((&back - &m).norm_max() < 1e-12);
    }

    #[test]
    fn diagonal_operator() {
        let vals = [-0.4, 0.0, 0.35, 2.0];
        let m = Mat::<c64>::from_fn(4, 4, |i, j| if i == j { c64::new(vals[i], 0.0) } else { c64::new(0.0, 0.0) });
        let g = Gaussian::new(0.1, 0.5);
        let r = hs_apply(&m, &g, 8, &HsQuadrature::default()).unwrap();
        for (i, &v) in vals.iter().enumerate() {
            assert!((r.value[(i, i)].re - g.deriv(v, 0)).abs() < 1e-6);
        }
    }

    #[test]
    fn refinement_improves() {
        let vals = [-0.3, 0.2, 0.6];
        let m = Mat::<c64>::from_fn(3, 3, |i, j| if i == j { c64::new(vals[i], 0.0) } else { c64::new(0.0, 0.0) });
        let g = Gaussian::new(0.1, 0.5);
        let err = |cell: f64| {
            let q = HsQuadrature { cell, ..HsQuadrature::default() };
            let r = hs_apply(&m, &g, 8, &q).unwrap();
            (0..3).map(|i| (r.value[(i, i)].re - g.deriv(vals[i], 0)).abs()).fold(0.0, f64::max)
        };
        let (coarse, fine) = (err(0.2), err(0.1));
        assert!(fine * 4.0 <= coarse, "{coarse} -> {fine}");
    }
}
