//! Frequency cutoffs with factorial derivative control.
//!
//! `rho_m` is a normalised convolution of indicator functions supported in
//! `[1, 2]`; `psi_m(l) = int_{-inf}^{|l|/delta} rho_m` switches on between
//! `delta` and `2 delta`; `Psi_m(l, l') = (psi_m(l) - psi_m(l')) / (l^2 - l'^2)`.

pub mod hs;
mod piecewise;

pub use piecewise::PiecewisePoly;

use crate::error::{invalid, Result};
use crate::quad::gauss_legendre;
use crate::scalar::Real;

/// Extra indicators beyond `m`, so that `rho_m` is `C^m`.
const EXTRA_FACTORS: usize = 2;

#[derive(Debug, Clone)]
pub struct CutoffFamily<T> {
    m: usize,
    delta: T,
    widths: Vec<T>,
    rho: PiecewisePoly<T>,
    rho_int: PiecewisePoly<T>,
}

fn factorial<T: Real>(k: usize) -> T {
    (1..=k).fold(T::one(), |acc, j| acc * T::lit(j as f64))
}

fn binomial<T: Real>(n: usize, k: usize) -> T {
    factorial::<T>(n) / (factorial::<T>(k) * factorial::<T>(n - k))
}

impl<T: Real> CutoffFamily<T> {
    /// Builds `rho_m` from `m + 2` indicators with widths `1/(j(j+1))`,
    /// centred inside `[1, 2]`.
    pub fn new(m: usize, delta: T) -> Result<Self> {
        if m == 0 {
            return invalid("cutoff order m must be >= 1");
        }
        if !(delta > T::zero() && delta.is_finite()) {
            return invalid("delta must be positive");
        }
        let n = m + EXTRA_FACTORS;
        let widths: Vec<T> = (1..=n).map(|j| T::one() / T::lit((j * (j + 1)) as f64)).collect();
        let mut rho = PiecewisePoly::unit_box(widths[0]);
        for &w in &widths[1..] {
            rho = rho.convolve_box(w);
        }
        let total: T = widths.iter().fold(T::zero(), |a, &b| a + b);
        rho.translate(T::one() + (T::one() - total) / T::lit(2.0));
        let rho_int = rho.antiderivative();
        Ok(Self { m, delta, widths, rho, rho_int })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn widths(&self) -> &[T] {
        &self.widths
    }

    pub fn rho_poly(&self) -> &PiecewisePoly<T> {
        &self.rho
    }

    pub fn rho(&self, sigma: T) -> T {
        self.rho.eval(sigma)
    }

    pub fn rho_deriv(&self, sigma: T, k: usize) -> T {
        self.rho.eval_deriv(sigma, k)
    }

    /// `int rho_m` over the real line.
    pub fn rho_integral(&self) -> T {
        self.rho_int.tail()
    }

    /// Even extension of `psi_m`.
    pub fn psi(&self, lambda: T) -> T {
        self.rho_int.eval(lambda.abs() / self.delta)
    }

    pub fn psi_deriv(&self, lambda: T, k: usize) -> T {
        if k == 0 {
            return self.psi(lambda);
        }
        let a = lambda.abs();
        let v = self.rho.eval_deriv(a / self.delta, k - 1) / self.delta.powi(k as i32);
        if lambda < T::zero() && k % 2 == 1 {
            -v
        } else {
            v
        }
    }

    /// `delta^{-1-k} int_0^1 s^k rho^(k)((1-s) b/delta + s a/delta) ds`, which is the
    /// k-th derivative in `a` of the divided difference `(psi(a) - psi(b)) / (a - b)`.
    pub fn psi_tilde_deriv(&self, a: T, b: T, k: usize) -> T {
        let d = self.delta;
        let (x0, x1) = (b / d, a / d);
        let span = x1 - x0;
        let scale = T::one() / d.powi(k as i32 + 1);
        if span.abs() <= T::lit(1e-14) * (T::one() + x0.abs()) {
            return scale * self.rho.eval_deriv(x1, k) / T::lit((k + 1) as f64);
        }
        let (lo, hi) = if span > T::zero() { (x0, x1) } else { (x1, x0) };
        let (slo, shi) = self.rho.support();
        let (lo_c, hi_c) = (lo.max(slo), hi.min(shi));
        if lo_c >= hi_c {
            return T::zero();
        }
        let knots = self.rho.knots();
        let i0 = knots.partition_point(|&k| k <= lo_c);
        let i1 = knots.partition_point(|&k| k < hi_c);
        let mut breaks = vec![lo_c];
        let crossings = i1.saturating_sub(i0);
        let exact = crossings <= 64;
        if exact {
            breaks.extend_from_slice(&knots[i0..i1]);
        } else {
            let min_w = *self.widths.last().unwrap() / T::lit(2.0);
            let panels = ((hi_c - lo_c) / min_w).ceil().to_f64_lossy().max(1.0) as usize;
            for p in 1..panels {
                breaks.push(lo_c + (hi_c - lo_c) * T::lit(p as f64 / panels as f64));
            }
        }
        breaks.push(hi_c);
        let order = if exact { (self.rho.degree() + k) / 2 + 2 } else { 8 };
        let (gx, gw) = gauss_legendre(order);
        let mut acc = T::zero();
        for w in breaks.windows(2) {
            let (p, q) = (w[0], w[1]);
            if q <= p {
                continue;
            }
            let half = (q - p) / T::lit(2.0);
            let mid = (p + q) / T::lit(2.0);
            for (xi, wi) in gx.iter().zip(&gw) {
                let x = mid + half * T::lit(*xi);
                let s = (x - x0) / span;
                acc = acc + T::lit(*wi) * half * s.powi(k as i32) * self.rho.eval_deriv(x, k);
            }
        }
        // dx = span ds
        scale * acc / span.abs()
    }

    pub fn psi_tilde(&self, a: T, b: T) -> T {
        self.psi_tilde_deriv(a.abs(), b.abs(), 0)
    }

    /// `Psi_m(l, l')`, even in both arguments.
    pub fn big_psi(&self, lambda: T, lambda_p: T) -> T {
        self.big_psi_deriv(lambda.abs(), lambda_p.abs(), 0)
    }

    /// k-th derivative of `Psi_m` in the first argument, for `a, b >= 0`.
    pub fn big_psi_deriv(&self, a: T, b: T, k: usize) -> T {
        let sum = a + b;
        if sum <= T::zero() {
            return T::zero();
        }
        let mut acc = T::zero();
        for j in 0..=k {
            let sign = if j % 2 == 0 { T::one() } else { -T::one() };
            let inv = sign * factorial::<T>(j) / sum.powi(j as i32 + 1);
            acc = acc + binomial::<T>(k, j) * inv * self.psi_tilde_deriv(a, b, k - j);
        }
        acc
    }

    /// Difference-quotient form of `Psi_m`, valid off the diagonal.
    pub fn big_psi_quotient(&self, lambda: T, lambda_p: T) -> T {
        (self.psi(lambda) - self.psi(lambda_p)) / (lambda * lambda - lambda_p * lambda_p)
    }

    /// `max |rho^(k)|` for `k = 0..=m`.
    pub fn rho_deriv_maxima(&self) -> Vec<T> {
        (0..=self.m).map(|k| self.rho.max_abs_deriv(k, 12)).collect()
    }

    /// Smallest `C` with `|rho^(k)| <= C^{k+1} k!` for all `k <= m`.
    pub fn fitted_rho_constant(&self) -> T {
        self.rho_deriv_maxima()
            .iter()
            .enumerate()
            .map(|(k, &mx)| (mx / factorial::<T>(k)).powf(T::one() / T::lit((k + 1) as f64)))
            .fold(T::zero(), T::max)
    }

    /// Smallest `C` with `|psi^(k)| <= (C/delta)^k k!` for `1 <= k <= m`.
    pub fn fitted_psi_constant(&self) -> T {
        let maxima = self.rho_deriv_maxima();
        (1..=self.m)
            .map(|k| {
                let mx = maxima[k - 1] / self.delta.powi(k as i32);
                (mx * self.delta.powi(k as i32) / factorial::<T>(k)).powf(T::one() / T::lit(k as f64))
            })
            .fold(T::zero(), T::max)
    }

    /// Smallest `C` with `|d^k Psi(l, l')| <= C^{k+1} k! / ((l+1)(l'+1))` on the
    /// given sample grid, for `k <= m`.
    pub fn fitted_big_psi_constant(&self, samples: &[T]) -> T {
        let mut best = T::zero();
        for &a in samples {
            for &b in samples {
                for k in 0..=self.m {
                    let v = self.big_psi_deriv(a, b, k).abs() * (a + T::one()) * (b + T::one());
                    let c = (v / factorial::<T>(k)).powf(T::one() / T::lit((k + 1) as f64));
                    best = best.max(c);
                }
            }
        }
        best
    }
}

/// Time-dependent cutoff order `m(t) = floor(t / (C e))`, at least 1.
pub fn cutoff_order_for_time(t: f64, c: f64) -> usize {
    ((t / (c * std::f64::consts::E)).floor() as usize).max(1)
}
