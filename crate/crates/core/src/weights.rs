//! Radial Carleman weight `omega` and phase `phi`.
//!
//! Both are piecewise closed forms glued at the radius `A = A0 * tau^(2/(1+2l-2s))`.
//! Inside `A` the weight grows like `(r+1)^(2l)`; outside it saturates, and the
//! phase derivative switches to the integrable tail `K_A (r+1)^(-2s)`.

use crate::error::{invalid, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlemanParams<T> {
    pub s: T,
    pub ell: T,
    pub kappa: T,
    pub a0: T,
    pub tau: T,
    a: T,
}

impl<T: Real> CarlemanParams<T> {
    pub fn new(s: T, ell: T, kappa: T, a0: T, tau: T) -> Result<Self> {
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let all_finite = [s, ell, kappa, a0, tau].iter().all(|v| v.is_finite());
        if !all_finite {
            return invalid("non-finite Carleman parameter");
        }
        if !(s - half > T::zero() && ell > s - half && ell < two * s / three && two * s / three < two / three) {
            return invalid(format!("need 0 < s-1/2 < l < 2s/3 < 2/3, got s={s}, l={ell}"));
        }
        if !(kappa > T::zero() && kappa < two * s - T::one() && kappa < T::one() - ell) {
            return invalid(format!("need 0 < kappa < min(2s-1, 1-l), got kappa={kappa}"));
        }
        if !(a0 > T::zero() && tau > T::zero()) {
            return invalid("A0 and tau must be positive");
        }
        let expo = two / (T::one() + two * ell - two * s);
        let a = a0 * tau.powf(expo);
        if !a.is_finite() {
            return invalid("A overflows");
        }
        Ok(Self { s, ell, kappa, a0, tau, a })
    }

    /// The reference parameter set `s = 0.6, l = 0.3, kappa = 0.1`.
    pub fn reference(a0: T, tau: T) -> Result<Self> {
        Self::new(T::lit(0.6), T::lit(0.3), T::lit(0.1), a0, tau)
    }

    /// Transition radius `A`.
    #[inline]
    pub fn a(&self) -> T {
        self.a
    }

    /// Same exponents with the transition radius replaced.
    pub fn with_a(&self, a: T) -> Result<Self> {
        if !(a > T::zero() && a.is_finite()) {
            return invalid("A must be positive and finite");
        }
        Ok(Self { a, ..*self })
    }

    /// `K_A = (A+1)^(2s-l) (2 - (A+1)^(-kappa))`, the tail factor of `phi'`.
    pub fn k_a(&self) -> T {
        let ap1 = self.a + T::one();
        ap1.powf(T::lit(2.0) * self.s - self.ell) * (T::lit(2.0) - ap1.powf(-self.kappa))
    }

    fn check_r(r: T) -> Result<()> {
        if !(r >= T::zero() && r.is_finite()) {
            return Err(crate::Error::Domain(format!("radius must be finite and >= 0, got {r}")));
        }
        Ok(())
    }

    pub fn omega(&self, r: T) -> Result<T> {
        Self::check_r(r)?;
        let two = T::lit(2.0);
        if r <= self.a {
            Ok((r + T::one()).powf(two * self.ell))
        } else {
            let ap1 = self.a + T::one();
            let p = T::one() - two * self.s;
            Ok(ap1.powf(two * self.ell) * (T::one() + ap1.powf(p) - (r + T::one()).powf(p)))
        }
    }

    /// Derivative of `omega`; at `r = A` the outer one-sided value is returned.
    pub fn omega_prime(&self, r: T) -> Result<T> {
        Self::check_r(r)?;
        let two = T::lit(2.0);
        if r < self.a {
            Ok(two * self.ell * (r + T::one()).powf(two * self.ell - T::one()))
        } else {
            let ap1 = self.a + T::one();
            Ok((two * self.s - T::one()) * ap1.powf(two * self.ell) * (r + T::one()).powf(-two * self.s))
        }
    }

    pub fn phi_prime(&self, r: T) -> Result<T> {
        Self::check_r(r)?;
        let rp1 = r + T::one();
        if r <= self.a {
            Ok(rp1.powf(-self.ell) * (T::lit(2.0) - rp1.powf(-self.kappa)))
        } else {
            Ok(self.k_a() * rp1.powf(-T::lit(2.0) * self.s))
        }
    }

    /// Second derivative of `phi` away from `r = A` (outer value at `A`).
    pub fn phi_double_prime(&self, r: T) -> Result<T> {
        Self::check_r(r)?;
        let rp1 = r + T::one();
        let two = T::lit(2.0);
        if r < self.a {
            Ok(rp1.powf(-self.ell - T::one()) * (-two * self.ell + (self.ell + self.kappa) * rp1.powf(-self.kappa)))
        } else {
            Ok(-two * self.s * self.k_a() * rp1.powf(-two * self.s - T::one()))
        }
    }

    /// `phi` normalised by `phi(0) = 0`, from closed-form antiderivatives.
    pub fn phi(&self, r: T) -> Result<T> {
        Self::check_r(r)?;
        let inner = |x: T| {
            let e1 = T::one() - self.ell;
            let e2 = T::one() - self.ell - self.kappa;
            let xp1 = x + T::one();
            T::lit(2.0) * (xp1.powf(e1) - T::one()) / e1 - (xp1.powf(e2) - T::one()) / e2
        };
        if r <= self.a {
            Ok(inner(r))
        } else {
            let p = T::one() - T::lit(2.0) * self.s;
            let tail = self.k_a() * ((self.a + T::one()).powf(p) - (r + T::one()).powf(p)) / (-p);
            Ok(inner(self.a) + tail)
        }
    }
}

/// Exponential weight `mu(x) = exp(-c <x> / 2)` with `<x> = sqrt(|x|^2 + 1)`.
#[inline]
pub fn mu<T: Real>(x_norm: T, c: T) -> T {
    (-(c * japanese(x_norm)) / T::lit(2.0)).exp()
}

/// `<x> = sqrt(|x|^2 + 1)`.
#[inline]
pub fn japanese<T: Real>(x_norm: T) -> T {
    (x_norm * x_norm + T::one()).sqrt()
}

/// One row of sampled weight data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSample<T> {
    pub r: T,
    pub omega: T,
    pub omega_prime: T,
    pub phi: T,
    pub phi_prime: T,
    pub phi_double_prime: T,
    pub mu: T,
}

pub fn weight_sample<T: Real>(params: &CarlemanParams<T>, radii: &[T], c: T) -> Result<Vec<WeightSample<T>>> {
    radii
        .iter()
        .map(|&r| {
            Ok(WeightSample {
                r,
                omega: params.omega(r)?,
                omega_prime: params.omega_prime(r)?,
                phi: params.phi(r)?,
                phi_prime: params.phi_prime(r)?,
                phi_double_prime: params.phi_double_prime(r)?,
                mu: mu(r, c),
            })
        })
        .collect()
}

/// Margins of the four pointwise weight inequalities on a sample grid.
///
/// The inner inequalities have explicit right-hand sides, so their relative
/// margins must be nonnegative. The outer ones carry an unspecified constant,
/// which is fitted here as the best constant on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightInequalityReport<T> {
    /// min over r < A of (2w/r - w') / (2(1-l)(r+1)^(2l-1)) - 1
    pub inner_gap_margin: T,
    /// min over r < A of (w phi'^2)' / (kappa (r+1)^(-1-kappa)) - 1
    pub inner_growth_margin: T,
    /// largest C with 2w/r - w' >= C A^(2l) / (r+1) for r > A
    pub outer_gap_constant: T,
    /// smallest C >= 0 with (w phi'^2)' >= -C A^(2s-1-2l) w' for r > A
    pub outer_defect_constant: T,
    pub points: usize,
}

impl<T: Real> WeightInequalityReport<T> {
    pub fn holds(&self) -> bool {
        self.inner_gap_margin >= T::zero()
            && self.inner_growth_margin >= T::zero()
            && self.outer_gap_constant > T::zero()
            && self.outer_gap_constant.is_finite()
            && self.outer_defect_constant.is_finite()
    }
}

/// Geometric sample grid: half the points in `(r_min, A)`, half in `(A, outer * A)`.
pub fn inequality_grid<T: Real>(a: T, points: usize, r_min: T, outer: T) -> Vec<T> {
    let half = (points / 2).max(2);
    let mut out = Vec::with_capacity(2 * half);
    let geo = |lo: T, hi: T, k: usize, n: usize| {
        let t = T::lit(k as f64 + 0.5) / T::lit(n as f64);
        (lo.ln() + t * (hi.ln() - lo.ln())).exp()
    };
    let lo = r_min.min(a * T::lit(0.5));
    for k in 0..half {
        out.push(geo(lo, a, k, half));
    }
    for k in 0..half {
        out.push(geo(a, a * outer, k, half));
    }
    out
}

pub fn check_weight_inequalities<T: Real>(params: &CarlemanParams<T>, radii: &[T]) -> Result<WeightInequalityReport<T>> {
    let a = params.a();
    let two = T::lit(2.0);
    let (ell, s, kappa) = (params.ell, params.s, params.kappa);
    let mut inner_gap = T::infinity();
    let mut inner_growth = T::infinity();
    let mut outer_gap = T::infinity();
    let mut outer_defect = T::zero();
    for &r in radii {
        if !(r > T::zero()) || r == a {
            continue;
        }
        let w = params.omega(r)?;
        let wp = params.omega_prime(r)?;
        let pp = params.phi_prime(r)?;
        let ppp = params.phi_double_prime(r)?;
        let gap = two * w / r - wp;
        let growth = wp * pp * pp + two * w * pp * ppp;
        let rp1 = r + T::one();
        if r < a {
            let rhs_gap = two * (T::one() - ell) * rp1.powf(two * ell - T::one());
            inner_gap = inner_gap.min(gap / rhs_gap - T::one());
            let rhs_growth = kappa * rp1.powf(-T::one() - kappa);
            inner_growth = inner_growth.min(growth / rhs_growth - T::one());
        } else {
            outer_gap = outer_gap.min(gap * rp1 / a.powf(two * ell));
            let scale = a.powf(two * s - T::one() - two * ell) * wp;
            outer_defect = outer_defect.max(-growth / scale);
        }
    }
    Ok(WeightInequalityReport {
        inner_gap_margin: inner_gap,
        inner_growth_margin: inner_growth,
        outer_gap_constant: outer_gap,
        outer_defect_constant: outer_defect,
        points: radii.len(),
    })
}
