//! Outgoing free resolvent kernel of `-Delta - lambda^2` in `d = 2, 3`, its
//! continuation into a strip above the real axis, and weighted kernel matrices.
//!
//! Convention: `K(x, y; lambda) = -i/4 (2 pi)^{-nu} lambda^nu rho^{-nu} H^-_nu(lambda rho)`
//! with `nu = (d - 2)/2` and `rho = |x - y|`, so that `K = e^{-i lambda rho} / (4 pi rho)`
//! in `d = 3` and `-i/4 H^-_0(lambda rho)` in `d = 2`. Physical values sit at
//! `Im lambda < 0`.

mod hankel;

pub use hankel::{hankel_minus, hankel_minus_deriv, hankel_minus_series, hankel_plus, SERIES_RADIUS};

use faer::Mat;
use num_complex::Complex64 as C;

use crate::error::{Error, Result};
use crate::linalg::max_singular_value;
use crate::quad::gauss_legendre;

const I: C = C::new(0.0, 1.0);

/// Spectral parameter checked against a strip `|Im lambda| <= gamma0 < c/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripPoint {
    pub lambda: C,
    pub gamma0: f64,
    /// Rate of the exponential weight `e^{-c<x>/2}`.
    pub c: f64,
}

impl StripPoint {
    pub fn new(lambda: C, gamma0: f64, c: f64) -> Result<Self> {
        if !(c > 0.0) || !(gamma0 >= 0.0) || gamma0 >= c / 2.0 {
            return Err(Error::Domain(format!("strip width {gamma0} must lie in [0, c/2) with c = {c}")));
        }
        if lambda.im.abs() > gamma0 + 1e-15 || !lambda.is_finite() {
            return Err(Error::Domain(format!("strip violation: |Im {lambda}| > {gamma0}")));
        }
        Ok(Self { lambda, gamma0, c })
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 2 || d == 3 {
        Ok(())
    } else {
        Err(Error::Domain(format!("free kernel implemented for d = 2, 3, got {d}")))
    }
}

fn prefactor(d: usize) -> (f64, C) {
    let nu = (d as f64 - 2.0) / 2.0;
    (nu, -I * 0.25 * (2.0 * std::f64::consts::PI).powf(-nu))
}

/// `lambda^nu H^-_{nu+k}(lambda rho)` with `k` in {0, 1}, continued across the
/// negative real axis through `H^-_nu(z e^{-i pi}) = -e^{i nu pi} H^+_nu(z)`.
fn scaled_hankel(d: usize, lambda: C, rho: f64, k: usize) -> Result<C> {
    let nu = (d as f64 - 2.0) / 2.0;
    let order = nu + k as f64;
    if lambda.re < 0.0 {
        let m = -lambda;
        return Ok(-m.powf(order) * hankel_plus(order, m * rho)?);
    }
    if d == 2 && lambda.re == 0.0 && lambda.im >= 0.0 {
        return Err(Error::Branch(format!("lambda = {lambda} lies on the excluded ray for even d")));
    }
    Ok(lambda.powf(order) * hankel_minus(order, lambda * rho)?)
}

/// `K` as a function of `rho > 0`.
pub fn free_kernel_radial(rho: f64, lambda: C, d: usize) -> Result<C> {
    check_dim(d)?;
    if !(rho > 0.0) {
        return Err(Error::Domain("coincidence point: rho = 0".into()));
    }
    let (nu, pre) = prefactor(d);
    if lambda.norm() == 0.0 {
        return if d == 3 {
            Ok(C::new(1.0 / (4.0 * std::f64::consts::PI * rho), 0.0))
        } else {
            Err(Error::Domain("the d = 2 kernel diverges at lambda = 0".into()))
        };
    }
    Ok(pre * rho.powf(-nu) * scaled_hankel(d, lambda, rho, 0)?)
}

/// `d K / d rho`, from `d/drho [rho^{-nu} H_nu(lambda rho)] = -lambda rho^{-nu} H_{nu+1}(lambda rho)`.
pub fn free_kernel_radial_deriv(rho: f64, lambda: C, d: usize) -> Result<C> {
    check_dim(d)?;
    if !(rho > 0.0) {
        return Err(Error::Domain("coincidence point: rho = 0".into()));
    }
    let (nu, pre) = prefactor(d);
    if lambda.norm() == 0.0 {
        return if d == 3 {
            Ok(C::new(-1.0 / (4.0 * std::f64::consts::PI * rho * rho), 0.0))
        } else {
            Err(Error::Domain("the d = 2 kernel diverges at lambda = 0".into()))
        };
    }
    Ok(-pre * rho.powf(-nu) * scaled_hankel(d, lambda, rho, 1)?)
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// `K(x, y; lambda)` or, with `deriv = Some(j)`, `d/dx_j K(x, y; lambda)`.
pub fn free_kernel(x: &[f64], y: &[f64], lambda: C, d: usize, deriv: Option<usize>) -> Result<C> {
    if x.len() != d || y.len() != d {
        return Err(Error::Domain("point dimension does not match d".into()));
    }
    let rho = distance(x, y);
    if rho == 0.0 {
        return Err(Error::Domain("coincidence point: x = y".into()));
    }
    match deriv {
        None => free_kernel_radial(rho, lambda, d),
        Some(j) if j < d => Ok(free_kernel_radial_deriv(rho, lambda, d)? * ((x[j] - y[j]) / rho)),
        Some(j) => Err(Error::Domain(format!("derivative axis {j} out of range"))),
    }
}

/// `e^{-i lambda rho} / (4 pi rho)`.
pub fn free_kernel_3d_closed(rho: f64, lambda: C) -> C {
    (-I * lambda * rho).exp() / (4.0 * std::f64::consts::PI * rho)
}

/// `int_{S^{d-1}} e^{i lambda <v, w>} dw` by the trapezoid rule on the circle
/// (`d = 2`, `order` nodes) or a Gauss-Legendre x trapezoid product (`d = 3`).
fn sphere_plane_wave(v: &[f64], lambda: C, d: usize, order: usize) -> C {
    let two_pi = 2.0 * std::f64::consts::PI;
    if d == 2 {
        let n = order.max(4);
        let mut acc = C::new(0.0, 0.0);
        for k in 0..n {
            let t = two_pi * k as f64 / n as f64;
            acc += (I * lambda * (v[0] * t.cos() + v[1] * t.sin())).exp();
        }
        return acc * (two_pi / n as f64);
    }
    let (gx, gw) = gauss_legendre(order.max(2));
    let nphi = 2 * order.max(2);
    let mut acc = C::new(0.0, 0.0);
    for (ct, wt) in gx.iter().zip(&gw) {
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        for k in 0..nphi {
            let p = two_pi * k as f64 / nphi as f64;
            let dotp = v[0] * st * p.cos() + v[1] * st * p.sin() + v[2] * ct;
            acc += (I * lambda * dotp).exp() * (*wt * two_pi / nphi as f64);
        }
    }
    acc
}

/// Right-hand side of the jump identity,
/// `K(lambda) - K(-lambda) = -i/2 (2 pi)^{1-d} lambda^{d-2} int_{S^{d-1}} e^{i lambda <x-y, w>} dw`.
pub fn jump_rhs(x: &[f64], y: &[f64], lambda: C, d: usize, order: usize) -> Result<C> {
    check_dim(d)?;
    let v: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let two_pi = 2.0 * std::f64::consts::PI;
    Ok(-I * 0.5 * two_pi.powi(1 - d as i32) * lambda.powi(d as i32 - 2) * sphere_plane_wave(&v, lambda, d, order))
}

/// Relative residual of the jump identity. The sphere integral is evaluated at
/// `order` and `2 order`; a change above `1e-10` relative is reported as an
/// under-resolved quadrature.
pub fn jump_identity_residual(x: &[f64], y: &[f64], lambda: C, d: usize, order: usize) -> Result<f64> {
    let lhs = free_kernel(x, y, lambda, d, None)? - free_kernel(x, y, -lambda, d, None)?;
    let coarse = jump_rhs(x, y, lambda, d, order)?;
    let fine = jump_rhs(x, y, lambda, d, 2 * order)?;
    let scale = fine.norm().max(free_kernel(x, y, lambda, d, None)?.norm());
    if (fine - coarse).norm() > 1e-10 * scale {
        return Err(Error::Numerical(format!(
            "sphere quadrature under-resolved at order {order}: change {:.3e}",
            (fine - coarse).norm() / scale
        )));
    }
    Ok((lhs - fine).norm() / fine.norm().max(f64::MIN_POSITIVE))
}

/// Largest `|K| / (rho^{2-d} + |lambda|^{(d-3)/2} rho^{-(d-1)/2} e^{Im lambda rho})`
/// over the given distances.
pub fn kernel_envelope_constant(d: usize, lambda: C, rhos: &[f64]) -> Result<f64> {
    let mut best: f64 = 0.0;
    for &rho in rhos {
        let k = free_kernel_radial(rho, lambda, d)?.norm();
        let env = rho.powi(2 - d as i32)
            + lambda.norm().powf((d as f64 - 3.0) / 2.0) * rho.powf(-(d as f64 - 1.0) / 2.0) * (lambda.im * rho).exp();
        best = best.max(k / env);
    }
    Ok(best)
}

/// Dense weighted kernel samples `mu(x) d^alpha K(x, y) mu(y) w`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub values: Mat<C>,
    pub lambda: C,
    pub d: usize,
}

impl KernelMatrix {
    pub fn norm(&self) -> Result<f64> {
        max_singular_value(&self.values)
    }
}

fn mu(r: f64, c: f64) -> f64 {
    crate::weights::mu(r, c)
}

/// Weighted kernel on a point cloud with quadrature weight `cell` per point. The
/// singular diagonal is set to zero.
pub fn kernel_matrix(points: &[Vec<f64>], cell: f64, at: &StripPoint, d: usize, deriv: Option<usize>) -> Result<KernelMatrix> {
    let n = points.len();
    let w: Vec<f64> = points.iter().map(|p| mu(p.iter().map(|v| v * v).sum::<f64>().sqrt(), at.c)).collect();
    let mut values = Mat::<C>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let k = free_kernel(&points[i], &points[j], at.lambda, d, deriv)?;
            values[(i, j)] = k * (w[i] * w[j] * cell);
        }
    }
    Ok(KernelMatrix { values, lambda: at.lambda, d })
}

/// Kernel of the free resolvent restricted to spherically symmetric functions in
/// `d = 3`, written for `u = r f` on the half-line:
/// `g(r, r') = (e^{-i lambda |r - r'|} - e^{-i lambda (r + r')}) / (2 i lambda)`.
pub fn radial3_kernel(r: f64, rp: f64, lambda: C) -> C {
    if lambda.norm() < 1e-12 {
        return C::new(r.min(rp), 0.0);
    }
    ((-I * lambda * (r - rp).abs()).exp() - (-I * lambda * (r + rp)).exp()) / (2.0 * I * lambda)
}

/// `d/dr g(r, r')`; the unit jump on the diagonal is split evenly.
pub fn radial3_kernel_deriv(r: f64, rp: f64, lambda: C) -> C {
    let lo = (lambda * r).cos() * (-I * lambda * rp).exp();
    let hi = -I * (lambda * rp).sin() * (-I * lambda * r).exp();
    if r < rp {
        lo
    } else if r > rp {
        hi
    } else {
        (lo + hi) * 0.5
    }
}

/// `mu(r_i) d^l g(r_i, r_j) mu(r_j) h` on the radial nodes.
pub fn radial3_kernel_matrix(radii: &[f64], h: f64, at: &StripPoint, deriv: bool) -> KernelMatrix {
    let n = radii.len();
    let w: Vec<f64> = radii.iter().map(|&r| mu(r, at.c)).collect();
    let values = Mat::<C>::from_fn(n, n, |i, j| {
        let g = if deriv {
            radial3_kernel_deriv(radii[i], radii[j], at.lambda)
        } else {
            radial3_kernel(radii[i], radii[j], at.lambda)
        };
        g * (w[i] * w[j] * h)
    });
    KernelMatrix { values, lambda: at.lambda, d: 3 }
}

/// `theta = 2 asin(h lambda / 2)`, the lattice wave number of the three-point
/// Laplacian: `(2 - 2 cos theta) / h^2 = lambda^2`.
pub fn lattice_theta(h: f64, lambda: C) -> C {
    (lambda * (h / 2.0)).asin() * 2.0
}

/// Inverse of `(-D^2_h - lambda^2)` on the line, entry at index offset `k`:
/// `h^2 e^{-i theta |k|} / (2 i sin theta)`, as a matrix (no `1/h` cell factor).
pub fn lattice_line_green(h: f64, lambda: C, offset: i64) -> C {
    let theta = lattice_theta(h, lambda);
    (-I * theta * offset.unsigned_abs() as f64).exp() * (h * h) / (2.0 * I * theta.sin())
}

/// Same on the offset half-line `r_j = (j - 1/2) h`, `j >= 1`, with the odd
/// ghost `u_0 = -u_1`.
pub fn lattice_halfline_green(h: f64, lambda: C, j: usize, k: usize) -> C {
    lattice_line_green(h, lambda, j as i64 - k as i64) - lattice_line_green(h, lambda, (j + k) as i64 - 1)
}

/// `|| mu (R_h - R) mu ||` in the spherically symmetric `d = 3` sector, where
/// `R_h` is the sparse outgoing lattice resolvent on `n` nodes of `(0, r_max]`
/// and `R` the continuum kernel sampled on the same nodes.
pub fn lattice_discrepancy(n: usize, r_max: f64, lambda: C, c: f64) -> Result<f64> {
    use crate::lattice::{assemble_radial_sector, Profile, RadialBoundary, RadialGrid, Spectral};
    let grid = RadialGrid::origin(n, r_max)?;
    let op = assemble_radial_sector(0, 3, &Profile::Zero, &grid, RadialBoundary::Outgoing)?;
    let at = StripPoint::new(lambda, lambda.im.abs(), c.max(2.0 * lambda.im.abs() + 1e-12))?;
    let radii = grid.radii();
    let w: Vec<f64> = radii.iter().map(|&r| mu(r, at.c)).collect();
    let lu = op.factor(Spectral::Continued(lambda))?;
    let rhs = Mat::<C>::from_fn(n, n, |i, j| if i == j { C::new(w[i], 0.0) } else { C::new(0.0, 0.0) });
    let lat = lu.solve_many(&rhs);
    let cont = radial3_kernel_matrix(&radii, grid.h, &at, false).values;
    let diff = Mat::<C>::from_fn(n, n, |i, j| lat[(i, j)] * w[i] - cont[(i, j)]);
    max_singular_value(&diff)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_dimensional_kernel_is_closed_form() {
        for &(rho, l) in &[(0.3, C::new(2.0, -0.1)), (5.0, C::new(-3.0, 0.2)), (1.0, C::new(0.5, 0.0))] {
            let k = free_kernel_radial(rho, l, 3).unwrap();
            let e = free_kernel_3d_closed(rho, l);
            assert!((k - e).norm() < 1e-12 * e.norm());
        }
        let k0 = free_kernel_radial(2.0, C::new(0.0, 0.0), 3).unwrap();
        assert!((k0.re - 1.0 / (8.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn helmholtz_equation_away_from_pole() {
        // (-Delta - lambda^2) K(., y) = 0 for x != y, by a five-point radial check
        for d in [2usize, 3] {
            let l = C::new(1.7, -0.05);
            let rho = 1.3;
            let h = 1e-3;
            let f = |r: f64| free_kernel_radial(r, l, d).unwrap();
            let lap = (f(rho + h) - 2.0 * f(rho) + f(rho - h)) / (h * h) + (f(rho + h) - f(rho - h)) / (2.0 * h) * ((d - 1) as f64 / rho);
            let res = (-lap - l * l * f(rho)).norm() / (l * l * f(rho)).norm();
            assert!(res < 1e-5, "d={d}: {res}");
        }
    }

    #[test]
    fn two_dimensional_kernel_convention() {
        let k = free_kernel_radial(1.0, C::new(1.0, 0.0), 2).unwrap();
        let h = hankel_minus(0.0, C::new(1.0, 0.0)).unwrap();
        assert!((k - (-I * 0.25 * h)).norm() < 1e-15);
    }

    #[test]
    fn radial_derivative_matches_difference() {
        for d in [2usize, 3] {
            for &l in &[C::new(2.0, -0.1), C::new(-1.5, 0.1)] {
                let r = 0.8;
                let e = 1e-5;
                let fd = (free_kernel_radial(r + e, l, d).unwrap() - free_kernel_radial(r - e, l, d).unwrap()) / (2.0 * e);
                let an = free_kernel_radial_deriv(r, l, d).unwrap();
                assert!((fd - an).norm() < 1e-8 * an.norm().max(1.0), "d={d} l={l}");
            }
        }
    }

    #[test]
    fn jump_identity_both_dimensions() {
        let x = [0.3, -0.2, 0.5];
        let y = [-0.1, 0.4, 0.2];
        for d in [2usize, 3] {
            let r = jump_identity_residual(&x[..d], &y[..d], C::new(2.0, 0.0), d, 48).unwrap();
            assert!(r < 1e-8, "d={d}: {r}");
        }
    }

    #[test]
    fn jump_flips_under_sign_change() {
        let (x, y) = ([0.0, 0.0, 0.0], [0.6, 0.0, 0.8]);
        let a = jump_rhs(&x, &y, C::new(1.5, 0.0), 3, 32).unwrap();
        let b = jump_rhs(&x, &y, C::new(-1.5, 0.0), 3, 32).unwrap();
        assert!((a + b).norm() < 1e-12);
    }

    #[test]
    fn coarse_sphere_rule_is_rejected() {
        let x = [0.0, 0.0, 0.0];
        let y = [3.0, 1.0, 2.0];
        assert!(matches!(jump_identity_residual(&x, &y, C::new(10.0, 0.0), 3, 4), Err(Error::Numerical(_))));
    }

    #[test]
    fn coincidence_and_strip_errors() {
        assert!(free_kernel(&[1.0, 1.0], &[1.0, 1.0], C::new(1.0, 0.0), 2, None).is_err());
        assert!(StripPoint::new(C::new(1.0, 0.3), 0.2, 1.0).is_err());
        assert!(StripPoint::new(C::new(1.0, 0.1), 0.6, 1.0).is_err());
        assert!(StripPoint::new(C::new(1.0, 0.1), 0.2, 1.0).is_ok());
    }

    #[test]
    fn radial_kernel_derivative_matches_difference() {
        let l = C::new(2.0, -0.1);
        let e = 1e-6;
        for &(r, rp) in &[(0.5, 1.2), (2.0, 0.7)] {
            let fd = (radial3_kernel(r + e, rp, l) - radial3_kernel(r - e, rp, l)) / (2.0 * e);
            assert!((fd - radial3_kernel_deriv(r, rp, l)).norm() < 1e-8);
        }
    }

    #[test]
    fn lattice_resolvent_converges_at_second_order() {
        let l = C::new(2.0, 0.0);
        let e: Vec<f64> = [100, 200, 400].iter().map(|&n| lattice_discrepancy(n, 10.0, l, 1.0).unwrap()).collect();
        for w in e.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.0..=5.0).contains(&ratio), "{e:?}");
        }
    }

    #[test]
    fn lattice_line_green_inverts_stencil() {
        let h = 0.1;
        let l = C::new(3.0, -0.2);
        for k in -3i64..=3 {
            let g = |o: i64| lattice_line_green(h, l, o);
            let applied = (-g(k - 1) + g(k) * 2.0 - g(k + 1)) / (h * h) - l * l * g(k);
            let target = if k == 0 { 1.0 } else { 0.0 };
            assert!((applied - target).norm() < 1e-10, "k={k}: {applied}");
        }
    }
}
