//! Hankel functions of the second kind, `H^-_nu = H^(2)_nu`, for complex argument.
//!
//! Half-integer orders use the elementary closed forms; integer orders use the
//! ascending series for `|z| <= SERIES_RADIUS` and the Hankel asymptotic
//! expansion beyond, followed by forward recurrence in the order.

use num_complex::Complex64 as C;

use crate::error::{Error, Result};

pub const SERIES_RADIUS: f64 = 12.0;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn is_half_integer(nu: f64) -> bool {
    ((nu - 0.5).round() - (nu - 0.5)).abs() < 1e-12
}

fn is_integer(nu: f64) -> bool {
    (nu.round() - nu).abs() < 1e-12
}

fn check_order(nu: f64) -> Result<()> {
    if !(is_integer(nu) || is_half_integer(nu)) || nu < -0.5 - 1e-12 {
        return Err(Error::Domain(format!("unsupported Hankel order {nu}")));
    }
    Ok(())
}

fn check_arg(z: C, integer: bool) -> Result<()> {
    if z.norm() == 0.0 || !z.is_finite() {
        return Err(Error::Domain("Hankel argument must be finite and nonzero".into()));
    }
    if integer && z.im == 0.0 && z.re < 0.0 {
        return Err(Error::Branch(format!("integer-order Hankel on the cut at z = {z}")));
    }
    Ok(())
}

/// `H^(2)_{-1/2}` and `H^(2)_{1/2}`.
fn half_pair(z: C) -> (C, C) {
    let i = C::new(0.0, 1.0);
    let base = (2.0 / (std::f64::consts::PI * z)).sqrt() * (-i * z).exp();
    (base, i * base)
}

fn j_series(n: usize, z: C) -> C {
    let h = z * 0.5;
    let h2 = h * h;
    let mut term = h.powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
    let mut acc = term;
    for k in 1..400 {
        term *= -h2 / (k as f64 * (k + n) as f64);
        acc += term;
        if term.norm() < 1e-17 * acc.norm() {
            break;
        }
    }
    acc
}

fn digamma_int(m: usize) -> f64 {
    -EULER_GAMMA + (1..m).map(|j| 1.0 / j as f64).sum::<f64>()
}

fn y_series(n: usize, z: C) -> C {
    let pi = std::f64::consts::PI;
    let h = z * 0.5;
    let h2 = h * h;
    let mut out = j_series(n, z) * h.ln() * (2.0 / pi);
    if n > 0 {
        let mut fin = C::new(0.0, 0.0);
        for k in 0..n {
            let c = (1..=(n - k - 1)).map(|j| j as f64).product::<f64>() / (1..=k).map(|j| j as f64).product::<f64>();
            fin += h.powi(2 * k as i32 - n as i32) * c;
        }
        out -= fin / pi;
    }
    let mut term = h.powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
    let mut acc = term * (digamma_int(1) + digamma_int(n + 1));
    for k in 1..400 {
        term *= -h2 / (k as f64 * (k + n) as f64);
        let t = term * (digamma_int(k + 1) + digamma_int(n + k + 1));
        acc += t;
        if t.norm() < 1e-17 * acc.norm() && k > 2 {
            break;
        }
    }
    out - acc / pi
}

fn asymptotic_h2(n: usize, z: C) -> C {
    let pi = std::f64::consts::PI;
    let mu = 4.0 * (n * n) as f64;
    let omega = z - n as f64 * pi / 2.0 - pi / 4.0;
    let mi = C::new(0.0, -1.0);
    let mut sum = C::new(1.0, 0.0);
    let mut a = 1.0;
    let mut best = f64::INFINITY;
    let mut zk = C::new(1.0, 0.0);
    let mut mik = C::new(1.0, 0.0);
    for k in 1..60 {
        a *= (mu - ((2 * k - 1) * (2 * k - 1)) as f64) / (k as f64 * 8.0);
        zk *= z;
        mik *= mi;
        let t = mik * a / zk;
        if t.norm() > best {
            break;
        }
        best = t.norm();
        sum += t;
        if best < 1e-17 {
            break;
        }
    }
    (2.0 / (pi * z)).sqrt() * (mi * omega).exp() * sum
}

fn integer_pair(z: C) -> (C, C) {
    let i = C::new(0.0, 1.0);
    if z.norm() <= SERIES_RADIUS {
        (j_series(0, z) - i * y_series(0, z), j_series(1, z) - i * y_series(1, z))
    } else {
        (asymptotic_h2(0, z), asymptotic_h2(1, z))
    }
}

/// `H^(2)_nu(z)` for integer or half-integer `nu >= -1/2`.
pub fn hankel_minus(nu: f64, z: C) -> Result<C> {
    check_order(nu)?;
    let integer = is_integer(nu);
    check_arg(z, integer)?;
    let (mut h0, mut h1, mut order) = if integer {
        let (a, b) = integer_pair(z);
        (a, b, 0.0)
    } else {
        let (a, b) = half_pair(z);
        (a, b, -0.5)
    };
    if (nu - order).abs() < 1e-12 {
        return Ok(h0);
    }
    order += 1.0;
    while (nu - order).abs() > 1e-12 {
        let h2 = h1 * (2.0 * order) / z - h0;
        h0 = h1;
        h1 = h2;
        order += 1.0;
    }
    Ok(h1)
}

/// `H^(1)_nu(z)` through `H^(1)_nu(z) = conj(H^(2)_nu(conj z))`.
pub fn hankel_plus(nu: f64, z: C) -> Result<C> {
    Ok(hankel_minus(nu, z.conj())?.conj())
}

/// `d/dz H^(2)_nu(z) = H^(2)_{nu-1}(z) - nu/z H^(2)_nu(z)`, with `H_{-1/2}` and
/// `H_{-1} = -H_1` covering the lowest orders.
pub fn hankel_minus_deriv(nu: f64, z: C) -> Result<C> {
    let h = hankel_minus(nu, z)?;
    let lower = if is_integer(nu) && nu.abs() < 1e-12 {
        -hankel_minus(1.0, z)?
    } else if (nu + 0.5).abs() < 1e-12 {
        // H_{-3/2} = -(1/z) H_{-1/2} - H_{1/2}
        let (hm, hp) = half_pair(z);
        -hm / z - hp
    } else {
        hankel_minus(nu - 1.0, z)?
    };
    Ok(lower - h * nu / z)
}

/// Gamma function on the half-integers and positive integers.
fn gamma_grid(x: f64) -> f64 {
    if is_integer(x) && x > 0.0 {
        return (1..(x.round() as usize)).map(|k| k as f64).product();
    }
    // x = m + 1/2
    let mut g = std::f64::consts::PI.sqrt();
    let mut y = 0.5;
    if x >= 0.5 {
        while (y - x).abs() > 1e-12 {
            g *= y;
            y += 1.0;
        }
    } else {
        while (y - x).abs() > 1e-12 {
            y -= 1.0;
            g /= y;
        }
    }
    g
}

/// `J_nu(z)` by its ascending series; `nu` a half-integer of either sign.
fn j_series_half(nu: f64, z: C) -> C {
    let h = z * 0.5;
    let h2 = h * h;
    let mut acc = C::new(0.0, 0.0);
    let mut pw = h.powf(nu);
    let mut kfact = 1.0;
    for k in 0..300 {
        if k > 0 {
            pw *= -h2;
            kfact *= k as f64;
        }
        let t = pw / (kfact * gamma_grid(k as f64 + nu + 1.0));
        acc += t;
        if k > 4 && t.norm() < 1e-18 * acc.norm() {
            break;
        }
    }
    acc
}

/// Independent evaluation of `H^(2)_nu` for half-integer `nu` from the series of
/// `J_nu` and `J_{-nu}`, through `Y_nu = -J_{-nu} / sin(nu pi)`.
pub fn hankel_minus_series(nu: f64, z: C) -> Result<C> {
    if !is_half_integer(nu) {
        return Err(Error::Domain("series oracle implemented for half-integer orders".into()));
    }
    check_arg(z, false)?;
    let s = (nu * std::f64::consts::PI).sin();
    let y = -j_series_half(-nu, z) / s;
    Ok(j_series_half(nu, z) - C::new(0.0, 1.0) * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_order_closed_form() {
        for &z in &[C::new(0.3, -0.1), C::new(2.0, 0.2), C::new(7.5, -0.3)] {
            let h = hankel_minus(0.5, z).unwrap();
            let s = hankel_minus_series(0.5, z).unwrap();
            assert!((h - s).norm() < 1e-12 * h.norm().max(1.0));
        }
    }

    #[test]
    fn integer_orders_match_across_regimes() {
        for n in 0..3 {
            let z = C::new(SERIES_RADIUS - 1e-9, 0.05);
            let a = hankel_minus(n as f64, z).unwrap();
            let b = asymptotic_h2(n, z);
            assert!((a - b).norm() < 1e-10, "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn known_values() {
        // J0(1) = 0.7651976865579666, Y0(1) = 0.08825696421567696
        let h = hankel_minus(0.0, C::new(1.0, 0.0)).unwrap();
        assert!((h.re - 0.765_197_686_557_966_6).abs() < 1e-13);
        assert!((h.im + 0.088_256_964_215_676_96).abs() < 1e-13);
        // J1(2.5) = 0.4970941024642741, Y1(2.5) = 0.1459181379667858
        let h = hankel_minus(1.0, C::new(2.5, 0.0)).unwrap();
        assert!((h.re - 0.497_094_102_464_274_1).abs() < 1e-13);
        assert!((h.im + 0.145_918_137_966_785_8).abs() < 1e-13);
    }

    #[test]
    fn branch_cut_rejected() {
        assert!(matches!(hankel_minus(0.0, C::new(-1.0, 0.0)), Err(Error::Branch(_))));
        assert!(hankel_minus(0.5, C::new(-1.0, 0.0)).is_ok());
    }
}
