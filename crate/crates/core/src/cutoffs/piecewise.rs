//! Compactly supported piecewise polynomials.

use crate::scalar::Real;

/// Piecewise polynomial on `knots[0] < ... < knots[n]`; piece `i` is stored in
/// ascending powers of `x - knots[i]`. Zero to the left of the support and the
/// constant `tail` to the right of it.
#[derive(Debug, Clone)]
pub struct PiecewisePoly<T> {
    knots: Vec<T>,
    coeffs: Vec<Vec<T>>,
    tail: T,
}

/// Coefficients of `p(t + d)` given those of `p(t)`.
fn taylor_shift<T: Real>(c: &[T], d: T) -> Vec<T> {
    let mut out = c.to_vec();
    let n = out.len();
    if d == T::zero() {
        return out;
    }
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let v = out[j + 1];
            out[j] = out[j] + d * v;
        }
    }
    out
}

fn horner_deriv<T: Real>(c: &[T], t: T, k: usize) -> T {
    if k >= c.len() {
        return T::zero();
    }
    let mut acc = T::zero();
    for j in (k..c.len()).rev() {
        let mut f = T::one();
        for q in 0..k {
            f = f * T::lit((j - q) as f64);
        }
        acc = acc * t + c[j] * f;
    }
    acc
}

impl<T: Real> PiecewisePoly<T> {
    /// Normalised indicator `1_[0,b] / b`.
    pub fn unit_box(b: T) -> Self {
        Self { knots: vec![T::zero(), b], coeffs: vec![vec![T::one() / b]], tail: T::zero() }
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn pieces(&self) -> usize {
        self.coeffs.len()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().map(|c| c.len().saturating_sub(1)).max().unwrap_or(0)
    }

    pub fn support(&self) -> (T, T) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    pub fn tail(&self) -> T {
        self.tail
    }

    pub fn piece(&self, i: usize) -> (T, T, &[T]) {
        (self.knots[i], self.knots[i + 1], &self.coeffs[i])
    }

    fn locate(&self, x: T) -> Option<usize> {
        let (lo, hi) = self.support();
        if x < lo || x >= hi {
            return None;
        }
        let i = self.knots.partition_point(|&k| k <= x);
        Some(i.saturating_sub(1).min(self.coeffs.len() - 1))
    }

    /// k-th derivative at `x` (one-sided from the right at knots).
    pub fn eval_deriv(&self, x: T, k: usize) -> T {
        match self.locate(x) {
            Some(i) => horner_deriv(&self.coeffs[i], x - self.knots[i], k),
            None => {
                if x >= self.support().1 && k == 0 {
                    self.tail
                } else {
                    T::zero()
                }
            }
        }
    }

    pub fn eval(&self, x: T) -> T {
        self.eval_deriv(x, 0)
    }

    pub fn translate(&mut self, by: T) {
        for k in &mut self.knots {
            *k = *k + by;
        }
    }

    /// Antiderivative vanishing at the left end of the support.
    pub fn antiderivative(&self) -> Self {
        let mut acc = T::zero();
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (i, c) in self.coeffs.iter().enumerate() {
            let mut ci = Vec::with_capacity(c.len() + 1);
            ci.push(acc);
            for (j, &v) in c.iter().enumerate() {
                ci.push(v / T::lit((j + 1) as f64));
            }
            let len = self.knots[i + 1] - self.knots[i];
            acc = horner_deriv(&ci, len, 0);
            coeffs.push(ci);
        }
        Self { knots: self.knots.clone(), coeffs, tail: acc }
    }

    /// Local coefficients of this function on an interval starting at `p`
    /// that lies inside one piece (or entirely outside the support).
    fn local_at(&self, p: T, mid: T, degree: usize) -> Vec<T> {
        let mut out = vec![T::zero(); degree + 1];
        match self.locate(mid) {
            Some(i) => {
                let s = taylor_shift(&self.coeffs[i], p - self.knots[i]);
                for (o, v) in out.iter_mut().zip(s) {
                    *o = v;
                }
            }
            None => {
                if mid >= self.support().1 {
                    out[0] = self.tail;
                }
            }
        }
        out
    }

    /// Convolution with the normalised indicator of `[0, b]`.
    pub fn convolve_box(&self, b: T) -> Self {
        assert!(self.tail == T::zero(), "convolution needs a compactly supported function");
        let f = self.antiderivative();
        let (lo, hi) = self.support();
        let scale = (hi - lo + b).abs().max(T::one());
        let tol = T::lit(1e-13) * scale;
        let mut ks: Vec<T> = f.knots.iter().copied().chain(f.knots.iter().map(|&k| k + b)).collect();
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut knots: Vec<T> = Vec::with_capacity(ks.len());
        for k in ks {
            match knots.last() {
                Some(&last) if k - last <= tol => {}
                _ => knots.push(k),
            }
        }
        let degree = f.degree();
        let mut coeffs = Vec::with_capacity(knots.len() - 1);
        for w in knots.windows(2) {
            let (p, q) = (w[0], w[1]);
            let mid = (p + q) / T::lit(2.0);
            let a = f.local_at(p, mid, degree);
            let c = f.local_at(p - b, mid - b, degree);
            coeffs.push(a.iter().zip(&c).map(|(&x, &y)| (x - y) / b).collect());
        }
        Self { knots, coeffs, tail: T::zero() }
    }

    /// Maximum of |f^(k)| sampled at `per_piece` points of every piece, endpoints included.
    pub fn max_abs_deriv(&self, k: usize, per_piece: usize) -> T {
        let mut best = T::zero();
        let n = per_piece.max(2);
        for (i, c) in self.coeffs.iter().enumerate() {
            let len = self.knots[i + 1] - self.knots[i];
            for j in 0..n {
                let t = len * T::lit(j as f64 / (n - 1) as f64);
                best = best.max(horner_deriv(c, t, k).abs());
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_matches_direct_evaluation() {
        let c = [1.0f64, -2.0, 0.5, 3.0];
        let s = taylor_shift(&c, 0.7);
        for &t in &[0.0, 0.3, -1.1] {
            let direct = horner_deriv(&c, t + 0.7, 0);
            let shifted = horner_deriv(&s, t, 0);
            assert!((direct - shifted).abs() < 1e-13);
        }
    }

    #[test]
    fn two_boxes_make_a_hat() {
        let f = PiecewisePoly::<f64>::unit_box(1.0).convolve_box(1.0);
        assert!((f.eval(1.0) - 1.0).abs() < 1e-14);
        assert!((f.eval(0.5) - 0.5).abs() < 1e-14);
        assert!((f.eval(1.5) - 0.5).abs() < 1e-14);
        assert_eq!(f.eval(2.5), 0.0);
        assert!((f.antiderivative().tail() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unequal_boxes_trapezoid() {
        let f = PiecewisePoly::<f64>::unit_box(0.5).convolve_box(0.2);
        assert!((f.eval(0.3) - 2.0).abs() < 1e-13);
        assert!((f.eval(0.1) - 1.0).abs() < 1e-13);
        assert!((f.eval(0.6) - 1.0).abs() < 1e-13);
    }
}
