//! Wave propagation by exact spectral synthesis, local energy decay and the
//! time-domain identities behind it.
//!
//! All vectors live on the unknowns of a self-adjoint [`DiscreteOperator`];
//! `L^2` norms carry the cell volume.

mod decay;
mod hardy;
mod identities;

pub use decay::{
    certify_low_frequency, cutoff_comparison, decay_curve, decay_experiment, huygens_check, integrated_decay_check,
    CutoffComparison, CutoffSchedule, DecayCurve, DecayFit, DecayMode, DecaySettings, IntegratedDecay,
    LowFrequencyCertificate, Probe,
};
pub use hardy::{hardy_check, HardyMode, HardyReport};
pub use identities::{
    duhamel_residual, energy_identity_check, equivalence_ratios, fourier_identity_check, norm_equivalence_check,
    short_time_bound_check, truncated_inverse_weight, DuhamelReport, EnergyIdentity, FourierReport, NormEquivalence, ShortTimeBound, TimeSwitch,
};

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::lattice::{DiscreteOperator, Gradient};
use crate::linalg::{cz, norm2, CVec, Csr};

/// Default ceiling on the dense eigendecomposition.
pub const DENSE_LIMIT: usize = 4000;

/// Frequencies below this are treated as the kernel of `P`.
const ZERO_MODE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Ascending, clamped to `>= 0`.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns (Euclidean product on the unknowns).
    pub vectors: Mat<c64>,
    pub matrix: Csr,
    pub gradient: Option<Gradient>,
    pub radius: Vec<f64>,
    pub cell: f64,
    pub h: f64,
    pub d_eff: usize,
    /// `max_j ||M v_j - L_j v_j|| / max(1, ||M||)`.
    pub residual: f64,
    pub gram_defect: f64,
}

pub fn decompose(op: &DiscreteOperator) -> Result<SpectralDecomposition> {
    decompose_with_limit(op, DENSE_LIMIT)
}

pub fn decompose_with_limit(op: &DiscreteOperator, limit: usize) -> Result<SpectralDecomposition> {
    let n = op.dim();
    if n > limit {
        return Err(Error::SizeExceeded(format!("{n} unknowns exceed the dense limit {limit}")));
    }
    if !op.self_adjoint || !op.outgoing.is_empty() {
        return Err(Error::Domain("spectral synthesis needs a self-adjoint (Dirichlet) realization".into()));
    }
    let dense = op.matrix.to_dense();
    let eig = dense
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let s = eig.S().column_vector();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].re.partial_cmp(&s[b].re).unwrap());
    let u = eig.U();
    let vectors = Mat::<c64>::from_fn(n, n, |i, j| u[(i, order[j])]);
    let raw: Vec<f64> = order.iter().map(|&j| s[j].re).collect();
    let scale = raw.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut residual: f64 = 0.0;
    for (j, &lam) in raw.iter().enumerate() {
        let v: CVec = (0..n).map(|i| vectors[(i, j)]).collect();
        let mv = op.matrix.matvec(&v);
        let r: f64 = mv.iter().zip(&v).map(|(a, b)| (a - b * lam).norm_sqr()).sum::<f64>().sqrt();
        residual = residual.max(r / scale);
    }
    if residual > 1e-10 {
        return Err(Error::Numerical(format!("eigen residual {residual:.2e} above 1e-10")));
    }
    let gram = vectors.adjoint() * &vectors;
    let mut gram_defect: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            gram_defect = gram_defect.max((gram[(i, j)] - c64::new(target, 0.0)).norm());
        }
    }
    if gram_defect > 1e-12 {
        return Err(Error::Numerical(format!("eigenvector Gram defect {gram_defect:.2e} above 1e-12")));
    }
    if raw[0] < -1e-10 * scale {
        return Err(Error::Domain(format!("operator is not nonnegative: smallest eigenvalue {}", raw[0])));
    }
    Ok(SpectralDecomposition {
        values: raw.iter().map(|v| v.max(0.0)).collect(),
        vectors,
        matrix: op.matrix.clone(),
        gradient: op.gradient.clone(),
        radius: op.radius.clone(),
        cell: op.cell,
        h: op.h,
        d_eff: op.d_eff,
        residual,
        gram_defect,
    })
}

/// `sin(t w) / w`, equal to `t` on the kernel.
pub(crate) fn sinc_t(t: f64, w: f64) -> f64 {
    if w < ZERO_MODE {
        t
    } else {
        (t * w).sin() / w
    }
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.sqrt()).collect()
    }

    /// `V* x`.
    pub fn coefficients(&self, x: &[c64]) -> CVec {
        let n = self.dim();
        (0..n).map(|j| (0..n).fold(cz(), |acc, i| acc + self.vectors[(i, j)].conj() * x[i])).collect()
    }

    /// `V c`.
    pub fn synthesize(&self, c: &[c64]) -> CVec {
        let n = self.dim();
        let mut out = vec![cz(); n];
        for (j, &cj) in c.iter().enumerate() {
            if cj == cz() {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.vectors[(i, j)] * cj;
            }
        }
        out
    }

    /// `f(sqrt P) x`.
    pub fn apply(&self, f: &dyn Fn(f64) -> f64, x: &[c64]) -> CVec {
        let mut c = self.coefficients(x);
        for (cj, w) in c.iter_mut().zip(self.frequencies()) {
            *cj *= f(w);
        }
        self.synthesize(&c)
    }

    pub fn l2_norm(&self, x: &[c64]) -> f64 {
        norm2(x) * self.cell.sqrt()
    }

    /// `||eta grad u||` with `eta` evaluated on edge radii.
    pub fn gradient_norm(&self, u: &[c64], eta: &dyn Fn(f64) -> f64) -> Result<f64> {
        let g = self.gradient.as_ref().ok_or_else(|| Error::Domain("operator carries no gradient".into()))?;
        let gu = g.matrix.matvec(u);
        let s: f64 = gu.iter().zip(&g.edge_radius).map(|(v, &r)| (v * eta(r)).norm_sqr()).sum();
        Ok((s * self.cell).sqrt())
    }

    pub fn weighted_norm(&self, u: &[c64], eta: &dyn Fn(f64) -> f64) -> f64 {
        let s: f64 = u.iter().zip(&self.radius).map(|(v, &r)| (v * eta(r)).norm_sqr()).sum();
        (s * self.cell).sqrt()
    }

    /// `||u_t||^2 + <M u, u>`, assembled with the sparse matrix.
    pub fn energy(&self, u: &[c64], ut: &[c64]) -> f64 {
        let mu = self.matrix.matvec(u);
        let pot: f64 = mu.iter().zip(u).map(|(a, b)| (b.conj() * a).re).sum();
        (norm2(ut).powi(2) + pot) * self.cell
    }
}

/// `(u(t), u_t(t))` for `u(0) = f1`, `u_t(0) = f2`.
pub fn propagate(dec: &SpectralDecomposition, f1: &[c64], f2: &[c64], t: f64) -> (CVec, CVec) {
    let a = dec.coefficients(f1);
    let b = dec.coefficients(f2);
    let (mut cu, mut cv) = (vec![cz(); a.len()], vec![cz(); a.len()]);
    for (j, w) in dec.frequencies().into_iter().enumerate() {
        let (s, c) = (t * w).sin_cos();
        cu[j] = a[j] * c + b[j] * sinc_t(t, w);
        cv[j] = -a[j] * (w * s) + b[j] * c;
    }
    (dec.synthesize(&cu), dec.synthesize(&cv))
}

/// Coefficient form of [`propagate`]: `(a(t), a'(t))` from `(a, b)`.
pub(crate) fn propagate_coefficients(w: &[f64], a: &[c64], b: &[c64], t: f64) -> (CVec, CVec) {
    let mut cu = vec![cz(); a.len()];
    let mut cv = vec![cz(); a.len()];
    for j in 0..a.len() {
        let (s, c) = (t * w[j]).sin_cos();
        cu[j] = a[j] * c + b[j] * sinc_t(t, w[j]);
        cv[j] = -a[j] * (w[j] * s) + b[j] * c;
    }
    (cu, cv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{assemble_dirichlet_exterior, Grid, Profile};

    #[test]
    fn dirichlet_chain_spectrum() {
        let n = 40;
        let grid = Grid::cartesian(1, n, 1.0).unwrap();
        let op = assemble_dirichlet_exterior(&grid, &Profile::Zero).unwrap();
        let dec = decompose(&op).unwrap();
        let h = grid.h;
        for (j, &l) in dec.values.iter().enumerate() {
            let exact = (2.0 - 2.0 * ((j + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos()) / (h * h);
            assert!((l - exact).abs() < 1e-9 * exact.max(1.0));
        }
        assert!(dec.gram_defect < 1e-12);
    }

    #[test]
    fn size_limit_and_outgoing_rejected() {
        let grid = Grid::cartesian(1, 30, 1.0).unwrap();
        let op = assemble_dirichlet_exterior(&grid, &Profile::Zero).unwrap();
        assert!(matches!(decompose_with_limit(&op, 10), Err(Error::SizeExceeded(_))));
    }
}
