//! Potentials and magnetic fields sampled on grids.

use crate::error::{Error, Result};
use crate::weights::japanese;

/// Radial scalar profile.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Zero,
    /// `amp e^{-rate <r>}`.
    Exponential { amp: f64, rate: f64 },
    /// `amp exp(1 - 1/(1 - (r/R)^2))` for `r < R`, zero outside.
    Bump { amp: f64, radius: f64 },
    /// `-depth` on `r <= R`.
    SquareWell { depth: f64, radius: f64 },
    /// `k r^2`; unbounded, for confinement tests only.
    Harmonic { k: f64 },
}

impl Profile {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::Exponential { amp, rate } => amp * (-rate * japanese(r)).exp(),
            Profile::Bump { amp, radius } => {
                let t = r / radius;
                if t < 1.0 {
                    amp * (1.0 - 1.0 / (1.0 - t * t)).exp()
                } else {
                    0.0
                }
            }
            Profile::SquareWell { depth, radius } => {
                if r <= radius {
                    -depth
                } else {
                    0.0
                }
            }
            Profile::Harmonic { k } => k * r * r,
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match *self {
            Profile::Zero => true,
            Profile::Exponential { amp, .. } | Profile::Bump { amp, .. } => amp >= 0.0,
            Profile::SquareWell { depth, .. } => depth <= 0.0,
            Profile::Harmonic { k } => k >= 0.0,
        }
    }
}

/// Magnetic potential `b(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Magnetic {
    Zero,
    Constant(Vec<f64>),
    /// `amp_j e^{-rate <x>}` in component `j`.
    Exponential { amp: Vec<f64>, rate: f64 },
}

impl Magnetic {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Magnetic::Zero => vec![0.0; x.len()],
            Magnetic::Constant(v) => v.clone(),
            Magnetic::Exponential { amp, rate } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let e = (-rate * japanese(r)).exp();
                amp.iter().map(|a| a * e).collect()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Magnetic::Zero => true,
            Magnetic::Constant(v) => v.iter().all(|&x| x == 0.0),
            Magnetic::Exponential { amp, .. } => amp.iter().all(|&x| x == 0.0),
        }
    }
}

/// Decay class of the perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayClass {
    /// `|V| + |b| <= C <x>^{-rho}`.
    ShortRange { rho: f64 },
    /// `|V| + |b| <= C e^{-c <x>}`.
    Exponential { c: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub v: Profile,
    pub b: Magnetic,
    pub class: DecayClass,
}

impl FieldSpec {
    pub fn free() -> Self {
        Self { v: Profile::Zero, b: Magnetic::Zero, class: DecayClass::Exponential { c: 1.0 } }
    }

    pub fn potential(v: Profile, c: f64) -> Self {
        Self { v, b: Magnetic::Zero, class: DecayClass::Exponential { c } }
    }

    pub fn v_at(&self, x: &[f64]) -> f64 {
        self.v.eval(x.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    pub fn b_at(&self, x: &[f64]) -> Vec<f64> {
        self.b.eval(x)
    }

    /// `V + |b|^2`.
    pub fn vtilde_at(&self, x: &[f64]) -> f64 {
        self.v_at(x) + self.b_at(x).iter().map(|v| v * v).sum::<f64>()
    }

    /// Smallest `C` with `|V| + |b| <= C w(r)` over the sample radii, where `w`
    /// is the envelope of the declared class. Fails when the ratio keeps
    /// growing towards the largest radii.
    pub fn decay_constant(&self, d: usize, radii: &[f64]) -> Result<f64> {
        let mut ratios = Vec::with_capacity(radii.len());
        for &r in radii {
            let mut x = vec![0.0; d];
            x[0] = r;
            let mag = self.v_at(&x).abs() + self.b_at(&x).iter().map(|v| v * v).sum::<f64>().sqrt();
            let env = match self.class {
                DecayClass::ShortRange { rho } => japanese(r).powf(-rho),
                DecayClass::Exponential { c } => (-c * japanese(r)).exp(),
            };
            ratios.push(mag / env);
        }
        let best = ratios.iter().cloned().fold(0.0, f64::max);
        let half = ratios.len() / 2;
        let early = ratios[..half.max(1)].iter().cloned().fold(0.0, f64::max);
        if !best.is_finite() || (early > 0.0 && best > 10.0 * early) || (early == 0.0 && best > 0.0) {
            return Err(Error::Class(format!("fields do not satisfy the declared decay {:?}", self.class)));
        }
        Ok(best)
    }
}
