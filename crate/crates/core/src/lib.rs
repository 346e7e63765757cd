//! Weighted resolvent estimates, resonance continuation and local energy
//! decay for Schrodinger-type operators on lattices.

pub mod cutoffs;
pub mod error;
pub mod fit;
pub mod freekernel;
pub mod lattice;
pub mod linalg;
pub mod quad;
pub mod resolvent;
pub mod scalar;
pub mod wavelab;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CarlemanParamsF64 = weights::CarlemanParams<f64>;
pub type CarlemanParamsF32 = weights::CarlemanParams<f32>;
pub type CutoffFamilyF64 = cutoffs::CutoffFamily<f64>;
pub type CutoffFamilyF32 = cutoffs::CutoffFamily<f32>;
