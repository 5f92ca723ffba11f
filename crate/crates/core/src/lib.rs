//! Affine continuous logic over finite metric structures.
//!
//! Structures, charges and the LP-based procedures are generic over a
//! [`Scalar`]: exact [`Rational`] (the default everywhere), `f64` or `f32`.

pub mod io;
pub mod lp;
pub mod pra_qe;
pub mod proofcheck;
pub mod sample;
pub mod satisfiability;
pub mod scalar;
pub mod structures;
pub mod syntax;
pub mod types;
pub mod ultramean;

pub use scalar::{Rational, Scalar};

pub type RationalStructure = structures::FiniteStructure<Rational>;
pub type F64Structure = structures::FiniteStructure<f64>;
pub type F32Structure = structures::FiniteStructure<f32>;

pub type RationalCharge = ultramean::Charge<Rational>;
pub type F64Charge = ultramean::Charge<f64>;
pub type F32Charge = ultramean::Charge<f32>;
