//! Refinable functions on lattices: attractors and tiles, admissible index
//! sets, scale matrices and their Jordan structure, cascade evaluation,
//! homogeneous local bases and accuracy.
//!
//! The numerical core is generic over [`scalar::Real`] (`f32`, `f64`); the
//! lifted-matrix calculus in [`accuracy`] also runs over exact rationals.

pub mod accuracy;
pub mod admissible;
pub mod analysis;
pub mod attractor;
pub mod cascade;
pub mod cli;
pub mod error;
pub mod expr;
pub mod homogeneous;
pub mod lattice;
pub mod linalg;
pub mod scalar;
pub mod scale_matrix;
pub mod spectral;

#[cfg(test)]
mod fixtures;

pub use accuracy::{lift_matrix, AccuracyReport, LiftedMatrix};
pub use admissible::AdmissibleChain;
pub use analysis::{Analysis, AnalysisOptions};
pub use attractor::{AdaptedNorm, AttractorCloud};
pub use cascade::{GridFunction, PhiGrid};
pub use error::{Error, Result};
pub use homogeneous::HomogeneousElement;
pub use lattice::{DigitSet, Dilation, IntMatrix, Lattice, Point};
pub use scalar::Real;
pub use scale_matrix::{Mask, ScaleMatrix};
pub use spectral::{ExtendedVector, JordanDecomposition, JordanOptions};

pub type Mask64 = Mask<f64>;
pub type Mask32 = Mask<f32>;
pub type Analysis64 = Analysis<f64>;
pub type Analysis32 = Analysis<f32>;
pub type Jordan64 = JordanDecomposition<f64>;
pub type Jordan32 = JordanDecomposition<f32>;
pub type PhiGrid64 = PhiGrid<f64>;
pub type PhiGrid32 = PhiGrid<f32>;
pub type Lattice64 = Lattice<f64>;
/// Lifted matrices over exact rationals.
pub type ExactLift = LiftedMatrix<num_rational::Ratio<i64>>;
