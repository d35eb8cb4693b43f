//! Rational matrices R(λ) = C(λI−A)⁻¹B + D(λ) and their block Kronecker
//! linearizations.
//!
//! The crate builds the structured pencil S(λ) attached to a state-space
//! quadruple {A,B,C,D(λ)}, computes its generalized eigenvalues, restores the
//! block structure after an unstructured perturbation, evaluates the backward
//! error constants that control how well a computed eigenstructure pulls back
//! to the quadruple, and applies the diagonal/power-of-two scaling that keeps
//! those constants moderate.
//!
//! Everything is generic over the underlying real scalar (`f64` by default,
//! see the aliases below); all matrix entries are complex.

pub mod backward_error;
pub mod dense;
pub mod eigensolver;
mod errors;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod linearization;
pub mod pencil_core;
pub mod restoration;
pub mod rng;
mod scalar;
pub mod scaling;
pub mod sylvester;

pub use errors::{Error, Result};
pub use scalar::Scalar;

use num_complex::Complex;

/// Dense complex matrix over the real scalar `T`.
pub type CMat<T> = nalgebra::DMatrix<Complex<T>>;
/// Dense complex column vector over the real scalar `T`.
pub type CVec<T> = nalgebra::DVector<Complex<T>>;

// Default-precision aliases. The CLI and the test suites work in f64.
pub type Cx64 = Complex<f64>;
pub type Mat64 = CMat<f64>;
pub type Vec64 = CVec<f64>;
pub type Pencil64 = pencil_core::Pencil<f64>;
pub type PolyMatrix64 = pencil_core::PolyMatrix<f64>;
pub type Quadruple64 = pencil_core::RationalQuadruple<f64>;
pub type BlockKronecker64 = linearization::BlockKroneckerPencil<f64>;
