//! Forward and inverse spectral problems for `-(y⁽¹⁾)' - s y⁽¹⁾ - s² y = λ y` on `[0, π]`,
//! with quasi-derivative `y⁽¹⁾ = y' - s y` and boundary conditions rational in `λ`.

// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hn_algebra;
pub mod inverse;
mod numeric;
pub mod potential;
pub mod quasi_ode;
pub mod spectrum;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
pub use hn_algebra::{Pole, RationalBC, RealPolynomial, ThetaBranch};
pub use potential::{Potential, SolutionTrace};
pub use spectrum::{Problem, Solver, SolverConfig, SpectralData};
