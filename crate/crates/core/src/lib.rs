//! Davies maps on qubits and qutrits: construction, semigroup membership
//! tests and minimal output entropy.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod entropy;
pub mod error;
pub mod io;
pub mod numerics;
pub mod qubit;
pub mod qutrit;

pub use channel::{DensityMatrix, GibbsState, Superoperator};
pub use entropy::LogBase;
pub use error::{Error, Result};
pub use numerics::CMatrix;
