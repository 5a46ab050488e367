//! Numerical toolkit for the lagrangian grassmannian `Λ(n)` of `R^{2n}`.

pub mod acceptance;
pub mod conic;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod maslov;
pub mod quadrature;
pub mod spinor;
pub mod stratification;
pub mod symplectic;

pub use error::{Error, Result};
