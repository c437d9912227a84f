//! Numerics for two-stage population models with nonlocal dispersal:
//! Nyström discretization, principal spectrum points with certificates,
//! small- and large-dispersal limit quantities, and steady states.

pub mod dense;
pub mod domain;
pub mod error;
pub mod limits;
pub mod operators;
pub mod presets;
pub mod spectral;
pub mod steady;

pub use dense::{DenseMatrix, Lu};
pub use domain::{CoefficientSet, CoefficientSource, CoefficientSpec, DispersalRates, Expr, Field, Grid, KernelSpec};
pub use error::{Error, Result};
