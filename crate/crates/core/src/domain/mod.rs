//! Habitat discretization, coefficient functions and hypothesis checks.

pub mod coefficients;
pub mod expr;
pub mod grid;

pub use coefficients::{
    CoefficientSet, CoefficientSource, CoefficientSpec, DispersalRates, KernelSpec, ValidationReport, Violation,
};
pub use expr::Expr;
pub use grid::{Field, Grid};
