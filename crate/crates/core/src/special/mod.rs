//! Numerical kernels beneath the quantum basis: integer-order Bessel
//! functions, their zeros, and quadrature rules.

mod bessel;
mod quadrature;
mod zeros;

pub use bessel::{bessel_j, bessel_j_derivative, bessel_j_orders, bessel_j_with_derivatives};
pub use quadrature::{build_quadrature, GaussLegendre, GridSpec, QuadratureRule};
pub use zeros::{bessel_zero, zeros_of_order, BesselZeroTable, DEFAULT_SCAN_STEP};
