//! Spectral densities of translation-invariant operators: lattice symbols
//! on the torus, the Laplacian on `R^n`, and exponent fitting.

pub mod continuum;
pub mod density;
pub mod expr;
pub mod fit;
pub mod symbol;

pub use continuum::{moser_constant_rn, rn_laplacian_profile, sobolev_constant_rn};
pub use density::{grid_counts, midpoints, symbol_density_profile, GridProfile};
pub use expr::{TrigFunction, TrigPolynomial, TrigTerm};
pub use fit::{fit_grid, ns_exponent_fit, ExponentFit, FIT_SAMPLES};
pub use symbol::TorusSymbol;
