//! Simplicial complexes, coboundaries and the spectral densities of their
//! up-Laplacians, for finite complexes and `Z^d`-periodic ones.

pub mod io;
pub mod periodic;
pub mod simplicial;
pub mod sobolev;

pub use io::{parse_complex, ComplexFile};
pub use periodic::{gap_below, Lift, PeriodicComplex};
pub use simplicial::{circle, torus, SimplicialComplex};
pub use sobolev::{sobolev_exponent, verify_cochain_sobolev, verify_periodic_cochain_sobolev, SobolevExponent};
