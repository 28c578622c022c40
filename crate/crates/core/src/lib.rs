//! Spectral decay profiles of positive operators on finite weighted spaces,
//! their Stieltjes transforms, and numerical certification of the Sobolev,
//! Moser, Nash and Faber-Krahn type inequalities they control.

pub mod cohomology;
pub mod error;
pub mod extended;
pub mod invariant;
pub mod operators;
pub mod profiles;
pub mod quadrature;
pub mod serde_ext;
pub mod verifiers;

pub use error::{Error, Result};
pub use extended::Extended;
pub use operators::{DensityState, Flavor, KernelMatrix, MeasureSpace, ProfileKind, SpectralOperator};
pub use profiles::{DecayProfile, MonotoneProfile};
