//! Finite weighted spaces, self-adjoint operators with full spectral
//! calculus, kernels, densities, mixed states and Dirichlet counting.

pub mod dirichlet;
pub mod families;
pub mod kernel;
pub mod profiles;
pub mod space;
pub mod spectral;
pub mod state;

pub use dirichlet::{dirichlet_counting, dirichlet_eigenvalues, dirichlet_modes, dirichlet_profile, DirichletSpace};
pub use kernel::KernelMatrix;
pub use profiles::{decay_profile, heat_decay, inverse_ultra_profile, pointwise_profiles, region_profiles, ProfileKind};
pub use space::MeasureSpace;
pub use spectral::{within, Flavor, SpectralOperator, DEFAULT_KERNEL_THRESHOLD, TIE_ABS, TIE_REL};
pub use state::{energy, rho_energy, rho_expectation, sandwich_norm, tail_mass, vector_digest, DensityState};
