//! Calculus of monotone right-continuous profiles.

pub mod decay;
pub mod envelope;
pub mod io;
pub mod monotone;
pub mod transforms;

pub use decay::{m_transform, right_inverse_decreasing, DecayProfile, ExpTail, ExpTerm, IntegratedDecay, TabulatedDecay};
pub use envelope::{HeatEnvelope, PiecewiseExp};
pub use monotone::{evaluate, right_inverse_increasing, MonotoneProfile, Representation, StepData};
pub use transforms::{
    check_doubling, check_growth_condition, g_transform, g_transform_with_floor, h_of, laplace_stieltjes, n_of,
    GrowthCheck,
};
