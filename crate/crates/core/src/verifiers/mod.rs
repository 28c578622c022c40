//! Evaluation of both sides of the spectral-profile inequalities on concrete
//! operators and states, with pass/fail reports.

mod context;
pub mod functional;
pub mod heat;
pub mod mixed;
pub mod report;
pub mod sweep;

pub use context::Context;
pub use functional::{
    dominates, dominating_constant, polynomial_consequences, verify_h_sobolev, verify_lp_sobolev, verify_n_sobolev,
    verify_pure_moser_nash, PolynomialConstants, PureInequality,
};
pub use heat::compare_heat_spectral;
pub use mixed::{
    verify_dirichlet_fk, verify_faber_krahn_mixed, verify_integral_dominates_discrete, verify_rho_moser_integral,
    verify_rho_moser_partition, verify_rho_sobolev, verify_sobolev_to_fk,
};
pub use report::{csv_summary, merge_reports, read_jsonl, write_jsonl, InequalityReport, VerifyConfig, Witness};
pub use sweep::{run_sweep, Check, Instance, SweepSpec};
