//! Dirichlet spectra of `-y'' + q(x) y = lambda y` on `[0, 1]` computed through
//! the modified Prüfer angle, together with numerical checks of eigenvalue-ratio
//! bounds for single-barrier potentials.
//!
//! The pipeline is: build a [`Potential`], integrate the Prüfer system
//! ([`prufer`]), solve for eigenvalues by oscillation counting ([`spectrum`]),
//! then check ratio bounds ([`bounds`]), the angle monotonicity in `z`
//! ([`sensitivity`]) and the supporting block inequalities ([`lemma_audit`]).
//! [`oracle`] is an independent finite-difference eigenvalue solver.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod lemma_audit;
pub mod oracle;
pub mod potential;
pub mod prufer;
pub mod quadrature;
pub mod report;
pub mod sensitivity;
pub mod spectrum;
pub mod sweep;

pub use error::{Error, Result};
pub use potential::{
    check_hypotheses, classify, sample_admissible, FamilyParams, HypothesisReport, Potential,
    PotentialSpec, Shape, ShapeReport,
};
pub use prufer::{integrate, shoot, IntegratorConfig, PruferState, PruferTrajectory};
pub use spectrum::{count_eigenvalues_below, eigenvalue, spectrum, Eigenvalue, SpectrumConfig};
pub use sensitivity::{
    monotonicity_scan, psi, psi_identity_check, theta_dot_fd, theta_dot_integral, MonotonicityScan,
    ThetaDotResult,
};
pub use oracle::{fd_spectrum, sturm_count, FdConfig, FdEigenvalue};
pub use bounds::{
    check_ashbaugh_benguria, check_horvath_kiss, check_huang_law_lower, check_theorem21, BoundKind,
    BoundReport, BoundSuite, PairCheck,
};
pub use lemma_audit::{AuditCase, AuditReport, AuditResult, LemmaId};
pub use sweep::{run_sweep, SweepConfig, SweepReport};
