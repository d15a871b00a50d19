//! Numerical workbench for positive solutions of `Delta_f u + Sigma(x, u) = 0`
//! on rotationally symmetric model metric measure spaces, together with
//! quantified verification of Li-Yau type gradient estimates, Harnack
//! inequalities, and Liouville sign conditions for the Witten Laplacian.
//!
//! The crate is organized along the pipeline:
//!
//! - [`model_space`]: geometry (warp, weight, Bakry-Emery curvature, drift
//!   Laplacian coefficient, Wei-Wylie comparison).
//! - [`nonlinearity`]: Sigma families with closed-form partials and the
//!   Liouville sign conditions.
//! - [`grid_ops`]: radial grids, the discrete Witten operator, derivative
//!   quantities, identity residual checks.
//! - [`solver`]: damped Newton with continuation, manufactured solutions.
//! - [`inequality_kernel`]: standalone algebraic verification (completion
//!   inequality Monte-Carlo, cutoff constants, Cauchy-Schwarz chain, coth
//!   bound).
//! - [`estimates`]: assembly of the estimate constants and the pass/fail
//!   reports with discretization-aware tolerances.

// `!(x > 0.0)` guards reject NaN, which `x <= 0.0` would let through;
// index-based loops mirror the stencil formulas they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod estimates;
pub mod grid_ops;
pub mod inequality_kernel;
pub mod model_space;
pub mod nonlinearity;
pub mod profiles;
pub mod solver;

pub use error::{Error, Result};
pub use estimates::{
    check_global_estimate, check_liouville, check_local_estimate, corrupt_field, harnack,
    local_rhs, optimize_params, sup_inf_bundle, EstimateParams, EstimateReport, HarnackReport,
    LiouvilleReport, RhsParts, SupInfBundle,
};
pub use grid_ops::{
    assemble_witten, calibrate_tolerance_constant, check_bochner_identity, check_h_equation,
    check_identities, derivative, gradient_norm, hessian_norm_sq_radial, DiscreteOperator, Field,
    IdentityCheck, RadialGrid,
};
pub use inequality_kernel::{
    coth_bound_check, cs_chain_check, lemma34_monte_carlo, lemma34_slack, quintic_cutoff,
    verify_cutoff, AlgebraSample, CutoffProfile,
};
pub use model_space::{CurvatureProfile, ModelSpace, SpaceSummary};
pub use nonlinearity::{
    liouville_conditions, liouville_mu_search, GammaFn, LiouvilleVerdict, NonlinearityFamily,
    PowerTerm, SigmaJet,
};
pub use profiles::{RadialProfile, SmoothProfile, Warp, Weight};
pub use solver::{
    manufacture, residual, solve_newton, BVPProblem, BoundaryCondition, InitialGuess, SolveResult,
    SolverConfig,
};
