//! Discrete coagulation–fragmentation with growth, decay and sedimentation.
//!
//! The crate integrates the mass-conserving truncation of the infinite
//! system on sizes `1..=N`, checks the coefficient hypotheses that make the
//! infinite problem globally well posed, and provides the diagnostics used to
//! validate a run: moments, mass flux, growth leakage through the top size
//! and truncation-convergence studies.
//!
//! ```
//! use coagfrag::{builtin_example, NormSpec};
//!
//! let mut cfg = builtin_example(1)?;
//! cfg.model.n = 40;
//! cfg.run.t_end = 0.05;
//! let traj = cfg.integrate()?;
//! let mass = traj.mass();
//! assert!((mass[mass.len() - 1] - 2000.0).abs() < 1e-6 * 2000.0);
//! # let _ = NormSpec::moment(1.0);
//! # Ok::<(), coagfrag::Error>(())
//! ```
//!
//! The narrative guide lives in `book/`; its code snippets are compiled and
//! run as doctests of this crate.

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod kernels;
pub mod model;
pub mod summation;

pub use analysis::{check_conditions, delta_p, phi, weighted_norm, ConditionReport, NormSpec};
pub use error::{Error, Result};
pub use experiments::{
    builtin_example, convergence_study, run_scenario, ConvergenceResult, InitialCondition,
    ScenarioConfig,
};
pub use integrator::{
    explicit_reference_step, integrate, uniform_grid, Method, SolverConfig, Trajectory,
};
pub use kernels::{CoagulationKernel, FragmentationKernel, RateLaws, RateTable};
pub use model::{StateVector, TruncatedSystem};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/integrator.md")]
    mod integrator {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
