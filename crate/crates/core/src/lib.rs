//! Finite-difference solver for a nonlinear convection-diffusion-reaction
//! equation on a square with zero-Neumann boundaries,
//!
//! ```text
//! du/dt = div(D grad u) - div(v u) + f(u)   on [0, L]^2,   grad u . n = 0,
//! ```
//!
//! integrated with an adaptive embedded Runge-Kutta-Fehlberg 2(3) pair.
//! Alongside the solver the crate ships a mesh refinement harness and a
//! reproducible generator of (initial field, final field, conditioning)
//! datasets for surrogate training.
//!
//! Runnable examples live in `examples/`; the `cdr` binary exposes the same
//! capabilities on the command line.

pub mod cli;
pub mod coefficients;
pub mod convergence;
pub mod dataset;
pub mod error;
pub mod grid;
pub mod initial;
pub mod integrator;
pub mod rng;
pub mod stencil;

pub use coefficients::{CoefficientFields, Conditioning, Reaction, ReactionParams};
pub use error::{Error, Result};
pub use grid::{GridSpec, ScalarField};
pub use initial::{HillParams, InitialCondition};
pub use integrator::{integrate_to, propose_dt, rkf23_step, RunStats, StepperConfig};
pub use stencil::{apply_boundary_closure, fd_apply, rhs_interior, FdOperator, RhsWorkspace};
