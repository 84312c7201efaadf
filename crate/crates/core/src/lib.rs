//! Periodic steady states of driven ODE systems.
//!
//! The time derivative of a `2π`-periodic response is replaced by a
//! trigonometric differentiation matrix on `N` equispaced phase nodes, turning
//! `ω ẋ = f(x, t)` into `N·m` nonlinear algebraic equations solved by damped
//! Newton iteration. All node values of the limit cycle come out at once,
//! without integrating through the transient.
//!
//! ```
//! use limcycle::{models, solver, system::{CollocationProblem, FlatState}};
//!
//! let problem = CollocationProblem::new(models::linear_system(1.0).unwrap(), 7).unwrap();
//! let result = solver::newton_solve(&problem, &FlatState::zeros(1, 7), &Default::default()).unwrap();
//! assert!(result.converged);
//! ```

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod continuation;
pub mod error;
pub mod models;
pub mod solver;
pub mod spectral;
pub mod system;
pub mod warmstart;

pub use error::{Error, Result};
