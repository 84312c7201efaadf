//! Damped Newton iteration for `R(X) = 0`.

use crate::error::{Error, Result};
use crate::system::{CollocationProblem, FlatState};

/// Residual threshold for convergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResidualTolerance {
    /// `factor · (1 + ‖F(X₀)‖∞)` with `F` evaluated at the initial guess.
    Scaled(f64),
    Absolute(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub tol_residual: ResidualTolerance,
    pub max_iterations: usize,
    pub backtrack_factor: f64,
    pub min_step_fraction: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol_residual: ResidualTolerance::Scaled(1e-10),
            max_iterations: 50,
            backtrack_factor: 0.5,
            min_step_fraction: 2f64.powi(-20),
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let tol = match self.tol_residual {
            ResidualTolerance::Scaled(v) | ResidualTolerance::Absolute(v) => v,
        };
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument("residual tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::InvalidArgument("backtrack_factor must lie in (0, 1)".into()));
        }
        if !(self.min_step_fraction > 0.0) {
            return Err(Error::InvalidArgument("min_step_fraction must be positive".into()));
        }
        Ok(())
    }
}

/// One accepted Newton step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub iteration: usize,
    pub residual_norm: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x: FlatState,
    pub residual_norm: f64,
    pub tol_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub step_history: Vec<StepRecord>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| if x.is_nan() { f64::NAN } else { a.max(x.abs()) })
}

/// Solve the collocation system from `x0`.
///
/// Each Newton correction is halved (by `backtrack_factor`) until the
/// residual ∞-norm decreases. Non-convergence is reported through
/// [`SolveResult::converged`], carrying the best iterate.
pub fn newton_solve(
    problem: &CollocationProblem,
    x0: &FlatState,
    config: &NewtonConfig,
) -> Result<SolveResult> {
    config.validate()?;
    let mut x = x0.clone();
    let mut r = problem.residual(&x)?;
    let mut norm = inf_norm(r.as_slice());
    let tol = match config.tol_residual {
        ResidualTolerance::Absolute(v) => v,
        ResidualTolerance::Scaled(v) => {
            v * (1.0 + inf_norm(problem.rhs_values(&x)?.as_slice()))
        }
    };
    let mut history = Vec::new();
    let mut iterations = 0;
    let n = problem.size();

    while !(norm <= tol) && iterations < config.max_iterations {
        let jac = problem.jacobian(&x)?;
        let lu = jac.lu();
        let u = lu.u();
        let (mut umin, mut umax) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let d = u[(i, i)].abs();
            umin = umin.min(d);
            umax = umax.max(d);
        }
        if !(umin > umax * f64::EPSILON * n as f64) {
            return Err(Error::SingularJacobian { iteration: iterations });
        }
        let rhs = nalgebra::DVector::from_iterator(n, r.as_slice().iter().map(|v| -v));
        let delta = lu
            .solve(&rhs)
            .filter(|d| d.iter().all(|v| v.is_finite()))
            .ok_or(Error::SingularJacobian { iteration: iterations })?;

        let mut lambda = 1.0;
        let accepted = loop {
            let mut trial = x.clone();
            for (t, d) in trial.as_mut_slice().iter_mut().zip(delta.iter()) {
                *t += lambda * d;
            }
            // a failed evaluation counts as no decrease
            if let Ok(rt) = problem.residual(&trial) {
                let nt = inf_norm(rt.as_slice());
                if nt < norm {
                    break Some((trial, rt, nt));
                }
            }
            lambda *= config.backtrack_factor;
            if lambda < config.min_step_fraction {
                break None;
            }
        };
        let Some((xt, rt, nt)) = accepted else {
            break;
        };
        iterations += 1;
        x = xt;
        r = rt;
        norm = nt;
        history.push(StepRecord {
            iteration: iterations,
            residual_norm: norm,
            damping: lambda,
        });
    }

    Ok(SolveResult {
        converged: norm <= tol,
        x,
        residual_norm: norm,
        tol_residual: tol,
        iterations,
        step_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{linear_steady_state, linear_system, pendulum_system, PendulumParams};
    use crate::system::{FnField, PeriodicSystem};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn linear_model_one_full_step() {
        for n in [3, 7, 21] {
            let prob = CollocationProblem::new(linear_system(1.3).unwrap(), n).unwrap();
            let x0 = FlatState::new((0..n).map(|i| (i as f64).sin() * 4.0).collect(), 1, n)
                .unwrap();
            let res = newton_solve(&prob, &x0, &NewtonConfig::default()).unwrap();
            assert!(res.converged);
            assert_eq!(res.iterations, 1);
            assert_eq!(res.step_history[0].damping, 1.0);
            for (v, t) in res.x.as_slice().iter().zip(prob.grid().nodes()) {
                assert!((v - linear_steady_state(1.3, *t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn root_as_guess_takes_no_steps() {
        let p = PendulumParams::new(0.1, 1.0, 17.5).unwrap();
        let prob = CollocationProblem::new(pendulum_system(&p).unwrap(), 21).unwrap();
        let x0 = FlatState::constant(&[PI, 0.0], 21);
        let res = newton_solve(&prob, &x0, &NewtonConfig::default()).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 0);
        assert_eq!(res.x, x0);
    }

    #[test]
    fn singular_jacobian_is_an_error() {
        // f = sin(t) does not depend on x and D annihilates constants.
        let field = Arc::new(FnField::new(1, |_x, t, out| out[0] = 1.0 + t.sin()));
        let prob = CollocationProblem::new(PeriodicSystem::new(field, 1.0).unwrap(), 5).unwrap();
        let err = newton_solve(&prob, &FlatState::zeros(1, 5), &NewtonConfig::default());
        assert_eq!(err.unwrap_err(), Error::SingularJacobian { iteration: 0 });
    }

    #[test]
    fn iteration_limit_gives_unconverged_result() {
        let p = PendulumParams::new(0.1, 10.0, 17.5).unwrap();
        let prob = CollocationProblem::new(pendulum_system(&p).unwrap(), 21).unwrap();
        let x0 = crate::warmstart::guess_near_pi(21, 0.3, 1, 17.5, 1).unwrap();
        let cfg = NewtonConfig {
            max_iterations: 1,
            tol_residual: ResidualTolerance::Absolute(1e-300),
            ..NewtonConfig::default()
        };
        let res = newton_solve(&prob, &x0, &cfg).unwrap();
        assert!(!res.converged);
        assert!(res.iterations <= 1);
        assert!(res.residual_norm.is_finite());
    }

    #[test]
    fn config_validation() {
        let bad = NewtonConfig {
            backtrack_factor: 1.0,
            ..NewtonConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(NewtonConfig::default().validate().is_ok());
    }
}
