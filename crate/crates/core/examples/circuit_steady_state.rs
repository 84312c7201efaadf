//! Rectifier steady state at N = 251, checked against a long RK4 run.
//!
//! ```text
//! cargo run --release --example circuit_steady_state
//! ```

use std::sync::Arc;
use std::time::Instant;

use limcycle::models::{circuit_outputs, circuit_system_from, CircuitField, CircuitParams};
use limcycle::solver::{newton_solve, NewtonConfig};
use limcycle::system::CollocationProblem;
use limcycle::warmstart::{rk4_transient, TransientConfig, CIRCUIT_WARMUP_CYCLES};

fn main() -> limcycle::Result<()> {
    let n = 251;
    let params = CircuitParams::default();
    let field = Arc::new(CircuitField::new(params)?);
    let system = circuit_system_from(field.clone())?;
    let problem = CollocationProblem::new(system.clone(), n)?;

    // The transient from rest is both the warm start and the reference.
    let steps = 4 * n;
    let transient = rk4_transient(
        &system,
        &TransientConfig {
            cycles: CIRCUIT_WARMUP_CYCLES,
            steps_per_cycle: steps,
            initial_state: vec![0.0; 3],
        },
    )?;
    let guess = transient.sample_final_cycle(problem.grid());

    let clock = Instant::now();
    let res = newton_solve(&problem, &guess, &NewtonConfig::default())?;
    println!(
        "converged {} in {} iterations, |R| = {:.2e} ({:.2?})",
        res.converged,
        res.iterations,
        res.residual_norm,
        clock.elapsed()
    );

    let xdot = problem.derivative(&res.x)?;
    let start = transient.len() - 1 - steps;
    let (mut id_err, mut v0_err) = (0.0f64, 0.0f64);
    let (mut id_lo, mut id_hi, mut v0_lo, mut v0_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for j in 0..n {
        let (id, v0) = circuit_outputs(&res.x.node_state(j), &xdot.node_state(j), &params);
        let xr = transient.state(start + 4 * (j + 1));
        let fr = system.rhs(xr, problem.forcing_phases()[j])?;
        let (id_r, v0_r) = circuit_outputs(xr, &fr, &params);
        id_err = id_err.max((id - id_r).abs());
        v0_err = v0_err.max((v0 - v0_r).abs());
        id_lo = id_lo.min(id_r);
        id_hi = id_hi.max(id_r);
        v0_lo = v0_lo.min(v0_r);
        v0_hi = v0_hi.max(v0_r);
    }
    println!("diode current: {id_lo:.4} .. {id_hi:.4} A, max deviation from RK4 {id_err:.3e} A");
    println!("output voltage: {v0_lo:.5} .. {v0_hi:.5} V, max deviation from RK4 {v0_err:.3e} V");
    println!(
        "diode solves: {} evaluations, worst |g|/tol {:.3}",
        field.monitor().evaluations(),
        field.monitor().worst_ratio()
    );
    Ok(())
}
