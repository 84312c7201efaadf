//! Period-2 pendulum cycle at b = 181 (response period = two forcing
//! periods), checked against RK4 and continued in `b`.

use std::f64::consts::{PI, TAU};

use limcycle::continuation::{sweep, SweepConfig};
use limcycle::models::{pendulum_system, PendulumParams};
use limcycle::solver::{newton_solve, NewtonConfig};
use limcycle::spectral::trig_interpolate;
use limcycle::system::CollocationProblem;
use limcycle::warmstart::{guess_near_pi, rk4_transient, TransientConfig};

const N: usize = 101;
const S: usize = 2;
const OMEGA: f64 = 17.5;

fn problem(b: f64) -> limcycle::Result<CollocationProblem> {
    let sys = pendulum_system(&PendulumParams::new(0.1, b, OMEGA)?)?.with_subharmonic(S)?;
    CollocationProblem::new(sys, N)
}

fn main() -> limcycle::Result<()> {
    let prob = problem(181.0)?;
    let seed = guess_near_pi(N, 1.0, 1, OMEGA, S)?;
    let res = newton_solve(&prob, &seed, &NewtonConfig::default())?;
    println!(
        "b = 181: converged {} in {} iterations, |R| = {:.1e}",
        res.converged, res.iterations, res.residual_norm
    );

    let grid = prob.grid();
    let (theta, v) = (res.x.component(0), res.x.component(1));
    let steps = 16 * N;
    let tr = rk4_transient(
        prob.system(),
        &TransientConfig {
            cycles: 1,
            steps_per_cycle: steps,
            initial_state: vec![theta[N - 1], v[N - 1]],
        },
    )?;
    let mut dev = 0.0f64;
    for i in 0..tr.len() {
        let u = -PI + TAU * i as f64 / steps as f64;
        dev = dev.max((tr.state(i)[0] - trig_interpolate(grid, theta, u)?).abs());
    }
    println!("RK4 over one response period stays within {dev:.2e} of the interpolant");

    println!("\n     u        theta         v");
    for i in 0..8 {
        let u = -PI + TAU * i as f64 / 8.0;
        println!(
            "{u:7.3} {:12.6} {:12.6}",
            trig_interpolate(grid, theta, u)?,
            trig_interpolate(grid, v, u)?
        );
    }

    let cfg = SweepConfig::new("b", 181.0, 170.0, 1.0);
    let branch = sweep(problem, &res.x, &cfg, &NewtonConfig::default(), "sin:1.0 at b=181")?;
    println!("\ncontinuation down to b = 170, status {:?}", branch.status);
    for e in branch.extrema(grid, 0, 8)? {
        println!("b = {:6.1}: theta in [{:.5}, {:.5}]", e.parameter, e.min_value, e.max_value);
    }
    Ok(())
}
