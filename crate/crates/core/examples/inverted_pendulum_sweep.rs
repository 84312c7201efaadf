//! Continue the inverted pendulum in the drive amplitude `b`, then start
//! Newton from oscillating seeds around it.

use std::f64::consts::PI;

use limcycle::continuation::{extract_extrema, sweep, SweepConfig};
use limcycle::models::{pendulum_system, PendulumParams};
use limcycle::solver::{newton_solve, NewtonConfig};
use limcycle::system::{CollocationProblem, FlatState};
use limcycle::warmstart::guess_near_pi;

fn family(n: usize) -> impl FnMut(f64) -> limcycle::Result<CollocationProblem> {
    move |b| CollocationProblem::new(pendulum_system(&PendulumParams::new(0.1, b, 17.5)?)?, n)
}

fn main() -> limcycle::Result<()> {
    let n = 101;
    let newton = NewtonConfig::default();

    let inverted = FlatState::constant(&[PI, 0.0], n);
    let cfg = SweepConfig::new("b", 0.0, 200.0, 1.0);
    let branch = sweep(family(n), &inverted, &cfg, &newton, "pi")?;
    let grid = limcycle::spectral::NodeGrid::equispaced(n)?;
    let kept = branch
        .extrema(&grid, 0, 8)?
        .iter()
        .all(|e| e.max_value == PI && e.min_value == PI);
    println!(
        "inverted branch: {} points, status {:?}, theta == pi throughout: {kept}",
        branch.points.len(),
        branch.status
    );

    // Seeds oscillating about pi at b = 10 fall back onto the inverted state.
    let prob = family(n)(10.0)?;
    for eps in [0.1, 0.3, 1.0] {
        let seed = guess_near_pi(n, eps, 1, 17.5, 1)?;
        let res = newton_solve(&prob, &seed, &newton)?;
        let (mx, mn) = extract_extrema(&grid, &res.x, 0, 8)?;
        println!(
            "b = 10, seed eps = {eps}: converged {} in {} its, theta in [{mn:.6}, {mx:.6}]",
            res.converged, res.iterations
        );
    }
    Ok(())
}
