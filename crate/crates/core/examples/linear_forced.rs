//! Forced linear system `x' = -x + p cos t`: Newton lands on the exact
//! periodic response in a single step for any node count.

use limcycle::models::{linear_steady_state, linear_system};
use limcycle::solver::{newton_solve, NewtonConfig};
use limcycle::system::{CollocationProblem, FlatState};

fn main() -> limcycle::Result<()> {
    let p = 2.0;
    for n in [3, 11, 51] {
        let problem = CollocationProblem::new(linear_system(p)?, n)?;
        let res = newton_solve(&problem, &FlatState::zeros(1, n), &NewtonConfig::default())?;
        let err = res
            .x
            .as_slice()
            .iter()
            .zip(problem.grid().nodes())
            .map(|(x, t)| (x - linear_steady_state(p, *t)).abs())
            .fold(0.0, f64::max);
        println!(
            "N = {n:2}: {} Newton step(s), max error vs p(cos t + sin t)/2 = {err:.1e}",
            res.iterations
        );
    }
    Ok(())
}
