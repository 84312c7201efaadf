//! Differentiate a trigonometric polynomial on equispaced and on irregular
//! nodes, then evaluate its interpolant between nodes.

use std::f64::consts::PI;

use limcycle::spectral::{trig_interpolate, DiffMatrix, NodeGrid};

fn f(t: f64) -> f64 {
    1.0 + 0.5 * t.cos() - 2.0 * (3.0 * t).sin()
}

fn df(t: f64) -> f64 {
    -0.5 * t.sin() - 6.0 * (3.0 * t).cos()
}

fn max_error(d: &DiffMatrix) -> limcycle::Result<f64> {
    let t = d.grid().nodes();
    let x: Vec<f64> = t.iter().map(|t| f(*t)).collect();
    let dx = d.mul_vec(&x)?;
    Ok(dx.iter().zip(t).map(|(v, t)| (v - df(*t)).abs()).fold(0.0, f64::max))
}

fn main() -> limcycle::Result<()> {
    // Degree 3 needs N >= 7.
    for n in [5, 7, 21] {
        let d = DiffMatrix::equispaced(n)?;
        println!("equispaced N = {n:2}: max |Dx - x'| = {:.2e}", max_error(&d)?);
    }

    let irregular: Vec<f64> = (1..=9)
        .map(|j| -PI + 2.0 * PI * j as f64 / 9.0 + 0.2 * (j as f64).sin())
        .map(|t: f64| t.min(PI))
        .collect();
    let grid = NodeGrid::from_nodes(irregular)?;
    let d = DiffMatrix::general(&grid)?;
    println!("irregular N =  9: max |Dx - x'| = {:.2e}", max_error(&d)?);

    let grid = NodeGrid::equispaced(7)?;
    let x: Vec<f64> = grid.nodes().iter().map(|t| f(*t)).collect();
    for t in [-2.5, 0.1, 1.0, 3.0] {
        println!("p({t:4}) = {:+.12} (exact {:+.12})", trig_interpolate(&grid, &x, t)?, f(t));
    }
    Ok(())
}
