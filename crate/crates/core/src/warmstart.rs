//! Initial guesses for Newton: analytic seeds and fixed-step RK4 transients.
//!
//! The transient integrator is independent of the collocation path and
//! doubles as the reference solution when checking converged cycles.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::spectral::{wrap_phase, NodeGrid};
use crate::system::{FlatState, PeriodicSystem};

/// Transient cycles used for pendulum warm starts.
pub const PENDULUM_WARMUP_CYCLES: usize = 20;
/// Transient cycles used for circuit warm starts.
pub const CIRCUIT_WARMUP_CYCLES: usize = 150;

/// Stage offsets at the step ends are pulled this far inside the step, so a
/// forcing discontinuity on a step boundary is seen from the correct side.
const EDGE_OFFSET: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct TransientConfig {
    pub cycles: usize,
    pub steps_per_cycle: usize,
    pub initial_state: Vec<f64>,
}

impl TransientConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.cycles == 0 {
            return Err(Error::InvalidArgument("cycles must be >= 1".into()));
        }
        if self.steps_per_cycle < 8 {
            return Err(Error::InvalidArgument("steps_per_cycle must be >= 8".into()));
        }
        if self.initial_state.len() != dim {
            return Err(Error::Shape {
                expected: dim,
                actual: self.initial_state.len(),
            });
        }
        Ok(())
    }
}

/// RK4 trajectory: times in original units and the state after each step.
#[derive(Debug, Clone)]
pub struct Transient {
    pub times: Vec<f64>,
    states: Vec<f64>,
    dim: usize,
    steps_per_cycle: usize,
}

impl Transient {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// State at response phase `u ∈ [-π, π]` of the last cycle, linearly
    /// interpolated between steps.
    pub fn final_cycle_at(&self, u: f64) -> Vec<f64> {
        let k = self.steps_per_cycle;
        let start = self.len() - 1 - k;
        let pos = ((u + PI) / TAU * k as f64).clamp(0.0, k as f64);
        let i = (pos.floor() as usize).min(k - 1);
        let frac = pos - i as f64;
        let (a, b) = (self.state(start + i), self.state(start + i + 1));
        a.iter().zip(b).map(|(x, y)| x + frac * (y - x)).collect()
    }

    /// Last cycle sampled on the grid phases, as a collocation guess.
    pub fn sample_final_cycle(&self, grid: &NodeGrid) -> FlatState {
        let n = grid.size();
        let mut x = FlatState::zeros(self.dim, n);
        for (j, u) in grid.nodes().iter().enumerate() {
            let s = self.final_cycle_at(*u);
            for (k, v) in s.into_iter().enumerate() {
                x.as_mut_slice()[k * n + j] = v;
            }
        }
        x
    }
}

/// Classical fixed-step RK4 on `ẋ = f(x, ωτ)` in original time.
///
/// Integration starts at response phase `-π`, i.e. `τ = -P/2` with
/// `P = 2πs/ω`, and runs `cycles` response periods.
pub fn rk4_transient(system: &PeriodicSystem, cfg: &TransientConfig) -> Result<Transient> {
    let m = system.dim();
    cfg.validate(m)?;
    let k = cfg.steps_per_cycle;
    let s = system.subharmonic() as f64;
    let period = system.period();
    let h = period / k as f64;
    let field = system.field();
    let phase = |i: usize, c: f64| wrap_phase(s * (-PI + TAU * (i as f64 + c) / k as f64));

    let total = cfg.cycles * k;
    let mut times = Vec::with_capacity(total + 1);
    let mut states = Vec::with_capacity((total + 1) * m);
    let mut x = cfg.initial_state.clone();
    times.push(-period / 2.0);
    states.extend_from_slice(&x);

    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut tmp = vec![0.0; m];
    for step in 0..total {
        let i = step % k;
        let eval = |x: &[f64], c: f64, out: &mut [f64]| {
            field
                .eval(x, phase(i, c), out)
                .map_err(|_| Error::Divergence { step })
        };
        eval(&x, EDGE_OFFSET, &mut k1)?;
        for q in 0..m {
            tmp[q] = x[q] + 0.5 * h * k1[q];
        }
        eval(&tmp, 0.5, &mut k2)?;
        for q in 0..m {
            tmp[q] = x[q] + 0.5 * h * k2[q];
        }
        eval(&tmp, 0.5, &mut k3)?;
        for q in 0..m {
            tmp[q] = x[q] + h * k3[q];
        }
        eval(&tmp, 1.0 - EDGE_OFFSET, &mut k4)?;
        for q in 0..m {
            x[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step });
        }
        times.push(-period / 2.0 + (step + 1) as f64 * h);
        states.extend_from_slice(&x);
    }
    Ok(Transient {
        times,
        states,
        dim: m,
        steps_per_cycle: k,
    })
}

/// Run a transient long enough to settle and sample its last cycle on `grid`.
///
/// Uses `8·N` steps per cycle so linear dense output stays accurate.
pub fn rk4_guess(
    system: &PeriodicSystem,
    grid: &NodeGrid,
    cycles: usize,
    initial_state: Vec<f64>,
) -> Result<FlatState> {
    let cfg = TransientConfig {
        cycles,
        steps_per_cycle: 8 * grid.size(),
        initial_state,
    };
    Ok(rk4_transient(system, &cfg)?.sample_final_cycle(grid))
}

/// Pendulum seed `θ_j = π + ε sin(h t_j)`, `v_j = ε ω h cos(h t_j) / s`.
///
/// `v` is the original-time velocity matching the sinusoidal `θ`, given the
/// response phase runs `s` times slower than the forcing phase.
pub fn guess_near_pi(
    n: usize,
    epsilon: f64,
    harmonic: usize,
    omega: f64,
    subharmonic: usize,
) -> Result<FlatState> {
    if harmonic == 0 || subharmonic == 0 {
        return Err(Error::InvalidArgument(
            "harmonic and subharmonic must be >= 1".into(),
        ));
    }
    let grid = NodeGrid::equispaced(n)?;
    let h = harmonic as f64;
    let mut values = Vec::with_capacity(2 * n);
    values.extend(grid.nodes().iter().map(|t| PI + epsilon * (h * t).sin()));
    values.extend(
        grid.nodes()
            .iter()
            .map(|t| epsilon * omega * h * (h * t).cos() / subharmonic as f64),
    );
    FlatState::new(values, 2, n)
}
