//! Natural-parameter continuation and per-cycle extrema.

use crate::error::{Error, Result};
use crate::solver::{newton_solve, NewtonConfig, SolveResult};
use crate::spectral::{trig_interpolate, NodeGrid};
use crate::system::{CollocationProblem, FlatState};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub parameter_name: String,
    pub start: f64,
    pub end: f64,
    pub step: f64,
    pub adaptive: bool,
    pub min_step: f64,
}

impl SweepConfig {
    /// Adaptive sweep with `min_step = step / 64`.
    pub fn new(name: impl Into<String>, start: f64, end: f64, step: f64) -> Self {
        Self {
            parameter_name: name.into(),
            start,
            end,
            step,
            adaptive: true,
            min_step: step / 64.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.end.is_finite()) {
            return Err(Error::InvalidArgument("sweep bounds must be finite".into()));
        }
        if !(self.step > 0.0) {
            return Err(Error::InvalidArgument("sweep step must be positive".into()));
        }
        if !(self.min_step > 0.0 && self.min_step <= self.step) {
            return Err(Error::InvalidArgument(
                "min_step must lie in (0, step]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BranchStatus {
    Completed,
    /// Continuation could not get past `last_parameter` even at `min_step`.
    Truncated { last_parameter: f64, failed_at: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub parameter: f64,
    pub result: SolveResult,
}

/// Converged cycles along a monotone parameter path.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub parameter_name: String,
    pub points: Vec<BranchPoint>,
    pub provenance: String,
    pub status: BranchStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremaPoint {
    pub parameter: f64,
    pub component_index: usize,
    pub max_value: f64,
    pub min_value: f64,
}

impl Branch {
    /// Extrema of `component` at every branch point.
    pub fn extrema(
        &self,
        grid: &NodeGrid,
        component: usize,
        oversample: usize,
    ) -> Result<Vec<ExtremaPoint>> {
        self.points
            .iter()
            .map(|p| {
                let (max_value, min_value) =
                    extract_extrema(grid, &p.result.x, component, oversample)?;
                Ok(ExtremaPoint {
                    parameter: p.parameter,
                    component_index: component,
                    max_value,
                    min_value,
                })
            })
            .collect()
    }
}

/// Trace a branch from `x0`, warm-starting every solve from the previous one.
///
/// `family` builds the collocation problem at a parameter value. On a failed
/// solve an adaptive sweep halves its step down to `min_step`; past that the
/// branch is returned as [`BranchStatus::Truncated`].
pub fn sweep<F>(
    mut family: F,
    x0: &FlatState,
    cfg: &SweepConfig,
    newton_cfg: &NewtonConfig,
    provenance: impl Into<String>,
) -> Result<Branch>
where
    F: FnMut(f64) -> Result<CollocationProblem>,
{
    cfg.validate()?;
    let seed = newton_solve(&family(cfg.start)?, x0, newton_cfg)?;
    if !seed.converged {
        return Err(Error::BranchSeed {
            parameter: cfg.start,
            residual_norm: seed.residual_norm,
        });
    }
    let dir = if cfg.end >= cfg.start { 1.0 } else { -1.0 };
    let mut points = vec![BranchPoint {
        parameter: cfg.start,
        result: seed,
    }];
    let mut status = BranchStatus::Completed;
    let mut p = cfg.start;
    let mut h = cfg.step;

    while dir * (cfg.end - p) > 0.0 {
        let remaining = (cfg.end - p).abs();
        // land exactly on `end`, absorbing a final sliver below min_step
        let next = if h >= remaining || remaining - h < 1e-9 * cfg.step {
            cfg.end
        } else {
            p + dir * h
        };
        let last = &points.last().expect("branch has a seed").result.x;
        let attempt = family(next).and_then(|prob| newton_solve(&prob, last, newton_cfg));
        match attempt {
            Ok(res) if res.converged => {
                points.push(BranchPoint {
                    parameter: next,
                    result: res,
                });
                p = next;
                h = (2.0 * h).min(cfg.step);
            }
            _ => {
                if cfg.adaptive && h / 2.0 >= cfg.min_step {
                    h /= 2.0;
                } else {
                    status = BranchStatus::Truncated {
                        last_parameter: p,
                        failed_at: next,
                    };
                    break;
                }
            }
        }
    }

    Ok(Branch {
        parameter_name: cfg.parameter_name.clone(),
        points,
        provenance: provenance.into(),
        status,
    })
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// Max and min of the trigonometric interpolant of one solution component.
///
/// The interpolant is scanned on `oversample·N` phases; the best scan points
/// are then refined by golden-section search to a phase tolerance of 1e-10.
pub fn extract_extrema(
    grid: &NodeGrid,
    solution: &FlatState,
    component: usize,
    oversample: usize,
) -> Result<(f64, f64)> {
    if oversample < 4 {
        return Err(Error::InvalidArgument("oversample must be >= 4".into()));
    }
    if component >= solution.dim() {
        return Err(Error::Shape {
            expected: solution.dim(),
            actual: component + 1,
        });
    }
    if solution.nodes() != grid.size() {
        return Err(Error::Shape {
            expected: grid.size(),
            actual: solution.nodes(),
        });
    }
    let x = solution.component(component);
    if x.iter().all(|v| *v == x[0]) {
        return Ok((x[0], x[0]));
    }
    let interp = |t: f64| trig_interpolate(grid, x, t).unwrap_or(f64::NAN);
    let m = oversample * grid.size();
    let dt = std::f64::consts::TAU / m as f64;
    let samples: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let t = -std::f64::consts::PI + dt * (i + 1) as f64;
            (t, interp(t))
        })
        .collect();
    let (tmax, vmax) = samples
        .iter()
        .copied()
        .fold((0.0, f64::NEG_INFINITY), |a, s| if s.1 > a.1 { s } else { a });
    let (tmin, vmin) = samples
        .iter()
        .copied()
        .fold((0.0, f64::INFINITY), |a, s| if s.1 < a.1 { s } else { a });
    let (_, rmax) = golden_max(interp, tmax - dt, tmax + dt, 1e-10);
    let (_, rmin) = golden_max(|t| -interp(t), tmin - dt, tmin + dt, 1e-10);
    Ok((rmax.max(vmax), (-rmin).min(vmin)))
}
