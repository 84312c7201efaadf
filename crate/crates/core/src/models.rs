//! Test systems: the vertically driven pendulum, a diode commutation circuit
//! and a linear validation model with a closed-form steady state.

use std::f64::consts::{PI, TAU};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::wrap_phase;
use crate::system::{PeriodicSystem, VectorField};

pub const BOLTZMANN: f64 = 1.380649e-23;
pub const ELECTRON_CHARGE: f64 = 1.602177e-19;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be non-negative, got {v}"
        )))
    }
}

// ---------------------------------------------------------------------------
// Driven pendulum

/// Dimensionless parameters of `θ'' + aθ' + (1 + b cos ωτ) sin θ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    pub a: f64,
    pub b: f64,
    pub omega: f64,
}

impl PendulumParams {
    pub fn new(a: f64, b: f64, omega: f64) -> Result<Self> {
        let p = Self { a, b, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        non_negative("a", self.a)?;
        non_negative("b", self.b)?;
        positive("omega", self.omega)
    }
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            a: 0.1,
            b: 0.0,
            omega: 17.5,
        }
    }
}

/// Rod pendulum with a vertically driven pivot, in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalPendulum {
    pub mu: f64,
    pub length: f64,
    pub gravity: f64,
    pub amplitude: f64,
    pub omega: f64,
}

/// `a = 2μ/√(lg)`, `b = Aω²/l`.
pub fn pendulum_from_physical(ph: &PhysicalPendulum) -> Result<PendulumParams> {
    positive("rod length", ph.length)?;
    positive("gravity", ph.gravity)?;
    Ok(PendulumParams {
        a: 2.0 * ph.mu / (ph.length * ph.gravity).sqrt(),
        b: ph.amplitude * ph.omega * ph.omega / ph.length,
        omega: ph.omega,
    })
}

/// `(sin θ, cos θ)` with `θ` reduced against the floating-point `π`, so that
/// `θ = kπ` (in particular the inverted state) is an exact equilibrium.
fn sin_cos_reduced(theta: f64) -> (f64, f64) {
    let k = (theta / PI).round();
    let r = (-k).mul_add(PI, theta);
    let (s, c) = r.sin_cos();
    if k.rem_euclid(2.0) == 0.0 {
        (s, c)
    } else {
        (-s, -c)
    }
}

/// State `(θ, dθ/dτ)`; `f₁ = v`, `f₂ = −a v − (1 + b cos t) sin θ`.
#[derive(Debug, Clone)]
pub struct PendulumField {
    a: f64,
    b: f64,
}

impl VectorField for PendulumField {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        out[0] = x[1];
        out[1] = -self.a * x[1] - (1.0 + self.b * t.cos()) * sin_cos_reduced(x[0]).0;
        Ok(())
    }

    fn has_jacobian(&self) -> bool {
        true
    }

    fn jacobian(&self, x: &[f64], t: f64, jac: &mut [f64]) -> Result<()> {
        jac[0] = 0.0;
        jac[1] = 1.0;
        jac[2] = -(1.0 + self.b * t.cos()) * sin_cos_reduced(x[0]).1;
        jac[3] = -self.a;
        Ok(())
    }
}

pub fn pendulum_system(p: &PendulumParams) -> Result<PeriodicSystem> {
    p.validate()?;
    PeriodicSystem::new(Arc::new(PendulumField { a: p.a, b: p.b }), p.omega)
}

// ---------------------------------------------------------------------------
// Commutation circuit

/// Component values of the rectifier-filter circuit driven by a square wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CircuitParams {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub c1: f64,
    pub c2: f64,
    pub l: f64,
    pub i_s: f64,
    pub eta: f64,
    pub t_abs: f64,
    pub a_m: f64,
    pub t_period: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        Self {
            r1: 0.0149,
            r2: 0.15,
            r3: 0.2,
            r4: 2.0,
            c1: 470.0e-6,
            c2: 20.0e-6,
            l: 20.0e-6,
            i_s: 1e-8,
            eta: 0.8953,
            t_abs: 300.0,
            a_m: 5.6,
            t_period: 1e-5,
        }
    }
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        positive("R1", self.r1)?;
        positive("R2", self.r2)?;
        positive("R3", self.r3)?;
        positive("R4", self.r4)?;
        positive("C1", self.c1)?;
        positive("C2", self.c2)?;
        positive("L", self.l)?;
        positive("i_s", self.i_s)?;
        positive("eta", self.eta)?;
        positive("T_abs", self.t_abs)?;
        positive("T_period", self.t_period)?;
        if !self.a_m.is_finite() {
            return Err(Error::InvalidArgument("A_m must be finite".into()));
        }
        Ok(())
    }

    /// `V_T = k_B T / q`.
    pub fn thermal_voltage(&self) -> f64 {
        BOLTZMANN * self.t_abs / ELECTRON_CHARGE
    }

    pub fn omega(&self) -> f64 {
        TAU / self.t_period
    }

    /// Voltage drop `i_s R₁ (exp(V/(ηV_T)) − 1)` of the diode current on `R₁`.
    fn diode_drop(&self, v: f64) -> f64 {
        self.i_s * self.r1 * (v / (self.eta * self.thermal_voltage())).exp_m1()
    }
}

/// `A_m·sgn(t)` on the canonical phase interval, with `sgn(0) = sgn(π) = +1`.
pub fn square_wave(phase: f64, a_m: f64) -> f64 {
    if wrap_phase(phase) >= 0.0 {
        a_m
    } else {
        -a_m
    }
}

/// `g(V_d)`, whose unique root is the diode voltage.
///
/// Obtained by eliminating `ẋ₁` between the first circuit equation and the
/// definition `V_d = V_s − C₁(R₁+R₂)ẋ₁ − x₁ − R₁x₃`.
pub fn diode_residual(vd: f64, x1: f64, x3: f64, vs: f64, p: &CircuitParams) -> f64 {
    (p.r1 + p.r2) * (vs - x1 - vd - p.diode_drop(vd)) - p.r2 * (vs - x1 - p.r1 * x3 - vd)
}

/// Acceptance threshold on `|g(V_d)|`.
pub fn diode_tolerance(vs: f64, p: &CircuitParams) -> f64 {
    1e-13 * (p.r1 + p.r2) * vs.abs().max(1.0)
}

/// Solve `g(V_d) = 0` by Newton's method safeguarded with bisection.
///
/// `g` is strictly decreasing and `g(0) = R₁·V_lin` where
/// `V_lin = (V_s − x₁) + R₂x₃` is the root without the exponential term, so
/// the root always lies between 0 and `V_lin`.
pub fn diode_voltage(x1: f64, x3: f64, vs: f64, p: &CircuitParams) -> Result<f64> {
    let v_lin = (vs - x1) + p.r2 * x3;
    if !v_lin.is_finite() {
        return Err(Error::DiodeSolve(format!(
            "non-finite operating point x1={x1}, x3={x3}"
        )));
    }
    let tol = diode_tolerance(vs, p);
    let nvt = p.eta * p.thermal_voltage();
    let (mut lo, mut hi) = (v_lin.min(0.0), v_lin.max(0.0));
    let mut v = if v_lin > 0.0 {
        // exponential branch alone gives an upper bound
        let c = (p.r1 + p.r2) * p.i_s;
        v_lin.min(nvt * (v_lin / c).ln_1p())
    } else {
        v_lin
    };
    for _ in 0..200 {
        let g = diode_residual(v, x1, x3, vs, p);
        if g.abs() <= tol {
            return Ok(v);
        }
        if g > 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        let dg = -p.r1 - (p.r1 + p.r2) * p.i_s * p.r1 * (v / nvt).exp() / nvt;
        let newton = v - g / dg;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == v || hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
        v = next;
    }
    let g = diode_residual(v, x1, x3, vs, p);
    if g.abs() <= tol {
        Ok(v)
    } else {
        Err(Error::DiodeSolve(format!(
            "|g| = {:e} above tolerance {tol:e} at x1={x1}, x3={x3}, vs={vs}",
            g.abs()
        )))
    }
}

/// Counts diode solves and records the worst `|g|/tolerance` ratio seen.
#[derive(Debug, Default)]
pub struct DiodeMonitor {
    evaluations: AtomicU64,
    worst_ratio_bits: AtomicU64,
}

impl DiodeMonitor {
    fn record(&self, ratio: f64) {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let _ = self
            .worst_ratio_bits
            .fetch_update(Ordering::Relaxed, Ordering::Relaxed, |bits| {
                (ratio > f64::from_bits(bits)).then_some(ratio.to_bits())
            });
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn worst_ratio(&self) -> f64 {
        f64::from_bits(self.worst_ratio_bits.load(Ordering::Relaxed))
    }
}

/// State `(V₁, V₂, i_L)`. Derivatives are in original time (seconds).
#[derive(Debug)]
pub struct CircuitField {
    params: CircuitParams,
    monitor: DiodeMonitor,
}

impl CircuitField {
    pub fn new(params: CircuitParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            monitor: DiodeMonitor::default(),
        })
    }

    pub fn params(&self) -> &CircuitParams {
        &self.params
    }

    pub fn monitor(&self) -> &DiodeMonitor {
        &self.monitor
    }
}

impl VectorField for CircuitField {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, x: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        let p = &self.params;
        let vs = square_wave(t, p.a_m);
        let vd = diode_voltage(x[0], x[2], vs, p)?;
        self.monitor
            .record(diode_residual(vd, x[0], x[2], vs, p).abs() / diode_tolerance(vs, p));
        let r34 = p.r3 + p.r4;
        out[0] = (vs - x[0] - p.r1 * x[2] - vd) / (p.c1 * (p.r1 + p.r2));
        out[1] = (-x[1] + p.r4 * x[2]) / (p.c2 * r34);
        out[2] = (vs - p.r4 / r34 * x[1] - p.r3 * p.r4 / r34 * x[2] - vd - p.diode_drop(vd)) / p.l;
        Ok(())
    }
}

pub fn circuit_system(p: &CircuitParams) -> Result<PeriodicSystem> {
    circuit_system_from(Arc::new(CircuitField::new(*p)?))
}

/// Circuit system sharing a caller-held field, e.g. to read its [`DiodeMonitor`].
pub fn circuit_system_from(field: Arc<CircuitField>) -> Result<PeriodicSystem> {
    let omega = field.params.omega();
    PeriodicSystem::new(field, omega)
}

/// Diode current `i_d = x₃ + C₁ẋ₁` and load voltage `V₀ = C₂R₃ẋ₂ + x₂`.
///
/// `xdot` is the derivative in original time.
pub fn circuit_outputs(x: &[f64], xdot: &[f64], p: &CircuitParams) -> (f64, f64) {
    (x[2] + p.c1 * xdot[0], p.c2 * p.r3 * xdot[1] + x[1])
}

// ---------------------------------------------------------------------------
// Linear validation model

/// `ẋ = −x + p cos t`, `ω = 1`; steady state `p (cos t + sin t) / 2`.
#[derive(Debug, Clone)]
pub struct LinearField {
    amplitude: f64,
}

impl VectorField for LinearField {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        out[0] = -x[0] + self.amplitude * t.cos();
        Ok(())
    }

    fn has_jacobian(&self) -> bool {
        true
    }

    fn jacobian(&self, _x: &[f64], _t: f64, jac: &mut [f64]) -> Result<()> {
        jac[0] = -1.0;
        Ok(())
    }
}

pub fn linear_system(amplitude: f64) -> Result<PeriodicSystem> {
    if !amplitude.is_finite() {
        return Err(Error::InvalidArgument("amplitude must be finite".into()));
    }
    PeriodicSystem::new(Arc::new(LinearField { amplitude }), 1.0)
}

/// Closed-form steady state of [`linear_system`].
pub fn linear_steady_state(amplitude: f64, t: f64) -> f64 {
    amplitude * (t.cos() + t.sin()) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pendulum_equilibria_and_substitution() {
        let p = PendulumParams::new(0.1, 2.0, 17.5).unwrap();
        let sys = pendulum_system(&p).unwrap();
        for t in [-2.0, 0.0, 1.3, PI] {
            let f = sys.rhs(&[PI, 0.0], t).unwrap();
            assert_eq!(f, vec![0.0, 0.0]);
            assert_eq!(sys.rhs(&[0.0, 0.0], t).unwrap(), vec![0.0, 0.0]);
        }
        let f = sys.rhs(&[PI / 2.0, 1.0], 0.0).unwrap();
        assert_eq!(f[0], 1.0);
        assert!((f[1] + 3.1).abs() < 1e-15);
    }

    #[test]
    fn pendulum_params_validation() {
        assert!(PendulumParams::new(0.1, 1.0, 0.0).is_err());
        assert!(PendulumParams::new(-0.1, 1.0, 1.0).is_err());
        assert!(PendulumParams::new(0.1, -1.0, 1.0).is_err());
    }

    #[test]
    fn physical_conversion() {
        let base = PhysicalPendulum {
            mu: 0.05,
            length: 1.0,
            gravity: 1.0,
            amplitude: 2.0 / (17.5 * 17.5),
            omega: 17.5,
        };
        let p = pendulum_from_physical(&base).unwrap();
        assert!((p.a - 0.1).abs() < 1e-15);
        assert!((p.b - 2.0).abs() < 1e-14);
        assert_eq!(p.omega, 17.5);

        let undamped = pendulum_from_physical(&PhysicalPendulum { mu: 0.0, ..base }).unwrap();
        assert_eq!(undamped.a, 0.0);
        let undriven =
            pendulum_from_physical(&PhysicalPendulum { amplitude: 0.0, ..base }).unwrap();
        assert_eq!(undriven.b, 0.0);
        assert!(pendulum_from_physical(&PhysicalPendulum { length: 0.0, ..base }).is_err());
        assert!(pendulum_from_physical(&PhysicalPendulum { gravity: -1.0, ..base }).is_err());
    }

    #[test]
    fn reduced_sine_matches_std() {
        for i in -400..400 {
            let th = 0.0371 * i as f64;
            let (s, c) = sin_cos_reduced(th);
            assert!((s - th.sin()).abs() < 1e-15 && (c - th.cos()).abs() < 1e-15);
        }
        assert_eq!(sin_cos_reduced(PI).0, 0.0);
        assert_eq!(sin_cos_reduced(2.0 * PI - PI).0, 0.0);
        assert_eq!(sin_cos_reduced(PI).1, -1.0);
    }

    #[test]
    fn square_wave_halves() {
        assert_eq!(square_wave(PI / 2.0, 5.6), 5.6);
        assert_eq!(square_wave(-PI / 2.0, 5.6), -5.6);
        assert_eq!(square_wave(PI, 5.6), 5.6);
        assert_eq!(square_wave(0.0, 5.6), 5.6);
        for i in 1..100 {
            let t = PI * i as f64 / 100.0;
            assert_eq!(square_wave(-t, 1.0), -square_wave(t, 1.0));
        }
    }

    #[test]
    fn circuit_defaults_and_thermal_voltage() {
        let p = CircuitParams::default();
        assert_eq!(p.a_m, 5.6);
        assert_eq!(p.t_period, 1e-5);
        assert_eq!(p.i_s, 1e-8);
        assert_eq!((p.r1, p.r2, p.r3, p.r4), (0.0149, 0.15, 0.2, 2.0));
        assert_eq!((p.c1, p.c2, p.l), (470e-6, 20e-6, 20e-6));
        assert_eq!((p.eta, p.t_abs), (0.8953, 300.0));
        let vt = p.thermal_voltage();
        assert!((vt - 0.025852).abs() < 5e-7);
        assert!((p.eta * vt - 0.023146).abs() < 1e-6);
    }

    #[test]
    fn diode_constructed_zero() {
        let p = CircuitParams::default();
        let vd = diode_voltage(5.75, 1.0, 5.6, &p).unwrap();
        assert!(vd.abs() <= 1e-12);
    }

    #[test]
    fn diode_small_saturation_limit() {
        let p = CircuitParams {
            i_s: 1e-30,
            ..CircuitParams::default()
        };
        for (x1, x3, vs) in [(1.0, 0.5, -5.6), (4.0, 2.0, 5.6), (-2.0, -1.0, 5.6)] {
            let vd = diode_voltage(x1, x3, vs, &p).unwrap();
            let lin = (vs - x1) + p.r2 * x3;
            if lin < 0.5 {
                assert!((vd - lin).abs() < 1e-9, "{vd} vs {lin}");
            }
        }
    }

    #[test]
    fn diode_residual_decreasing_and_solved() {
        let p = CircuitParams::default();
        for &(x1, x3, vs) in &[(0.0, 0.0, 5.6), (3.0, 1.5, 5.6), (4.5, 2.2, -5.6), (-1.0, 10.0, 5.6)] {
            let vd = diode_voltage(x1, x3, vs, &p).unwrap();
            assert!(diode_residual(vd, x1, x3, vs, &p).abs() <= diode_tolerance(vs, &p));
            for v in [-3.0, -0.5, 0.0, 0.3, 0.5, 0.7] {
                assert!(diode_residual(v + 0.1, x1, x3, vs, &p) < diode_residual(v, x1, x3, vs, &p));
            }
        }
    }

    #[test]
    fn circuit_rhs_second_line_vanishes() {
        let p = CircuitParams::default();
        let sys = circuit_system(&p).unwrap();
        for x3 in [-1.0, 0.0, 2.5] {
            let f = sys.rhs(&[1.0, p.r4 * x3, x3], 0.7).unwrap();
            assert_eq!(f[1], 0.0);
        }
        assert!((sys.omega() - TAU / 1e-5).abs() < 1e-6);
    }

    #[test]
    fn diode_definition_consistent_with_rhs() {
        let p = CircuitParams::default();
        let field = CircuitField::new(p).unwrap();
        let mut f = [0.0; 3];
        for &(x, t) in &[([1.0, 2.0, 0.5], 1.0), ([4.0, 4.2, 2.0], 0.3), ([5.0, 4.0, 2.0], -1.0)] {
            field.eval(&x, t, &mut f).unwrap();
            let vs = square_wave(t, p.a_m);
            let vd = diode_voltage(x[0], x[2], vs, &p).unwrap();
            let from_def = vs - p.c1 * (p.r1 + p.r2) * f[0] - x[0] - p.r1 * x[2];
            assert!((from_def - vd).abs() < 1e-10);
        }
        assert_eq!(field.monitor().evaluations(), 3);
        assert!(field.monitor().worst_ratio() <= 1.0);
    }

    #[test]
    fn outputs() {
        let p = CircuitParams::default();
        assert_eq!(circuit_outputs(&[1.0, 2.0, 3.0], &[0.0; 3], &p), (3.0, 2.0));
        let q = CircuitParams { c1: 0.0, ..p };
        assert_eq!(circuit_outputs(&[1.0, 2.0, 3.0], &[7.0, 0.0, 0.0], &q).0, 3.0);
    }

    #[test]
    fn linear_model() {
        assert_eq!(linear_steady_state(0.0, 1.2), 0.0);
        assert!((linear_steady_state(1.0, 0.0) - 0.5).abs() < 1e-16);
        let peak = (0..10_000)
            .map(|i| linear_steady_state(2.0, TAU * i as f64 / 10_000.0))
            .fold(f64::MIN, f64::max);
        assert!((peak - 2f64.sqrt()).abs() < 1e-6);
        let sys = linear_system(1.0).unwrap();
        assert_eq!(sys.omega(), 1.0);
        assert_eq!(sys.rhs(&[0.5], 0.0).unwrap(), vec![0.5]);
    }
}
