//! Periodic systems in normalized form and the collocation residual.
//!
//! A system `ω ẋ = f(x, t)` with `f` 2π-periodic in `t` is sampled on an
//! equispaced node grid; replacing `ẋ` by the differentiation matrix turns
//! the search for a periodic steady state into the algebraic system
//! `ω (1_m ⊗ D) X − F(X) = 0`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::{wrap_phase, DiffMatrix, NodeGrid};

/// Right-hand side `f(x, t)` of a periodic system, 2π-periodic in `t`.
///
/// Implementations must be re-entrant: node evaluations may run in any order.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    /// Write `f(x, phase)` into `out`. The phase is canonical, in `(-π, π]`.
    fn eval(&self, x: &[f64], phase: f64, out: &mut [f64]) -> Result<()>;

    fn has_jacobian(&self) -> bool {
        false
    }

    /// Row-major `m x m` matrix `∂f/∂x`.
    fn jacobian(&self, _x: &[f64], _phase: f64, _jac: &mut [f64]) -> Result<()> {
        Err(Error::NoAnalyticJacobian)
    }
}

type RhsFn = dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync;

/// Vector field from a closure; handy for ad-hoc systems.
pub struct FnField {
    dim: usize,
    rhs: Box<RhsFn>,
}

impl FnField {
    pub fn new<F>(dim: usize, rhs: F) -> Self
    where
        F: Fn(&[f64], f64, &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            dim,
            rhs: Box::new(rhs),
        }
    }
}

impl VectorField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], phase: f64, out: &mut [f64]) -> Result<()> {
        (self.rhs)(x, phase, out);
        Ok(())
    }
}

/// An `m`-component nonautonomous system `ω ẋ = f(x, t)`.
///
/// `subharmonic = s` looks for responses whose period is `s` forcing periods.
#[derive(Clone)]
pub struct PeriodicSystem {
    field: Arc<dyn VectorField>,
    omega: f64,
    subharmonic: usize,
}

impl fmt::Debug for PeriodicSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicSystem")
            .field("dim", &self.dim())
            .field("omega", &self.omega)
            .field("subharmonic", &self.subharmonic)
            .finish()
    }
}

impl PeriodicSystem {
    pub fn new(field: Arc<dyn VectorField>, omega: f64) -> Result<Self> {
        if field.dim() == 0 {
            return Err(Error::InvalidArgument("system dimension must be >= 1".into()));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "angular frequency must be positive, got {omega}"
            )));
        }
        Ok(Self {
            field,
            omega,
            subharmonic: 1,
        })
    }

    pub fn with_subharmonic(mut self, s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidArgument("subharmonic order must be >= 1".into()));
        }
        self.subharmonic = s;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn subharmonic(&self) -> usize {
        self.subharmonic
    }

    pub fn field(&self) -> &Arc<dyn VectorField> {
        &self.field
    }

    /// `f(x, phase)` with the phase wrapped into `(-π, π]` first.
    pub fn rhs(&self, x: &[f64], phase: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.field.eval(x, wrap_phase(phase), &mut out)?;
        Ok(out)
    }

    /// Response period in original time, `2πs/ω`.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU * self.subharmonic as f64 / self.omega
    }
}

/// All state values at all nodes, component-major: entry `k·N + j` holds
/// component `k` at node `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatState {
    values: Vec<f64>,
    dim: usize,
    nodes: usize,
}

impl FlatState {
    pub fn new(values: Vec<f64>, dim: usize, nodes: usize) -> Result<Self> {
        if values.len() != dim * nodes {
            return Err(Error::Shape {
                expected: dim * nodes,
                actual: values.len(),
            });
        }
        Ok(Self { values, dim, nodes })
    }

    pub fn zeros(dim: usize, nodes: usize) -> Self {
        Self {
            values: vec![0.0; dim * nodes],
            dim,
            nodes,
        }
    }

    /// Same value of each component at every node.
    pub fn constant(state: &[f64], nodes: usize) -> Self {
        let values = state
            .iter()
            .flat_map(|v| std::iter::repeat_n(*v, nodes))
            .collect();
        Self {
            values,
            dim: state.len(),
            nodes,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Node samples of component `k` (0-based).
    pub fn component(&self, k: usize) -> &[f64] {
        &self.values[k * self.nodes..(k + 1) * self.nodes]
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.values[k * self.nodes + j]
    }

    /// The `m`-vector of all components at node `j`.
    pub fn node_state(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|k| self.get(k, j)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Stack an `m x N` table (one row per component) into a [`FlatState`].
pub fn flatten(table: &[Vec<f64>]) -> Result<FlatState> {
    let dim = table.len();
    if dim == 0 {
        return Err(Error::Shape {
            expected: 1,
            actual: 0,
        });
    }
    let nodes = table[0].len();
    let mut values = Vec::with_capacity(dim * nodes);
    for row in table {
        if row.len() != nodes {
            return Err(Error::Shape {
                expected: nodes,
                actual: row.len(),
            });
        }
        values.extend_from_slice(row);
    }
    FlatState::new(values, dim, nodes)
}

/// Inverse of [`flatten`].
pub fn unflatten(x: &[f64], dim: usize, nodes: usize) -> Result<Vec<Vec<f64>>> {
    if x.len() != dim * nodes {
        return Err(Error::Shape {
            expected: dim * nodes,
            actual: x.len(),
        });
    }
    Ok(x.chunks(nodes.max(1)).map(|c| c.to_vec()).collect())
}

/// A periodic system discretized on a node grid.
#[derive(Debug, Clone)]
pub struct CollocationProblem {
    system: PeriodicSystem,
    d: DiffMatrix,
    omega_eff: f64,
    phases: Vec<f64>,
}

impl CollocationProblem {
    /// Equispaced grid with `n` nodes.
    pub fn new(system: PeriodicSystem, n: usize) -> Result<Self> {
        Ok(Self::with_matrix(system, DiffMatrix::equispaced(n)?))
    }

    pub fn with_matrix(system: PeriodicSystem, d: DiffMatrix) -> Self {
        let s = system.subharmonic() as f64;
        let phases = d
            .grid()
            .nodes()
            .iter()
            .map(|t| wrap_phase(s * t))
            .collect();
        let omega_eff = system.omega() / s;
        Self {
            system,
            d,
            omega_eff,
            phases,
        }
    }

    pub fn system(&self) -> &PeriodicSystem {
        &self.system
    }

    pub fn grid(&self) -> &NodeGrid {
        self.d.grid()
    }

    pub fn matrix(&self) -> &DiffMatrix {
        &self.d
    }

    pub fn omega_eff(&self) -> f64 {
        self.omega_eff
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn nodes(&self) -> usize {
        self.d.order()
    }

    /// Number of unknowns, `N·m`.
    pub fn size(&self) -> usize {
        self.dim() * self.nodes()
    }

    /// Forcing phase `s·t_j` (wrapped) seen by the right-hand side at node `j`.
    pub fn forcing_phases(&self) -> &[f64] {
        &self.phases
    }

    /// Original time `τ_j = s·t_j/ω` of node `j`.
    pub fn original_time(&self, j: usize) -> f64 {
        self.grid().nodes()[j] / self.omega_eff
    }

    fn check(&self, x: &FlatState) -> Result<()> {
        if x.len() != self.size() || x.dim() != self.dim() {
            return Err(Error::Shape {
                expected: self.size(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Stacked right-hand side `F(X)`.
    pub fn rhs_values(&self, x: &FlatState) -> Result<FlatState> {
        self.check(x)?;
        let (m, n) = (self.dim(), self.nodes());
        let field = self.system.field();
        let mut out = FlatState::zeros(m, n);
        let mut fj = vec![0.0; m];
        for j in 0..n {
            let xj = x.node_state(j);
            field
                .eval(&xj, self.phases[j], &mut fj)
                .map_err(|e| Error::NodeEvaluation {
                    node: j,
                    source: Box::new(e),
                })?;
            for (k, v) in fj.iter().enumerate() {
                out.values[k * n + j] = *v;
            }
        }
        Ok(out)
    }

    /// `ω_eff·(1_m ⊗ D) X`, the original-time derivative at the nodes.
    pub fn derivative(&self, x: &FlatState) -> Result<FlatState> {
        self.check(x)?;
        let (m, n) = (self.dim(), self.nodes());
        let mut values = Vec::with_capacity(m * n);
        for k in 0..m {
            let dk = self.d.mul_vec(x.component(k))?;
            values.extend(dk.into_iter().map(|v| self.omega_eff * v));
        }
        FlatState::new(values, m, n)
    }

    /// `R(X) = ω_eff·(1_m ⊗ D) X − F(X)`.
    pub fn residual(&self, x: &FlatState) -> Result<FlatState> {
        let f = self.rhs_values(x)?;
        let mut r = self.derivative(x)?;
        for (ri, fi) in r.values.iter_mut().zip(&f.values) {
            *ri -= fi;
        }
        Ok(r)
    }

    /// Residual Jacobian; analytic node blocks when the field supplies them.
    pub fn jacobian(&self, x: &FlatState) -> Result<DMatrix<f64>> {
        if self.system.field().has_jacobian() {
            self.assemble(x, false)
        } else {
            self.assemble(x, true)
        }
    }

    /// Residual Jacobian with node blocks from forward differences.
    pub fn jacobian_fd(&self, x: &FlatState) -> Result<DMatrix<f64>> {
        self.assemble(x, true)
    }

    fn assemble(&self, x: &FlatState, finite_diff: bool) -> Result<DMatrix<f64>> {
        self.check(x)?;
        let (m, n) = (self.dim(), self.nodes());
        let op = self.d.operator();
        let mut jac = DMatrix::zeros(m * n, m * n);
        for k in 0..m {
            for j in 0..n {
                for l in 0..n {
                    jac[(k * n + j, k * n + l)] = self.omega_eff * op[(j, l)];
                }
            }
        }
        let mut block = vec![0.0; m * m];
        for j in 0..n {
            let xj = x.node_state(j);
            let res = if finite_diff {
                self.fd_block(&xj, self.phases[j], &mut block)
            } else {
                self.system.field().jacobian(&xj, self.phases[j], &mut block)
            };
            res.map_err(|e| Error::NodeEvaluation {
                node: j,
                source: Box::new(e),
            })?;
            for k in 0..m {
                for kp in 0..m {
                    jac[(k * n + j, kp * n + j)] -= block[k * m + kp];
                }
            }
        }
        Ok(jac)
    }

    fn fd_block(&self, xj: &[f64], phase: f64, block: &mut [f64]) -> Result<()> {
        let m = xj.len();
        let field = self.system.field();
        let mut base = vec![0.0; m];
        field.eval(xj, phase, &mut base)?;
        let mut pert = xj.to_vec();
        let mut fp = vec![0.0; m];
        let sqrt_eps = f64::EPSILON.sqrt();
        for kp in 0..m {
            let x0 = xj[kp];
            let stepped = x0 + sqrt_eps * (1.0 + x0.abs());
            let h = stepped - x0;
            pert[kp] = stepped;
            field.eval(&pert, phase, &mut fp)?;
            pert[kp] = x0;
            for k in 0..m {
                block[k * m + kp] = (fp[k] - base[k]) / h;
            }
        }
        Ok(())
    }
}

/// Build a [`CollocationProblem`] on `n` equispaced nodes.
pub fn collocation_problem(system: PeriodicSystem, n: usize) -> Result<CollocationProblem> {
    CollocationProblem::new(system, n)
}

/// `R(X)`, see [`CollocationProblem::residual`].
pub fn residual(problem: &CollocationProblem, x: &FlatState) -> Result<FlatState> {
    problem.residual(x)
}

/// `∂R/∂X`, see [`CollocationProblem::jacobian`].
pub fn jacobian(problem: &CollocationProblem, x: &FlatState) -> Result<DMatrix<f64>> {
    problem.jacobian(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{linear_system, pendulum_system, PendulumParams};
    use std::f64::consts::PI;

    #[test]
    fn flatten_layout() {
        let t = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let x = flatten(&t).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(unflatten(x.as_slice(), 2, 3).unwrap(), t);
        assert_eq!(x.node_state(1), vec![2.0, 5.0]);

        let single = flatten(&[vec![7.0, 8.0, 9.0]]).unwrap();
        assert_eq!(single.as_slice(), &[7.0, 8.0, 9.0]);
    }

    #[test]
    fn flatten_rejects_ragged() {
        assert!(flatten(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(unflatten(&[1.0; 5], 2, 3).is_err());
    }

    #[test]
    fn pendulum_inverted_state_is_exact_root() {
        let p = PendulumParams::new(0.1, 5.0, 17.5).unwrap();
        let prob = CollocationProblem::new(pendulum_system(&p).unwrap(), 101).unwrap();
        let x = FlatState::constant(&[PI, 0.0], 101);
        let r = prob.residual(&x).unwrap();
        assert!(r.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_model_steady_state_n3() {
        let prob = CollocationProblem::new(linear_system(1.0).unwrap(), 3).unwrap();
        let vals: Vec<f64> = prob
            .grid()
            .nodes()
            .iter()
            .map(|t| (t.cos() + t.sin()) / 2.0)
            .collect();
        let x = FlatState::new(vals, 1, 3).unwrap();
        assert!(prob.residual(&x).unwrap().max_abs() <= 1e-12);

        let r0 = prob.residual(&FlatState::zeros(1, 3)).unwrap();
        for (r, t) in r0.as_slice().iter().zip(prob.grid().nodes()) {
            assert!((r + t.cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_jacobian_is_d_plus_identity() {
        let prob = CollocationProblem::new(linear_system(1.0).unwrap(), 5).unwrap();
        let j = prob.jacobian(&FlatState::zeros(1, 5)).unwrap();
        let want = prob.matrix().entries() + DMatrix::identity(5, 5);
        assert!((j - want).amax() < 1e-15);
    }

    #[test]
    fn state_independent_field_gives_pure_d() {
        let field = Arc::new(FnField::new(1, |_x, t, out| out[0] = t.sin()));
        let sys = PeriodicSystem::new(field, 2.0).unwrap();
        let prob = CollocationProblem::new(sys, 7).unwrap();
        let j = prob.jacobian(&FlatState::zeros(1, 7)).unwrap();
        let want = prob.matrix().operator() * 2.0;
        assert_eq!(j, want);
        assert!((prob.matrix().operator() - prob.matrix().entries()).amax() < 1e-13);
    }

    #[test]
    fn pendulum_jacobian_blocks_at_inverted_state() {
        let (a, b, n) = (0.1, 3.0, 5);
        let p = PendulumParams::new(a, b, 17.5).unwrap();
        let prob = CollocationProblem::new(pendulum_system(&p).unwrap(), n).unwrap();
        let j = prob.jacobian(&FlatState::constant(&[PI, 0.0], n)).unwrap();
        let w = prob.omega_eff();
        for (i, phi) in prob.forcing_phases().iter().enumerate() {
            let d = w * prob.matrix().operator()[(i, i)];
            assert!((j[(i, i)] - d).abs() < 1e-14);
            assert_eq!(j[(i, n + i)], -1.0);
            let p21 = 1.0 + b * phi.cos();
            assert!((j[(n + i, i)] + p21).abs() < 1e-12);
            assert!((j[(n + i, n + i)] - (d + a)).abs() < 1e-14);
        }
    }

    #[test]
    fn subharmonic_scales_frequency_and_phase() {
        let p = PendulumParams::new(0.1, 3.0, 17.5).unwrap();
        let sys = pendulum_system(&p).unwrap().with_subharmonic(2).unwrap();
        let prob = CollocationProblem::new(sys, 5).unwrap();
        assert_eq!(prob.omega_eff(), 17.5 / 2.0);
        for (phi, t) in prob.forcing_phases().iter().zip(prob.grid().nodes()) {
            assert!((phi - wrap_phase(2.0 * t)).abs() < 1e-15);
        }
        assert!(PeriodicSystem::new(Arc::new(FnField::new(1, |_, _, _| {})), 0.0).is_err());
    }

    #[test]
    fn node_failure_reports_index() {
        struct Failing;
        impl VectorField for Failing {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, x: &[f64], _t: f64, out: &mut [f64]) -> Result<()> {
                if x[0] > 1.0 {
                    return Err(Error::DiodeSolve("boom".into()));
                }
                out[0] = 0.0;
                Ok(())
            }
        }
        let sys = PeriodicSystem::new(Arc::new(Failing), 1.0).unwrap();
        let prob = CollocationProblem::new(sys, 3).unwrap();
        let x = FlatState::new(vec![0.0, 2.0, 0.0], 1, 3).unwrap();
        match prob.residual(&x).unwrap_err() {
            Error::NodeEvaluation { node, .. } => assert_eq!(node, 1),
            e => panic!("unexpected {e}"),
        }
    }
}
