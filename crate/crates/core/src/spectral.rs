//! Node grids and trigonometric differentiation matrices.
//!
//! A grid of `N = 2n + 1` distinct phases in `(-π, π]` supports a unique
//! trigonometric interpolant of degree `n`. The differentiation matrix maps
//! node samples of such an interpolant to node samples of its derivative, so
//! it is exact on every trigonometric polynomial of degree at most `n`.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Wrap a phase into the canonical interval `(-π, π]`.
pub fn wrap_phase(t: f64) -> f64 {
    let r = (t + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        PI
    } else {
        r
    }
}

fn check_odd(n: usize) -> Result<()> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "grid size must be an odd number of points N >= 3, got {n}"
        )));
    }
    Ok(())
}

/// A set of distinct phase nodes in `(-π, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGrid {
    nodes: Vec<f64>,
    equispaced: bool,
}

impl NodeGrid {
    /// The `N` equidistant nodes `t_j = -π + 2πj/N`, `j = 1..=N`.
    pub fn equispaced(n: usize) -> Result<Self> {
        check_odd(n)?;
        let mut nodes: Vec<f64> = (1..=n)
            .map(|j| -PI + TAU * j as f64 / n as f64)
            .collect();
        nodes[n - 1] = PI;
        Ok(Self {
            nodes,
            equispaced: true,
        })
    }

    /// An arbitrary grid. Nodes must lie in `(-π, π]` and be pairwise distinct.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least one node".into()));
        }
        if let Some(t) = nodes.iter().find(|t| !(**t > -PI && **t <= PI)) {
            return Err(Error::InvalidArgument(format!(
                "node {t} lies outside (-pi, pi]"
            )));
        }
        for (j, a) in nodes.iter().enumerate() {
            for (k, b) in nodes.iter().enumerate().skip(j + 1) {
                if a == b {
                    return Err(Error::DegenerateGrid {
                        first: j,
                        second: k,
                    });
                }
            }
        }
        Ok(Self {
            nodes,
            equispaced: false,
        })
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Highest trigonometric degree `n = (N - 1) / 2` differentiated exactly.
    pub fn max_exact_degree(&self) -> usize {
        (self.nodes.len() - 1) / 2
    }

    pub fn is_equispaced(&self) -> bool {
        self.equispaced
    }

    /// Half-angle `(t_j - t_k) / 2` as `(x, sign)` with
    /// `sin((t_j - t_k)/2) = sign · sin(x)` and equal cotangents.
    ///
    /// On equispaced grids `x = πd/N` is built from the index difference `d`
    /// reduced to `|d| <= (N-1)/2` (a shift by `π` flips the sine), so it does
    /// not inherit rounding from the stored nodes.
    pub(crate) fn half_angle(&self, j: usize, k: usize) -> (f64, f64) {
        if !self.equispaced {
            return ((self.nodes[j] - self.nodes[k]) / 2.0, 1.0);
        }
        let n = self.nodes.len() as i64;
        let mut d = j as i64 - k as i64;
        let mut sign = 1.0;
        if d > n / 2 {
            d -= n;
            sign = -1.0;
        } else if d < -(n / 2) {
            d += n;
            sign = -1.0;
        }
        (PI * d as f64 / n as f64, sign)
    }
}

/// Which construction produced a [`DiffMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Equispaced,
    General,
}

/// Dense `N x N` differentiation matrix tied to the grid it was built on.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffMatrix {
    entries: DMatrix<f64>,
    kind: MatrixKind,
    grid: NodeGrid,
}

impl DiffMatrix {
    /// Closed form on equispaced nodes:
    /// `D_jk = (-1)^(j+k) / (2 sin(π(j-k)/N))` off the diagonal, zero on it.
    pub fn equispaced(n: usize) -> Result<Self> {
        let grid = NodeGrid::equispaced(n)?;
        let entries = DMatrix::from_fn(n, n, |j, k| {
            if j == k {
                0.0
            } else {
                let parity = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
                let (x, sign) = grid.half_angle(j, k);
                parity / (2.0 * sign * x.sin())
            }
        });
        Ok(Self {
            entries,
            kind: MatrixKind::Equispaced,
            grid,
        })
    }

    /// General-node construction from half-angle cotangents and the `τ` weights.
    pub fn general(grid: &NodeGrid) -> Result<Self> {
        check_odd(grid.size())?;
        let tau = scaled_tau(grid)?;
        let n = grid.size();
        let entries = DMatrix::from_fn(n, n, |j, k| {
            if j == k {
                (0..n)
                    .filter(|&l| l != j)
                    .map(|l| 0.5 / grid.half_angle(j, l).0.tan())
                    .sum()
            } else {
                let (x, sign) = grid.half_angle(j, k);
                tau[j] / (2.0 * tau[k]) / (sign * x.sin())
            }
        });
        Ok(Self {
            entries,
            kind: MatrixKind::General,
            grid: grid.clone(),
        })
    }

    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn grid(&self) -> &NodeGrid {
        &self.grid
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[(j, k)]
    }

    /// `D x` for a single node vector.
    ///
    /// Evaluated as `Σ_{k≠j} D_jk (x_k − x_j)`, which relies on the rows of `D`
    /// summing to zero and makes constants map to exactly zero.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.order();
        if x.len() != n {
            return Err(Error::Shape {
                expected: n,
                actual: x.len(),
            });
        }
        Ok((0..n)
            .map(|j| {
                (0..n)
                    .filter(|&k| k != j)
                    .map(|k| self.entries[(j, k)] * (x[k] - x[j]))
                    .sum()
            })
            .collect())
    }

    /// The linear map actually applied by [`DiffMatrix::mul_vec`]: `D` with
    /// each diagonal entry replaced by minus its off-diagonal row sum.
    pub fn operator(&self) -> DMatrix<f64> {
        let n = self.order();
        let mut op = self.entries.clone();
        for j in 0..n {
            op[(j, j)] = -(0..n)
                .filter(|&k| k != j)
                .map(|k| self.entries[(j, k)])
                .sum::<f64>();
        }
        op
    }

    /// `D^k x` by `k` successive products; `k = 0` returns `x`.
    pub fn apply(&self, x: &[f64], k: usize) -> Result<Vec<f64>> {
        let mut out = x.to_vec();
        if x.len() != self.order() {
            return Err(Error::Shape {
                expected: self.order(),
                actual: x.len(),
            });
        }
        for _ in 0..k {
            out = self.mul_vec(&out)?;
        }
        Ok(out)
    }
}

/// Equispaced node grid, see [`NodeGrid::equispaced`].
pub fn equispaced_nodes(n: usize) -> Result<NodeGrid> {
    NodeGrid::equispaced(n)
}

/// Equispaced differentiation matrix, see [`DiffMatrix::equispaced`].
pub fn diff_matrix_equispaced(n: usize) -> Result<DiffMatrix> {
    DiffMatrix::equispaced(n)
}

/// General-node differentiation matrix, see [`DiffMatrix::general`].
pub fn diff_matrix_general(grid: &NodeGrid) -> Result<DiffMatrix> {
    DiffMatrix::general(grid)
}

/// Derivative of `∏_l sin((t - t_l)/2)` at each node.
///
/// Only the product-rule term that differentiates the vanishing factor
/// survives, giving `τ_j = ½ ∏_{l≠j} sin((t_j - t_l)/2)`.
pub fn tau_weights(grid: &NodeGrid) -> Result<Vec<f64>> {
    let scale = 0.5 * 2f64.powi(1 - grid.size() as i32);
    Ok(scaled_tau(grid)?.into_iter().map(|t| t * scale).collect())
}

/// `∏_{l≠j} 2 sin((t_j - t_l)/2)`, i.e. `τ_j` times `2^N`. The factor keeps
/// the product near `N` instead of underflowing, and cancels in `τ_j / τ_k`.
/// Products are compensated with an fma error term.
fn scaled_tau(grid: &NodeGrid) -> Result<Vec<f64>> {
    let n = grid.size();
    let mut tau = Vec::with_capacity(n);
    for j in 0..n {
        let (mut prod, mut err) = (1.0f64, 0.0f64);
        for l in 0..n {
            if l == j {
                continue;
            }
            let (x, sign) = grid.half_angle(j, l);
            let s = 2.0 * sign * x.sin();
            if s == 0.0 {
                return Err(Error::DegenerateGrid {
                    first: j.min(l),
                    second: j.max(l),
                });
            }
            let p = prod * s;
            err = err * s + prod.mul_add(s, -p);
            prod = p;
        }
        tau.push(prod + err);
    }
    Ok(tau)
}

/// `D^k x`, see [`DiffMatrix::apply`].
pub fn apply_derivative(d: &DiffMatrix, x: &[f64], k: usize) -> Result<Vec<f64>> {
    d.apply(x, k)
}

/// Odd-N periodic Dirichlet kernel centred on a node, `d = t - t_j`.
fn dirichlet(n: usize, d: f64) -> f64 {
    let half = (d / 2.0).sin();
    if half.abs() < 1e-15 {
        // d is a multiple of 2π; for odd N the limit is 1 there.
        return 1.0;
    }
    (n as f64 * d / 2.0).sin() / (n as f64 * half)
}

/// Evaluate the degree-`n` trigonometric interpolant of node data at phase `t`.
///
/// Requires an equispaced grid. At a node the stored value is returned as is.
pub fn trig_interpolate(grid: &NodeGrid, x: &[f64], t: f64) -> Result<f64> {
    let n = grid.size();
    if x.len() != n {
        return Err(Error::Shape {
            expected: n,
            actual: x.len(),
        });
    }
    if !grid.is_equispaced() {
        return Err(Error::InvalidArgument(
            "trigonometric interpolation needs an equispaced grid".into(),
        ));
    }
    let t = wrap_phase(t);
    let nodes = grid.nodes();
    if let Some(j) = nodes
        .iter()
        .position(|tj| wrap_phase(t - tj).abs() <= 4.0 * f64::EPSILON * PI)
    {
        return Ok(x[j]);
    }
    Ok(nodes
        .iter()
        .zip(x)
        .map(|(tj, xj)| xj * dirichlet(n, t - tj))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn three_nodes() {
        let g = equispaced_nodes(3).unwrap();
        let expect = [-PI / 3.0, PI / 3.0, PI];
        assert!(max_abs_diff(g.nodes(), &expect) < 1e-15);
        assert_eq!(g.max_exact_degree(), 1);
    }

    #[test]
    fn five_nodes_middle() {
        let g = equispaced_nodes(5).unwrap();
        assert!((g.nodes()[2] - PI / 5.0).abs() < 1e-15);
        assert_eq!(g.nodes()[4], PI);
    }

    #[test]
    fn even_or_small_sizes_rejected() {
        for n in [0, 1, 2, 4, 100] {
            assert!(matches!(
                equispaced_nodes(n),
                Err(Error::InvalidArgument(_))
            ));
            assert!(diff_matrix_equispaced(n).is_err());
        }
    }

    #[test]
    fn closed_form_row_n3() {
        let d = diff_matrix_equispaced(3).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert_eq!(d.get(0, 0), 0.0);
        assert!((d.get(0, 1) - r).abs() < 1e-15);
        assert!((d.get(0, 2) + r).abs() < 1e-15);
        for j in 0..3 {
            for k in 0..3 {
                assert_eq!(d.get(j, k), -d.get(k, j));
            }
        }
    }

    #[test]
    fn tau_examples() {
        let single = NodeGrid::from_nodes(vec![PI]).unwrap();
        assert_eq!(tau_weights(&single).unwrap(), vec![0.5]);

        let g = equispaced_nodes(3).unwrap();
        let tau = tau_weights(&g).unwrap();
        assert!((tau[0] - 3.0 / 8.0).abs() < 1e-15);
        assert!(tau.iter().all(|t| *t != 0.0));
    }

    #[test]
    fn duplicate_nodes_rejected() {
        let err = NodeGrid::from_nodes(vec![-1.0, 0.5, 0.5]).unwrap_err();
        assert_eq!(err, Error::DegenerateGrid { first: 1, second: 2 });
        assert!(NodeGrid::from_nodes(vec![-PI, 0.0, 1.0]).is_err());
    }

    #[test]
    fn general_matches_closed_form_n5() {
        let g = equispaced_nodes(5).unwrap();
        let a = diff_matrix_general(&g).unwrap();
        let b = diff_matrix_equispaced(5).unwrap();
        assert_eq!(a.kind(), MatrixKind::General);
        assert!((a.entries() - b.entries()).amax() <= 1e-12);
    }

    #[test]
    fn general_nonuniform_exact_on_degree_one() {
        let g = NodeGrid::from_nodes(vec![-2.0, 0.5, 3.0]).unwrap();
        let d = diff_matrix_general(&g).unwrap();
        let ones = d.mul_vec(&[1.0; 3]).unwrap();
        assert!(ones.iter().all(|v| v.abs() <= 1e-12));
        let s: Vec<f64> = g.nodes().iter().map(|t| t.sin()).collect();
        let c: Vec<f64> = g.nodes().iter().map(|t| t.cos()).collect();
        assert!(max_abs_diff(&d.mul_vec(&s).unwrap(), &c) <= 1e-10);
    }

    #[test]
    fn derivative_of_sine_n3() {
        let d = diff_matrix_equispaced(3).unwrap();
        let h = 3f64.sqrt() / 2.0;
        let x = [-h, h, 0.0];
        assert_eq!(d.apply(&x, 0).unwrap(), x.to_vec());
        let dx = d.apply(&x, 1).unwrap();
        assert!(max_abs_diff(&dx, &[0.5, 0.5, -1.0]) < 1e-15);
    }

    #[test]
    fn second_derivative_cos2t_n7() {
        let g = equispaced_nodes(7).unwrap();
        let d = diff_matrix_equispaced(7).unwrap();
        let x: Vec<f64> = g.nodes().iter().map(|t| (2.0 * t).cos()).collect();
        let want: Vec<f64> = g.nodes().iter().map(|t| -4.0 * (2.0 * t).cos()).collect();
        assert!(max_abs_diff(&d.apply(&x, 2).unwrap(), &want) < 1e-10);
    }

    #[test]
    fn shape_mismatch() {
        let d = diff_matrix_equispaced(5).unwrap();
        assert_eq!(
            d.apply(&[1.0; 4], 1).unwrap_err(),
            Error::Shape {
                expected: 5,
                actual: 4
            }
        );
    }

    #[test]
    fn interpolation_cases() {
        let g = equispaced_nodes(9).unwrap();
        let x: Vec<f64> = g.nodes().iter().map(|t| (3.0 * t).cos()).collect();
        for (j, tj) in g.nodes().iter().enumerate() {
            assert_eq!(trig_interpolate(&g, &x, *tj).unwrap(), x[j]);
        }
        for i in 0..50 {
            let t = -3.1 + 0.123 * i as f64;
            let v = trig_interpolate(&g, &x, t).unwrap();
            assert!((v - (3.0 * t).cos()).abs() < 1e-10);
            let c = trig_interpolate(&g, &[2.5; 9], t).unwrap();
            assert!((c - 2.5).abs() < 1e-12);
        }
        // periodic
        let a = trig_interpolate(&g, &x, 0.3).unwrap();
        let b = trig_interpolate(&g, &x, 0.3 + TAU).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn wrap_phase_canonical() {
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
        assert!((wrap_phase(2.0 * PI)).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI).abs() - PI).abs() < 1e-12);
        assert!((wrap_phase(-0.5) + 0.5).abs() < 1e-15);
    }
}
