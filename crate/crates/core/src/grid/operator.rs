use serde::{Deserialize, Serialize};

use super::{DerivativeScheme, GridState};
use crate::linalg::C64;

/// `c + Σ lᵢ xᵢ + Σ qᵢⱼ xᵢ xⱼ + Σ dᵢ ∂ᵢ` on a grid with one or two axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOperator {
    pub constant: C64,
    pub linear: Vec<C64>,
    /// Row-major `dims × dims`.
    pub quadratic: Vec<C64>,
    pub derivative: Vec<C64>,
}

impl GridOperator {
    pub fn zero(dims: usize) -> Self {
        let z = C64::new(0.0, 0.0);
        Self { constant: z, linear: vec![z; dims], quadratic: vec![z; dims * dims], derivative: vec![z; dims] }
    }

    pub fn identity(dims: usize) -> Self {
        Self { constant: C64::new(1.0, 0.0), ..Self::zero(dims) }
    }

    pub fn dims(&self) -> usize {
        self.linear.len()
    }

    /// Multiplication by the coordinate of `axis`.
    pub fn position(dims: usize, axis: usize) -> Self {
        let mut op = Self::zero(dims);
        op.linear[axis] = C64::new(1.0, 0.0);
        op
    }

    /// `−i·gamma·∂/∂x_axis`.
    pub fn conjugate(dims: usize, axis: usize, gamma: f64) -> Self {
        let mut op = Self::zero(dims);
        op.derivative[axis] = C64::new(0.0, -gamma);
        op
    }

    /// `Σ xᵢ·Xᵢ + Σ yᵢ·Yᵢ`.
    pub fn from_quadratures(x: &[C64], y: &[C64], gamma: f64) -> Self {
        let mut op = Self::zero(x.len());
        op.linear.copy_from_slice(x);
        for (d, c) in op.derivative.iter_mut().zip(y) {
            *d = c * C64::new(0.0, -gamma);
        }
        op
    }

    /// Linear-in-position operator times `x_axis` (derivative part must vanish).
    pub fn compose_position(&self, axis: usize) -> Self {
        assert!(self.derivative.iter().all(|d| d.norm() == 0.0), "only multiplicative operators compose here");
        assert!(self.quadratic.iter().all(|q| q.norm() == 0.0), "degree would exceed two");
        let d = self.dims();
        let mut op = Self::zero(d);
        op.linear[axis] = self.constant;
        for (i, l) in self.linear.iter().enumerate() {
            op.quadratic[i * d + axis] += l;
        }
        op
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            constant: self.constant * c,
            linear: self.linear.iter().map(|v| v * c).collect(),
            quadratic: self.quadratic.iter().map(|v| v * c).collect(),
            derivative: self.derivative.iter().map(|v| v * c).collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let add = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        Self {
            constant: self.constant + other.constant,
            linear: add(&self.linear, &other.linear),
            quadratic: add(&self.quadratic, &other.quadratic),
            derivative: add(&self.derivative, &other.derivative),
        }
    }

    /// `Σ λ_α·op_α`.
    pub fn combination(ops: &[GridOperator], lambda: &[C64]) -> Self {
        let dims = ops.first().map_or(1, GridOperator::dims);
        ops.iter().zip(lambda).fold(Self::zero(dims), |acc, (op, l)| acc.plus(&op.scaled(*l)))
    }

    pub fn apply(&self, state: &GridState, scheme: DerivativeScheme) -> Vec<C64> {
        let grid = &state.grid;
        let d = self.dims();
        assert_eq!(d, grid.dims(), "operator and grid dimensions differ");
        let psi = &state.amplitudes;
        let mut out: Vec<C64> = psi
            .iter()
            .enumerate()
            .map(|(idx, z)| {
                let mut factor = self.constant;
                for i in 0..d {
                    let xi = grid.coordinate_of(idx, i);
                    factor += self.linear[i] * xi;
                    for j in 0..d {
                        factor += self.quadratic[i * d + j] * xi * grid.coordinate_of(idx, j);
                    }
                }
                factor * z
            })
            .collect();
        for (axis, c) in self.derivative.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let dpsi = grid.derivative(psi, axis, scheme);
            for (o, v) in out.iter_mut().zip(dpsi) {
                *o += c * v;
            }
        }
        out
    }
}
