//! Uniform time meshes and node-aligned value arrays.
//!
//! Every discretized quantity (controls, states, adjoints) is stored as an
//! `(N+1) x width` row-major array whose row `i` belongs to node `t_i`.

use crate::error::IntegrationError;

/// Uniform mesh `t_i = t0 + i*h`, `i = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    tf: f64,
    n_intervals: usize,
    h: f64,
}

impl TimeGrid {
    /// Returns `None` when `n_intervals == 0` or `t0 >= tf`.
    pub fn new(t0: f64, tf: f64, n_intervals: usize) -> Option<Self> {
        if n_intervals == 0 || !(t0 < tf) || !t0.is_finite() || !tf.is_finite() {
            return None;
        }
        Some(Self {
            t0,
            tf,
            n_intervals,
            h: (tf - t0) / n_intervals as f64,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn n_intervals(&self) -> usize {
        self.n_intervals
    }

    pub fn n_nodes(&self) -> usize {
        self.n_intervals + 1
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Node time. The last node is pinned to `tf` exactly.
    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_intervals {
            self.tf
        } else {
            self.t0 + i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(move |i| self.node(i))
    }
}

/// Row-major `rows x width` array of node values.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeValues {
    width: usize,
    data: Vec<f64>,
}

impl NodeValues {
    pub fn zeros(rows: usize, width: usize) -> Self {
        Self {
            width,
            data: vec![0.0; rows * width],
        }
    }

    /// Every row set to `row`.
    pub fn constant(rows: usize, row: &[f64]) -> Self {
        let mut data = Vec::with_capacity(rows * row.len());
        for _ in 0..rows {
            data.extend_from_slice(row);
        }
        Self { width: row.len(), data }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Option<Self> {
        let width = rows.first().map(|r| r.as_ref().len())?;
        let mut data = Vec::with_capacity(rows.len() * width);
        for r in rows {
            let r = r.as_ref();
            if r.len() != width {
                return None;
            }
            data.extend_from_slice(r);
        }
        Some(Self { width, data })
    }

    /// Wraps a flat node-major buffer. Returns `None` if the length is not a
    /// multiple of `width`.
    pub fn from_flat(width: usize, data: Vec<f64>) -> Option<Self> {
        if width == 0 || !data.len().is_multiple_of(width) {
            return None;
        }
        Some(Self { width, data })
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width.max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[j]).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    /// Sum of absolute values of all entries.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    /// Sum of absolute entrywise differences.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn max_abs_distance(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn first_non_finite_row(&self) -> Option<usize> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|k| k / self.width.max(1))
    }
}

/// Which stepping scheme produced a trajectory. Objective quadrature is
/// matched to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
    Euler,
    DormandPrince,
}

/// Discretized control `u(t_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlGrid {
    pub values: NodeValues,
}

impl ControlGrid {
    pub fn zeros(grid: &TimeGrid, n_controls: usize) -> Self {
        Self {
            values: NodeValues::zeros(grid.n_nodes(), n_controls),
        }
    }

    pub fn constant(grid: &TimeGrid, value: &[f64]) -> Self {
        Self {
            values: NodeValues::constant(grid.n_nodes(), value),
        }
    }

    /// Samples `f(t_i)` at each node.
    pub fn from_fn(grid: &TimeGrid, n_controls: usize, mut f: impl FnMut(f64) -> Vec<f64>) -> Self {
        let mut values = NodeValues::zeros(grid.n_nodes(), n_controls);
        for (i, t) in grid.nodes().enumerate() {
            values.row_mut(i).copy_from_slice(&f(t));
        }
        Self { values }
    }

    pub fn n_controls(&self) -> usize {
        self.values.width()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    /// True when `lower <= u_i <= upper` at every node, componentwise.
    pub fn within_bounds(&self, lower: &[f64], upper: &[f64]) -> bool {
        self.values.iter_rows().all(|r| {
            r.iter()
                .zip(lower.iter().zip(upper))
                .all(|(u, (a, b))| *a <= *u && *u <= *b)
        })
    }

    pub(crate) fn check(&self, grid: &TimeGrid, n_controls: usize) -> Result<(), IntegrationError> {
        if self.values.rows() != grid.n_nodes() {
            return Err(IntegrationError::DimensionMismatch {
                what: "control grid rows",
                expected: grid.n_nodes(),
                actual: self.values.rows(),
            });
        }
        if self.values.width() != n_controls {
            return Err(IntegrationError::DimensionMismatch {
                what: "control width",
                expected: n_controls,
                actual: self.values.width(),
            });
        }
        Ok(())
    }
}

/// States `x(t_i)` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub values: NodeValues,
    pub scheme: Scheme,
}

impl StateTrajectory {
    pub fn n_states(&self) -> usize {
        self.values.width()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn last(&self) -> &[f64] {
        self.values.row(self.values.rows() - 1)
    }
}

/// Adjoints `lambda(t_i)`, stored in forward node order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointTrajectory {
    pub values: NodeValues,
}

impl AdjointTrajectory {
    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }
}
