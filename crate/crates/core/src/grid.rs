//! Uniform spatial grids made of whole potential periods.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const PERIOD: f64 = 2.0 * PI;

/// Uniform grid over `[-2π·cells_per_side, 2π·cells_per_side)` with
/// `nodes_per_cell` nodes in every period. Cell `c` covers `[2πc, 2π(c+1))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellGrid {
    pub nodes_per_cell: usize,
    pub cells_per_side: usize,
}

impl CellGrid {
    pub fn new(nodes_per_cell: usize, cells_per_side: usize) -> Result<Self> {
        if nodes_per_cell < 4 {
            return Err(Error::Grid(format!("nodes per cell must be at least 4, got {nodes_per_cell}")));
        }
        if cells_per_side == 0 {
            return Err(Error::Grid("at least one cell per side is required".into()));
        }
        Ok(Self { nodes_per_cell, cells_per_side })
    }

    pub fn cells(&self) -> usize {
        2 * self.cells_per_side
    }

    pub fn len(&self) -> usize {
        self.cells() * self.nodes_per_cell
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        PERIOD / self.nodes_per_cell as f64
    }

    pub fn first_cell(&self) -> i64 {
        -(self.cells_per_side as i64)
    }

    pub fn length(&self) -> f64 {
        PERIOD * self.cells() as f64
    }

    /// Cell index and in-cell node of a flat index.
    pub fn split(&self, idx: usize) -> (i64, usize) {
        let c = idx / self.nodes_per_cell;
        (c as i64 + self.first_cell(), idx % self.nodes_per_cell)
    }

    pub fn flat(&self, cell: i64, node: usize) -> Option<usize> {
        let c = cell - self.first_cell();
        if c < 0 || c as usize >= self.cells() || node >= self.nodes_per_cell {
            None
        } else {
            Some(c as usize * self.nodes_per_cell + node)
        }
    }

    pub fn x(&self, idx: usize) -> f64 {
        let (c, i) = self.split(idx);
        PERIOD * c as f64 + self.dx() * i as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    pub fn contains_cell(&self, cell: i64) -> bool {
        cell >= self.first_cell() && cell < self.first_cell() + self.cells() as i64
    }
}

/// Riemann sum over a uniform grid. On a periodic domain, or for integrands
/// that vanish at the window ends, this is the trapezoid rule.
pub fn integrate(values: impl IntoIterator<Item = f64>, dx: f64) -> f64 {
    values.into_iter().sum::<f64>() * dx
}
