//! Tensor grids on the truncated half-plane.
//!
//! The tangential coordinate x1 is sampled uniformly on [-L, L) with a
//! periodic convention (the node at +L is identified with -L), which is what
//! makes transform-based differentiation applicable. The wall-normal
//! coordinate runs over [0, Y] inclusive, with the wall at index 0.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Uniform tensor grid. The second axis is the wall-normal coordinate: the
/// boundary-layer solvers read it as y, the outer solvers as x3.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub n_x1: usize,
    pub n_y: usize,
    pub l: f64,
    pub y_max: f64,
}

impl Grid {
    pub fn new(n_x1: usize, n_y: usize, l: f64, y_max: f64) -> Result<Arc<Grid>> {
        if n_x1 < 8 || !n_x1.is_power_of_two() {
            return Err(Error::Invalid(format!(
                "n_x1 must be a power of two >= 8, got {n_x1}"
            )));
        }
        if n_y < 5 {
            return Err(Error::Invalid(format!("n_y must be >= 5, got {n_y}")));
        }
        if !(l > 0.0) || !(y_max > 0.0) {
            return Err(Error::Invalid(format!(
                "domain lengths must be positive, got L={l}, Y={y_max}"
            )));
        }
        Ok(Arc::new(Grid {
            n_x1,
            n_y,
            l,
            y_max,
        }))
    }

    /// Tangential spacing; 2L/n because the grid is periodic on [-L, L).
    pub fn dx1(&self) -> f64 {
        2.0 * self.l / self.n_x1 as f64
    }

    /// Wall-normal spacing; Y/(n_y - 1), both endpoints are nodes.
    pub fn dy(&self) -> f64 {
        self.y_max / (self.n_y - 1) as f64
    }

    pub fn x1(&self, i: usize) -> f64 {
        -self.l + i as f64 * self.dx1()
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy()
    }

    pub fn x1_nodes(&self) -> Vec<f64> {
        (0..self.n_x1).map(|i| self.x1(i)).collect()
    }

    pub fn y_nodes(&self) -> Vec<f64> {
        (0..self.n_y).map(|j| self.y(j)).collect()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }

    /// Whether the wall-normal direction supports the doubled-domain
    /// transform path (n_y - 1 must be a power of two).
    pub fn doubling_ok(&self) -> bool {
        (self.n_y - 1).is_power_of_two()
    }
}
