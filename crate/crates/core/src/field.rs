//! Scalar fields and boundary traces.
//!
//! `Field2D` holds one scalar unknown sampled on a [`Grid`]; `TraceField`
//! holds a function of the tangential coordinate only (wall restrictions and
//! their derivatives). Both are immutable values in solver code: every
//! operator returns a fresh field.

use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone)]
pub struct Field2D {
    pub grid: Arc<Grid>,
    /// Samples indexed `[i_x1, i_y]`.
    pub values: Array2<f64>,
    pub label: String,
}

impl Field2D {
    pub fn zeros(grid: &Arc<Grid>, label: &str) -> Field2D {
        Field2D {
            grid: grid.clone(),
            values: Array2::zeros((grid.n_x1, grid.n_y)),
            label: label.to_string(),
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, label: &str, f: impl Fn(f64, f64) -> f64) -> Field2D {
        let mut values = Array2::zeros((grid.n_x1, grid.n_y));
        for i in 0..grid.n_x1 {
            let x = grid.x1(i);
            for j in 0..grid.n_y {
                values[[i, j]] = f(x, grid.y(j));
            }
        }
        Field2D {
            grid: grid.clone(),
            values,
            label: label.to_string(),
        }
    }

    pub fn from_values(grid: &Arc<Grid>, label: &str, values: Array2<f64>) -> Result<Field2D> {
        if values.dim() != (grid.n_x1, grid.n_y) {
            return Err(Error::Invalid(format!(
                "field '{label}' shape {:?} does not match grid ({}, {})",
                values.dim(),
                grid.n_x1,
                grid.n_y
            )));
        }
        Ok(Field2D {
            grid: grid.clone(),
            values,
            label: label.to_string(),
        })
    }

    pub fn relabel(mut self, label: &str) -> Field2D {
        self.label = label.to_string();
        self
    }

    pub fn check_grid(&self, other: &Field2D) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch {
                left: self.label.clone(),
                right: other.label.clone(),
            });
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Plain (unweighted) discrete L2 norm, trapezoidal in both directions.
    pub fn l2(&self) -> f64 {
        let dx = self.grid.dx1();
        let dy = self.grid.dy();
        let (nx, ny) = self.values.dim();
        let mut acc = 0.0;
        for i in 0..nx {
            let wx = if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
            for j in 0..ny {
                let wy = if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
                let v = self.values[[i, j]];
                acc += wx * wy * v * v;
            }
        }
        (acc * dx * dy).sqrt()
    }

    /// Wall row (j = 0) as a trace.
    pub fn wall_row(&self, label: &str) -> TraceField {
        TraceField {
            grid: self.grid.clone(),
            values: self.values.column(0).to_owned(),
            label: label.to_string(),
        }
    }

    /// Row at the artificial top boundary (j = n_y - 1).
    pub fn top_row(&self, label: &str) -> TraceField {
        TraceField {
            grid: self.grid.clone(),
            values: self.values.column(self.grid.n_y - 1).to_owned(),
            label: label.to_string(),
        }
    }

    pub fn scaled(&self, c: f64) -> Field2D {
        Field2D {
            grid: self.grid.clone(),
            values: &self.values * c,
            label: self.label.clone(),
        }
    }

    pub fn add(&self, other: &Field2D) -> Result<Field2D> {
        self.check_grid(other)?;
        Ok(Field2D {
            grid: self.grid.clone(),
            values: &self.values + &other.values,
            label: self.label.clone(),
        })
    }

    pub fn sub(&self, other: &Field2D) -> Result<Field2D> {
        self.check_grid(other)?;
        Ok(Field2D {
            grid: self.grid.clone(),
            values: &self.values - &other.values,
            label: self.label.clone(),
        })
    }

    pub fn mul(&self, other: &Field2D) -> Result<Field2D> {
        self.check_grid(other)?;
        Ok(Field2D {
            grid: self.grid.clone(),
            values: &self.values * &other.values,
            label: self.label.clone(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct TraceField {
    pub grid: Arc<Grid>,
    /// Samples indexed by i_x1.
    pub values: Array1<f64>,
    pub label: String,
}

impl TraceField {
    pub fn relabel(mut self, label: &str) -> TraceField {
        self.label = label.to_string();
        self
    }

    pub fn zeros(grid: &Arc<Grid>, label: &str) -> TraceField {
        TraceField {
            grid: grid.clone(),
            values: Array1::zeros(grid.n_x1),
            label: label.to_string(),
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, label: &str, f: impl Fn(f64) -> f64) -> TraceField {
        let values = Array1::from_iter((0..grid.n_x1).map(|i| f(grid.x1(i))));
        TraceField {
            grid: grid.clone(),
            values,
            label: label.to_string(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.sum() / self.values.len() as f64
    }

    /// Broadcast over the wall-normal direction.
    pub fn broadcast(&self, label: &str) -> Field2D {
        let mut f = Field2D::zeros(&self.grid, label);
        for i in 0..self.grid.n_x1 {
            for j in 0..self.grid.n_y {
                f.values[[i, j]] = self.values[i];
            }
        }
        f
    }

    /// Broadcast of `y * trace(x1)`.
    pub fn broadcast_times_y(&self, label: &str) -> Field2D {
        let mut f = Field2D::zeros(&self.grid, label);
        for i in 0..self.grid.n_x1 {
            for j in 0..self.grid.n_y {
                f.values[[i, j]] = self.grid.y(j) * self.values[i];
            }
        }
        f
    }

    /// Same trace values attached to another grid with equal tangential
    /// sampling (used when layer and outer grids differ in n_y only).
    pub fn on_grid(&self, grid: &Arc<Grid>, label: &str) -> Result<TraceField> {
        if grid.n_x1 != self.grid.n_x1 || grid.l != self.grid.l {
            return Err(Error::GridMismatch {
                left: self.label.clone(),
                right: label.to_string(),
            });
        }
        Ok(TraceField {
            grid: grid.clone(),
            values: self.values.clone(),
            label: label.to_string(),
        })
    }

    /// Weighted L2 norm on the line, weight <x1>^ell, trapezoidal.
    pub fn weighted_l2(&self, ell: f64) -> f64 {
        let dx = self.grid.dx1();
        let n = self.values.len();
        let mut acc = 0.0;
        for i in 0..n {
            let wq = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            let x = self.grid.x1(i);
            let w = (1.0 + x * x).powf(ell / 2.0);
            let v = w * self.values[i];
            acc += wq * v * v;
        }
        (acc * dx).sqrt()
    }
}
