//! Discrete differential and integral operators on fields.
//!
//! Tangential derivatives are transform-based and exact on band-limited
//! data; wall-normal derivatives are second-order finite differences with
//! one-sided closures at the wall and at the artificial top boundary.
//! The tangential cumulative integral is trapezoidal, gauged to zero at the
//! left edge. Its exact discrete inverse is the forward difference paired
//! with the two-point average (see [`diff_forward_x1`] / [`avg_forward_x1`]),
//! which is what the divergence identities of the layer are checked with.

use crate::error::{Error, Result};
use crate::field::{Field2D, TraceField};
use crate::spectral;

/// Hard cap on the tangential derivative order; beyond this, spectral
/// differentiation noise dominates at 64-bit precision.
pub const MAX_TANGENTIAL_ORDER: usize = 12;

/// Weight parameters of the analytic norms: `<x1>^ell * exp(a y^2)`.
#[derive(Debug, Clone, Copy)]
pub struct WeightParams {
    pub ell: f64,
    pub a: f64,
}

impl WeightParams {
    pub fn new(ell: f64, a: f64) -> Result<WeightParams> {
        if !(ell > 0.5 && ell <= 1.0) {
            return Err(Error::Config(format!(
                "ell must lie in (1/2, 1], got {ell}"
            )));
        }
        if !(a > 0.0) {
            return Err(Error::Config(format!("a must be positive, got {a}")));
        }
        Ok(WeightParams { ell, a })
    }

    /// Gaussian-weight overflow guard, checked at configuration time.
    pub fn validate_against_height(&self, y_max: f64) -> Result<()> {
        let e = self.a * y_max * y_max;
        if e > 600.0 {
            return Err(Error::WeightOverflow(e));
        }
        Ok(())
    }
}

/// Tangential derivative of the given order.
pub fn d_x1(f: &Field2D, order: usize) -> Result<Field2D> {
    if order == 0 || order > MAX_TANGENTIAL_ORDER {
        return Err(Error::OrderBounds {
            order,
            max: MAX_TANGENTIAL_ORDER,
        });
    }
    let values = spectral::dx1_spectral(&f.values, f.grid.l, order);
    Field2D::from_values(&f.grid, &format!("d{order}_x1({})", f.label), values)
}

/// Tangential derivative of a trace.
pub fn d_x1_trace(t: &TraceField, order: usize) -> Result<TraceField> {
    if order == 0 || order > MAX_TANGENTIAL_ORDER {
        return Err(Error::OrderBounds {
            order,
            max: MAX_TANGENTIAL_ORDER,
        });
    }
    let tmp = ndarray::Array2::from_shape_fn((t.grid.n_x1, 1), |(i, _)| t.values[i]);
    let der = spectral::dx1_spectral(&tmp, t.grid.l, order);
    Ok(TraceField {
        grid: t.grid.clone(),
        values: der.column(0).to_owned(),
        label: format!("d{order}_x1({})", t.label),
    })
}

/// Wall-normal derivative, order 1 or 2.
pub fn d_y(f: &Field2D, order: u8) -> Result<Field2D> {
    if order != 1 && order != 2 {
        return Err(Error::OrderBounds {
            order: order as usize,
            max: 2,
        });
    }
    let (nx, ny) = f.values.dim();
    if ny < 5 {
        return Err(Error::Invalid("d_y requires n_y >= 5".into()));
    }
    let dy = f.grid.dy();
    let mut out = ndarray::Array2::zeros((nx, ny));
    let v = &f.values;
    match order {
        1 => {
            let c = 1.0 / (2.0 * dy);
            for i in 0..nx {
                out[[i, 0]] = (-3.0 * v[[i, 0]] + 4.0 * v[[i, 1]] - v[[i, 2]]) * c;
                for j in 1..ny - 1 {
                    out[[i, j]] = (v[[i, j + 1]] - v[[i, j - 1]]) * c;
                }
                out[[i, ny - 1]] =
                    (3.0 * v[[i, ny - 1]] - 4.0 * v[[i, ny - 2]] + v[[i, ny - 3]]) * c;
            }
        }
        _ => {
            let c = 1.0 / (dy * dy);
            for i in 0..nx {
                out[[i, 0]] = (2.0 * v[[i, 0]] - 5.0 * v[[i, 1]] + 4.0 * v[[i, 2]] - v[[i, 3]]) * c;
                for j in 1..ny - 1 {
                    out[[i, j]] = (v[[i, j + 1]] - 2.0 * v[[i, j]] + v[[i, j - 1]]) * c;
                }
                out[[i, ny - 1]] = (2.0 * v[[i, ny - 1]] - 5.0 * v[[i, ny - 2]]
                    + 4.0 * v[[i, ny - 3]]
                    - v[[i, ny - 4]])
                    * c;
            }
        }
    }
    Field2D::from_values(&f.grid, &format!("d{order}_y({})", f.label), out)
}

/// Warning attached to integrals whose integrand does not decay at the left
/// edge; the truncation error of replacing -infinity by -L is then unbounded.
#[derive(Debug, Clone)]
pub struct DecayWarning {
    pub label: String,
    pub edge_ratio: f64,
}

/// Default relative threshold for the left-edge decay check.
pub const DECAY_CHECK_RATIO: f64 = 1e-8;

/// Cumulative trapezoidal integral along x1 from the left edge.
pub fn integrate_x1_from_left(f: &Field2D) -> (Field2D, Option<DecayWarning>) {
    let (nx, ny) = f.values.dim();
    let dx = f.grid.dx1();
    let mut out = ndarray::Array2::zeros((nx, ny));
    for j in 0..ny {
        let mut acc = 0.0;
        for i in 1..nx {
            acc += 0.5 * dx * (f.values[[i - 1, j]] + f.values[[i, j]]);
            out[[i, j]] = acc;
        }
    }
    let edge = (0..ny).fold(0.0f64, |m, j| m.max(f.values[[0, j]].abs()));
    let peak = f.max_abs();
    let warning = if peak > 0.0 && edge > DECAY_CHECK_RATIO * peak {
        Some(DecayWarning {
            label: f.label.clone(),
            edge_ratio: edge / peak,
        })
    } else {
        None
    };
    (
        Field2D::from_values(&f.grid, &format!("int_x1({})", f.label), out).unwrap(),
        warning,
    )
}

/// Forward difference along x1; lives on tangential midpoints, last column
/// wraps periodically. Exact inverse of [`integrate_x1_from_left`] when
/// paired with [`avg_forward_x1`].
pub fn diff_forward_x1(f: &Field2D) -> Field2D {
    let (nx, ny) = f.values.dim();
    let dx = f.grid.dx1();
    let mut out = ndarray::Array2::zeros((nx, ny));
    for i in 0..nx {
        let ip = (i + 1) % nx;
        for j in 0..ny {
            out[[i, j]] = (f.values[[ip, j]] - f.values[[i, j]]) / dx;
        }
    }
    Field2D::from_values(&f.grid, &format!("D+_x1({})", f.label), out).unwrap()
}

/// Two-point forward average along x1 (same midpoints as [`diff_forward_x1`]).
pub fn avg_forward_x1(f: &Field2D) -> Field2D {
    let (nx, ny) = f.values.dim();
    let mut out = ndarray::Array2::zeros((nx, ny));
    for i in 0..nx {
        let ip = (i + 1) % nx;
        for j in 0..ny {
            out[[i, j]] = 0.5 * (f.values[[ip, j]] + f.values[[i, j]]);
        }
    }
    Field2D::from_values(&f.grid, &format!("avg_x1({})", f.label), out).unwrap()
}

/// Trace versions of the midpoint pair.
pub fn diff_forward_trace(t: &TraceField) -> TraceField {
    let n = t.values.len();
    let dx = t.grid.dx1();
    let values =
        ndarray::Array1::from_iter((0..n).map(|i| (t.values[(i + 1) % n] - t.values[i]) / dx));
    TraceField {
        grid: t.grid.clone(),
        values,
        label: format!("D+_x1({})", t.label),
    }
}

pub fn avg_forward_trace(t: &TraceField) -> TraceField {
    let n = t.values.len();
    let values =
        ndarray::Array1::from_iter((0..n).map(|i| 0.5 * (t.values[(i + 1) % n] + t.values[i])));
    TraceField {
        grid: t.grid.clone(),
        values,
        label: format!("avg_x1({})", t.label),
    }
}

/// Cumulative trapezoidal integral of a trace from the left edge.
pub fn integrate_trace_from_left(t: &TraceField) -> TraceField {
    let n = t.values.len();
    let dx = t.grid.dx1();
    let mut values = ndarray::Array1::zeros(n);
    let mut acc = 0.0;
    for i in 1..n {
        acc += 0.5 * dx * (t.values[i - 1] + t.values[i]);
        values[i] = acc;
    }
    TraceField {
        grid: t.grid.clone(),
        values,
        label: format!("int_x1({})", t.label),
    }
}

/// Forward difference along y; lives on wall-normal midpoints (the top row
/// repeats the last interval). Exact inverse of [`integrate_y_from_wall`]
/// when paired with [`avg_forward_y`].
pub fn diff_forward_y(f: &Field2D) -> Field2D {
    let (nx, ny) = f.values.dim();
    let dy = f.grid.dy();
    let mut out = ndarray::Array2::zeros((nx, ny));
    for i in 0..nx {
        for j in 0..ny - 1 {
            out[[i, j]] = (f.values[[i, j + 1]] - f.values[[i, j]]) / dy;
        }
        out[[i, ny - 1]] = out[[i, ny - 2]];
    }
    Field2D::from_values(&f.grid, &format!("D+_y({})", f.label), out).unwrap()
}

/// Two-point forward average along y (same midpoints as [`diff_forward_y`]).
pub fn avg_forward_y(f: &Field2D) -> Field2D {
    let (nx, ny) = f.values.dim();
    let mut out = ndarray::Array2::zeros((nx, ny));
    for i in 0..nx {
        for j in 0..ny - 1 {
            out[[i, j]] = 0.5 * (f.values[[i, j + 1]] + f.values[[i, j]]);
        }
        out[[i, ny - 1]] = out[[i, ny - 2]];
    }
    Field2D::from_values(&f.grid, &format!("avg_y({})", f.label), out).unwrap()
}

/// Cumulative trapezoidal integral in the wall-normal direction from y = 0.
pub fn integrate_y_from_wall(f: &Field2D) -> Field2D {
    let (nx, ny) = f.values.dim();
    let dy = f.grid.dy();
    let mut out = ndarray::Array2::zeros((nx, ny));
    for i in 0..nx {
        let mut acc = 0.0;
        for j in 1..ny {
            acc += 0.5 * dy * (f.values[[i, j - 1]] + f.values[[i, j]]);
            out[[i, j]] = acc;
        }
    }
    Field2D::from_values(&f.grid, &format!("int_y({})", f.label), out).unwrap()
}

/// Full-height composite midpoint rule over doubled cells (weights 2 dy on
/// odd rows). Second-order accurate like the trapezoid, with one additional
/// property the layer-pressure gauge relies on: composed with the centered
/// first derivative it telescopes exactly, since only odd rows are read.
/// Requires an even interval count.
pub fn integrate_y_alternating(f: &Field2D) -> Result<TraceField> {
    let (nx, ny) = f.values.dim();
    if (ny - 1) % 2 != 0 {
        return Err(Error::Invalid(format!(
            "alternating rule needs an even interval count, got {} intervals",
            ny - 1
        )));
    }
    let dy = f.grid.dy();
    let mut values = ndarray::Array1::zeros(nx);
    for i in 0..nx {
        let mut acc = 0.0;
        let mut j = 1;
        while j < ny {
            acc += f.values[[i, j]];
            j += 2;
        }
        values[i] = acc * 2.0 * dy;
    }
    Ok(TraceField {
        grid: f.grid.clone(),
        values,
        label: format!("int_y_alt({})", f.label),
    })
}

/// Full-height trapezoidal integral in y, returned as a trace.
pub fn integrate_y_full(f: &Field2D) -> TraceField {
    let (nx, ny) = f.values.dim();
    let dy = f.grid.dy();
    let mut values = ndarray::Array1::zeros(nx);
    for i in 0..nx {
        let mut acc = 0.0;
        for j in 0..ny {
            let w = if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
            acc += w * f.values[[i, j]];
        }
        values[i] = acc * dy;
    }
    TraceField {
        grid: f.grid.clone(),
        values,
        label: format!("int_y_full({})", f.label),
    }
}

/// Weighted L2 norm `|| <x1>^ell e^{a y^2} f ||` over the truncated domain,
/// trapezoidal quadrature.
pub fn weighted_l2(f: &Field2D, w: &WeightParams) -> f64 {
    let (nx, ny) = f.values.dim();
    let dx = f.grid.dx1();
    let dy = f.grid.dy();
    let mut acc = 0.0;
    for i in 0..nx {
        let wx = if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
        let x = f.grid.x1(i);
        let px = (1.0 + x * x).powf(w.ell);
        for j in 0..ny {
            let wy = if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
            let y = f.grid.y(j);
            let g = (2.0 * w.a * y * y).exp();
            let v = f.values[[i, j]];
            acc += wx * wy * px * g * v * v;
        }
    }
    (acc * dx * dy).sqrt()
}

/// Weighted L2 norm on the half plane with weight `<(x1, x3)>^ell` (no
/// Gaussian factor); used for the outer fields.
pub fn weighted_l2_halfplane(f: &Field2D, ell: f64) -> f64 {
    let (nx, ny) = f.values.dim();
    let dx = f.grid.dx1();
    let dy = f.grid.dy();
    let mut acc = 0.0;
    for i in 0..nx {
        let wx = if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
        let x = f.grid.x1(i);
        for j in 0..ny {
            let wy = if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
            let y = f.grid.y(j);
            let p = (1.0 + x * x + y * y).powf(ell);
            let v = f.values[[i, j]];
            acc += wx * wy * p * v * v;
        }
    }
    (acc * dx * dy).sqrt()
}
