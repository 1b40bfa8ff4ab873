//! Second layer component: linear advection-diffusion for the substituted
//! variable w = u2_layer + e^{-2 a0 y^2} u2_bar, which carries homogeneous
//! Dirichlet data at the wall and at the top.
//!
//! The discretization is deliberately monotone: backward Euler for the
//! wall-normal diffusion (an M-matrix) and first-order upwinding for both
//! advection terms under an advective CFL bound, so away from the source
//! term the new value is a convex combination of old values and boundary
//! data.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{Field2D, TraceField};

/// Outcome of one step, with the interval bookkeeping for the maximum
/// principle.
#[derive(Debug, Clone)]
pub struct U2StepReport {
    /// min/max over initial interior data joined with the boundary value 0.
    pub bound_lo: f64,
    pub bound_hi: f64,
    /// observed range of the substituted variable after the step
    pub observed_lo: f64,
    pub observed_hi: f64,
    /// dt * max |R|, the admissible drift contributed by the source
    pub source_slack: f64,
}

impl U2StepReport {
    pub fn within_bounds(&self) -> bool {
        self.observed_lo >= self.bound_lo - self.source_slack - 1e-14
            && self.observed_hi <= self.bound_hi + self.source_slack + 1e-14
    }
}

/// Substitute into w-space.
pub fn substitute(u2b: &Field2D, u2_bar: &TraceField, a0: f64) -> Field2D {
    let mut w = u2b.clone().relabel("w_P2");
    for i in 0..u2b.grid.n_x1 {
        for j in 0..u2b.grid.n_y {
            let y = u2b.grid.y(j);
            w.values[[i, j]] += (-2.0 * a0 * y * y).exp() * u2_bar.values[i];
        }
    }
    w
}

/// Undo the substitution with the trace at the new time.
pub fn back_substitute(w: &Field2D, u2_bar: &TraceField, a0: f64) -> Field2D {
    let mut u = w.clone().relabel("u2_B0");
    for i in 0..w.grid.n_x1 {
        for j in 0..w.grid.n_y {
            let y = w.grid.y(j);
            u.values[[i, j]] -= (-2.0 * a0 * y * y).exp() * u2_bar.values[i];
        }
    }
    u
}

/// Source term of the substituted equation; `v_layer` is the fluctuation
/// part of the tangential velocity (u1_total minus the broadcast trace).
pub fn source_term(
    grid: &std::sync::Arc<crate::grid::Grid>,
    u3_total: &Field2D,
    v_layer: &Field2D,
    u2_bar: &TraceField,
    d1u2_bar: &TraceField,
    a0: f64,
) -> Field2D {
    let mut r = Field2D::zeros(grid, "R_P2");
    for i in 0..grid.n_x1 {
        for j in 0..grid.n_y {
            let y = grid.y(j);
            let e = (-2.0 * a0 * y * y).exp();
            r.values[[i, j]] = (16.0 * a0 * a0 * y * y - 4.0 * a0) * e * u2_bar.values[i]
                + 4.0 * a0 * u3_total.values[[i, j]] * y * e * u2_bar.values[i]
                + (1.0 - e) * d1u2_bar.values[i] * v_layer.values[[i, j]];
        }
    }
    r
}

pub fn cfl_limit(u1_total: &Field2D, u3_total: &Field2D) -> f64 {
    let g = &u1_total.grid;
    let sx = u1_total.max_abs();
    let sy = u3_total.max_abs();
    0.9 / (sx / g.dx1() + sy / g.dy() + 1e-14)
}

/// Advance the layer's second component by one step.
///
/// `u2_bar` is the transported wall trace at the current time (it enters the
/// substitution and the source), `u2_bar_new` the trace at t + dt used for
/// the back-substitution.
#[allow(clippy::too_many_arguments)]
pub fn step_u2_bl(
    u2b: &Field2D,
    u1_total: &Field2D,
    u3_total: &Field2D,
    v_layer: &Field2D,
    u2_bar: &TraceField,
    d1u2_bar: &TraceField,
    u2_bar_new: &TraceField,
    a0: f64,
    dt: f64,
) -> Result<(Field2D, U2StepReport)> {
    let g = &u2b.grid;
    let (nx, ny) = (g.n_x1, g.n_y);
    let dx = g.dx1();
    let dy = g.dy();

    let max_dt = cfl_limit(u1_total, u3_total);
    if dt > max_dt {
        return Err(Error::Cfl { dt, max_dt });
    }

    let w = substitute(u2b, u2_bar, a0);
    let r = source_term(g, u3_total, v_layer, u2_bar, d1u2_bar, a0);

    let mut bound_lo = 0.0f64;
    let mut bound_hi = 0.0f64;
    for v in w.values.iter() {
        bound_lo = bound_lo.min(*v);
        bound_hi = bound_hi.max(*v);
    }
    let source_slack = dt * r.max_abs();

    // explicit upwind advection plus source
    let mut star = Array2::<f64>::zeros((nx, ny));
    for i in 0..nx {
        let im = (i + nx - 1) % nx;
        let ip = (i + 1) % nx;
        for j in 1..ny - 1 {
            let c = u1_total.values[[i, j]];
            let d = u3_total.values[[i, j]];
            let dwx = if c >= 0.0 {
                (w.values[[i, j]] - w.values[[im, j]]) / dx
            } else {
                (w.values[[ip, j]] - w.values[[i, j]]) / dx
            };
            let dwy = if d >= 0.0 {
                (w.values[[i, j]] - w.values[[i, j - 1]]) / dy
            } else {
                (w.values[[i, j + 1]] - w.values[[i, j]]) / dy
            };
            star[[i, j]] = w.values[[i, j]] - dt * (c * dwx + d * dwy) - dt * r.values[[i, j]];
        }
        star[[i, 0]] = 0.0;
        star[[i, ny - 1]] = 0.0;
    }

    // implicit backward Euler diffusion, Dirichlet rows pinned
    let rd = dt / (dy * dy);
    let mut cp = vec![0.0; ny];
    let mut dp = vec![0.0; ny];
    let mut out = Array2::<f64>::zeros((nx, ny));
    for i in 0..nx {
        cp[0] = 0.0;
        dp[0] = 0.0;
        for j in 1..ny - 1 {
            // rows: -rd w[j-1] + (1+2rd) w[j] - rd w[j+1] = star[j]
            let m = (1.0 + 2.0 * rd) + rd * cp[j - 1];
            cp[j] = -rd / m;
            dp[j] = (star[[i, j]] + rd * dp[j - 1]) / m;
        }
        out[[i, ny - 1]] = 0.0;
        for j in (1..ny - 1).rev() {
            out[[i, j]] = dp[j] - cp[j] * out[[i, j + 1]];
        }
        out[[i, 0]] = 0.0;
    }

    let mut observed_lo = 0.0f64;
    let mut observed_hi = 0.0f64;
    for v in out.iter() {
        observed_lo = observed_lo.min(*v);
        observed_hi = observed_hi.max(*v);
    }
    let w_new = Field2D::from_values(g, "w_P2", out)?;
    if !w_new.all_finite() {
        return Err(Error::NonFinite {
            label: "u2_B0".into(),
            step: 0,
        });
    }
    let u2_new = back_substitute(&w_new, u2_bar_new, a0);
    Ok((
        u2_new,
        U2StepReport {
            bound_lo,
            bound_hi,
            observed_lo,
            observed_hi,
            source_slack,
        },
    ))
}
