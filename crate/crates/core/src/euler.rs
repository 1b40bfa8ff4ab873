//! Three-component 2D Euler-type outer solve on the half plane.
//!
//! The (u1, u3) pair is advanced in vorticity-streamfunction form with an
//! odd reflection of the vorticity across the wall, which enforces
//! impermeability exactly: the streamfunction vanishes on the wall row, so
//! u3 = -d1 psi is identically zero there. The second component rides along
//! as a passively transported scalar, advanced with a monotone
//! semi-Lagrangian step. Pressure is recovered from its Poisson equation
//! with an even reflection; the even parity encodes the vanishing of the
//! wall-normal pressure gradient at the wall.
//!
//! Time integration is explicit third-order Runge-Kutta (nonstiff
//! advection).

use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{Field2D, TraceField};
use crate::grid::Grid;
use crate::ops;
use crate::spectral::{self, Parity};

/// Interior velocity-pressure tuple at one time.
#[derive(Debug, Clone)]
pub struct OuterState {
    pub u1: Field2D,
    pub u2: Field2D,
    pub u3: Field2D,
    pub p: Field2D,
    /// Vorticity d1 u3 - d3 u1; the prognostic variable.
    pub omega: Field2D,
    pub t: f64,
}

/// Wall restrictions consumed by the layer solvers.
#[derive(Debug, Clone)]
pub struct TraceSet {
    pub u1_bar: TraceField,
    pub u2_bar: TraceField,
    pub u3_bar: TraceField,
    pub d3u3_bar: TraceField,
    pub d1d3u3_bar: TraceField,
    pub d1p0_bar: TraceField,
    pub d2p0_bar: TraceField,
    pub t: f64,
}

pub struct OuterSolver {
    pub grid: Arc<Grid>,
    /// CFL safety factor for the advective limit.
    pub cfl: f64,
}

/// Manufactured-solution forcing hook: a source added to the vorticity
/// equation and to the u2 transport equation.
pub struct OuterForcing<'a> {
    pub omega: Option<&'a dyn Fn(f64) -> Array2<f64>>,
}

impl OuterSolver {
    pub fn new(grid: &Arc<Grid>) -> Result<OuterSolver> {
        if !grid.doubling_ok() {
            return Err(Error::Invalid(format!(
                "outer solve needs n_y - 1 to be a power of two, got n_y = {}",
                grid.n_y
            )));
        }
        Ok(OuterSolver {
            grid: grid.clone(),
            cfl: 0.5,
        })
    }

    /// Build a state from a streamfunction sample (odd in x3) and a second
    /// component. Divergence-free and impermeable by construction.
    pub fn state_from_streamfunction(
        &self,
        psi: &Field2D,
        u2: &Field2D,
        t: f64,
    ) -> Result<OuterState> {
        let omega_vals = {
            let d11 = spectral::dx1_spectral(&psi.values, self.grid.l, 2);
            let d33 = spectral::d3_parity(&psi.values, self.grid.y_max, 2, Parity::Odd);
            -(d11 + d33)
        };
        let omega = Field2D::from_values(&self.grid, "omega", omega_vals)?;
        self.state_from_vorticity(&omega, u2, t)
    }

    /// Rebuild (u1, u3, p) from vorticity. Used by every stage.
    pub fn state_from_vorticity(
        &self,
        omega: &Field2D,
        u2: &Field2D,
        t: f64,
    ) -> Result<OuterState> {
        let (u1, u3) = self.velocity_from_vorticity(&omega.values);
        let p = self.pressure_from_velocity(&u1, &u3)?;
        let mut u3f = Field2D::from_values(&self.grid, "u3_I0", u3)?;
        // exact impermeability at round-off
        for i in 0..self.grid.n_x1 {
            u3f.values[[i, 0]] = 0.0;
        }
        Ok(OuterState {
            u1: Field2D::from_values(&self.grid, "u1_I0", u1)?,
            u2: u2.clone().relabel("u2_I0"),
            u3: u3f,
            p,
            omega: omega.clone().relabel("omega"),
            t,
        })
    }

    fn velocity_from_vorticity(&self, omega: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let psi = spectral::poisson_doubled(omega, self.grid.l, self.grid.y_max, Parity::Odd);
        let u1 = spectral::d3_parity(&psi, self.grid.y_max, 1, Parity::Odd);
        let u3 = -spectral::dx1_spectral(&psi, self.grid.l, 1);
        (u1, u3)
    }

    /// Streamfunction of the current vorticity (the order -2 pressure up to
    /// gauge).
    pub fn streamfunction(&self, s: &OuterState) -> Field2D {
        let psi =
            spectral::poisson_doubled(&s.omega.values, self.grid.l, self.grid.y_max, Parity::Odd);
        Field2D::from_values(&self.grid, "psi", psi).unwrap()
    }

    fn pressure_from_velocity(&self, u1: &Array2<f64>, u3: &Array2<f64>) -> Result<Field2D> {
        let d1u1 = spectral::dx1_spectral(u1, self.grid.l, 1);
        let d1u3 = spectral::dx1_spectral(u3, self.grid.l, 1);
        let d3u1 = spectral::d3_parity(u1, self.grid.y_max, 1, Parity::Even);
        let d3u3 = spectral::d3_parity(u3, self.grid.y_max, 1, Parity::Odd);
        // lap p = -(d1u1^2 + 2 d1u3 d3u1 + d3u3^2); the RHS is even in x3.
        let mut rhs = Array2::zeros(u1.dim());
        ndarray::Zip::from(&mut rhs)
            .and(&d1u1)
            .and(&d1u3)
            .and(&d3u1)
            .and(&d3u3)
            .for_each(|r, a, b, c, d| {
                *r = a * a + 2.0 * b * c + d * d;
            });
        let p = spectral::poisson_doubled(&rhs, self.grid.l, self.grid.y_max, Parity::Even);
        Field2D::from_values(&self.grid, "p_I0", p)
    }

    pub fn cfl_limit(&self, s: &OuterState) -> f64 {
        let umax = s.u1.max_abs().max(s.u3.max_abs()).max(1e-14);
        self.cfl * self.grid.dx1().min(self.grid.dy()) / umax
    }

    fn advection(
        &self,
        omega: &Array2<f64>,
        forcing: Option<&OuterForcing>,
        t: f64,
    ) -> Array2<f64> {
        let (u1, u3) = self.velocity_from_vorticity(omega);
        let d1w = spectral::dx1_spectral(omega, self.grid.l, 1);
        let d3w = spectral::d3_parity(omega, self.grid.y_max, 1, Parity::Odd);
        let mut out = Array2::zeros(omega.dim());
        ndarray::Zip::from(&mut out)
            .and(&u1)
            .and(&u3)
            .and(&d1w)
            .and(&d3w)
            .for_each(|o, a, b, c, d| {
                *o = -(a * c + b * d);
            });
        if let Some(f) = forcing {
            if let Some(src) = f.omega {
                out += &src(t);
            }
        }
        out
    }

    /// One explicit step; ordinary entry point without forcing.
    pub fn step_outer(&self, s: &OuterState, dt: f64) -> Result<OuterState> {
        self.step_outer_forced(s, dt, None)
    }

    /// One step of the vorticity equation (SSP-RK3) plus a monotone
    /// semi-Lagrangian transport step for the second component.
    pub fn step_outer_forced(
        &self,
        s: &OuterState,
        dt: f64,
        forcing: Option<&OuterForcing>,
    ) -> Result<OuterState> {
        let max_dt = self.cfl_limit(s);
        if dt > max_dt {
            return Err(Error::Cfl { dt, max_dt });
        }
        let w0 = &s.omega.values;
        let t = s.t;
        let k1 = self.advection(w0, forcing, t);
        let w1 = w0 + &(dt * &k1);
        let k2 = self.advection(&w1, forcing, t + dt);
        let w2 = 0.75 * w0 + 0.25 * (&w1 + &(dt * &k2));
        let k3 = self.advection(&w2, forcing, t + 0.5 * dt);
        let w_new = (1.0 / 3.0) * w0 + (2.0 / 3.0) * (&w2 + &(dt * &k3));

        // transport u2 with the start-of-step velocity
        let u2_new = self.semi_lagrangian_u2(&s.u2, &s.u1, &s.u3, dt);

        let omega = Field2D::from_values(&self.grid, "omega", w_new)?;
        if !omega.all_finite() {
            return Err(Error::NonFinite {
                label: "omega".into(),
                step: 0,
            });
        }
        self.state_from_vorticity(&omega, &u2_new, t + dt)
    }

    /// Monotone semi-Lagrangian step: RK2 backtrack, bilinear interpolation
    /// (a convex combination, so the max norm cannot grow).
    fn semi_lagrangian_u2(&self, u2: &Field2D, u1: &Field2D, u3: &Field2D, dt: f64) -> Field2D {
        let g = &self.grid;
        let (nx, ny) = u2.values.dim();
        let mut out = Array2::zeros((nx, ny));
        for i in 0..nx {
            for j in 0..ny {
                let x = g.x1(i);
                let y = g.y(j);
                // midpoint backtrack
                let (um, wm) = (u1.values[[i, j]], u3.values[[i, j]]);
                let xm = x - 0.5 * dt * um;
                let ym = (y - 0.5 * dt * wm).clamp(0.0, g.y_max);
                let (umid, wmid) = bilinear_pair(g, &u1.values, &u3.values, xm, ym);
                let xd = x - dt * umid;
                let yd = (y - dt * wmid).clamp(0.0, g.y_max);
                out[[i, j]] = bilinear(g, &u2.values, xd, yd);
            }
        }
        Field2D::from_values(&self.grid, "u2_I0", out).unwrap()
    }

    /// Traces at the wall; one-sided second-order stencils for the
    /// wall-normal derivatives.
    pub fn extract_traces(&self, s: &OuterState) -> TraceSet {
        let g = &self.grid;
        let dy = g.dy();
        let n = g.n_x1;
        let mut d3u3 = ndarray::Array1::zeros(n);
        for i in 0..n {
            d3u3[i] = (-3.0 * s.u3.values[[i, 0]] + 4.0 * s.u3.values[[i, 1]]
                - s.u3.values[[i, 2]])
                / (2.0 * dy);
        }
        let d3u3_bar = TraceField {
            grid: g.clone(),
            values: d3u3,
            label: "d3u3_bar".into(),
        };
        let d1d3u3_bar = ops::d_x1_trace(&d3u3_bar, 1).unwrap().relabel("d1d3u3_bar");
        let p_row = s.p.wall_row("p0_bar");
        let d1p0_bar = ops::d_x1_trace(&p_row, 1).unwrap().relabel("d1p0_bar");
        TraceSet {
            u1_bar: s.u1.wall_row("u1_bar"),
            u2_bar: s.u2.wall_row("u2_bar"),
            u3_bar: s.u3.wall_row("u3_bar"),
            d3u3_bar,
            d1d3u3_bar,
            d1p0_bar,
            d2p0_bar: TraceField::zeros(g, "d2p0_bar"),
            t: s.t,
        }
    }

    /// Replace the wall-normal derivative traces by the tangential ones the
    /// divergence constraint dictates.
    pub fn make_div_consistent(&self, tr: &TraceSet) -> TraceSet {
        let d3u3_bar = ops::d_x1_trace(&tr.u1_bar, 1).unwrap().relabel("d3u3_bar");
        let mut d3u3_bar = d3u3_bar;
        d3u3_bar.values.mapv_inplace(|v| -v);
        let d1d3u3_bar = ops::d_x1_trace(&d3u3_bar, 1).unwrap().relabel("d1d3u3_bar");
        TraceSet {
            d3u3_bar,
            d1d3u3_bar,
            ..tr.clone()
        }
    }

    /// Weighted L2 defect of the Bernoulli law on the wall, from two
    /// consecutive trace sets.
    pub fn bernoulli_residual(&self, old: &TraceSet, new: &TraceSet, ell: f64) -> Result<f64> {
        let dt = new.t - old.t;
        if dt <= 0.0 {
            return Err(Error::TimeMismatch(old.t, new.t));
        }
        let d1u1 = ops::d_x1_trace(&new.u1_bar, 1)?;
        let d1u2 = ops::d_x1_trace(&new.u2_bar, 1)?;
        let n = self.grid.n_x1;
        let mut r1 = TraceField::zeros(&self.grid, "bernoulli_u1");
        let mut r2 = TraceField::zeros(&self.grid, "bernoulli_u2");
        for i in 0..n {
            let dtu1 = (new.u1_bar.values[i] - old.u1_bar.values[i]) / dt;
            let dtu2 = (new.u2_bar.values[i] - old.u2_bar.values[i]) / dt;
            r1.values[i] = dtu1 + new.u1_bar.values[i] * d1u1.values[i] + new.d1p0_bar.values[i];
            r2.values[i] = dtu2 + new.u1_bar.values[i] * d1u2.values[i] + new.d2p0_bar.values[i];
        }
        let a = r1.weighted_l2(ell);
        let b = r2.weighted_l2(ell);
        Ok((a * a + b * b).sqrt())
    }

    /// Order -2 pressure: the potential of the rotated velocity
    /// (d1 p = -u3, d3 p = u1). The gradient field is exactly the gradient
    /// of the streamfunction, so the potential is recovered spectrally;
    /// the trapezoidal two-path reconstruction is kept for cross-checks.
    /// Gauge: zero at the (-L, 0) corner.
    pub fn reconstruct_p_minus2(&self, s: &OuterState) -> (Field2D, f64) {
        let compat = self.gradient_compat_residual(&s.u3.scaled(-1.0), &s.u1);
        let mut psi = self.streamfunction(s).relabel("p_Im2");
        let corner = psi.values[[0, 0]];
        psi.values.mapv_inplace(|v| v - corner);
        (psi, compat)
    }

    /// Max-norm curl of a supposed gradient field (g1, g3); nonzero values
    /// mean path integration is ill-defined.
    pub fn gradient_compat_residual(&self, g1: &Field2D, g3: &Field2D) -> f64 {
        let d3g1 = spectral::d3_parity(&g1.values, self.grid.y_max, 1, Parity::Odd);
        let d1g3 = spectral::dx1_spectral(&g3.values, self.grid.l, 1);
        let mut m = 0.0f64;
        ndarray::Zip::from(&d3g1).and(&d1g3).for_each(|a, b| {
            m = m.max((a - b).abs());
        });
        m
    }

    /// Trapezoidal path integration of a gradient field from the corner,
    /// either along x1 first or along x3 first.
    pub fn path_integrate(&self, g1: &Field2D, g3: &Field2D, x1_first: bool) -> Field2D {
        let g = &self.grid;
        let (nx, ny) = (g.n_x1, g.n_y);
        let dx = g.dx1();
        let dy = g.dy();
        let mut out = Array2::zeros((nx, ny));
        if x1_first {
            for i in 1..nx {
                out[[i, 0]] =
                    out[[i - 1, 0]] + 0.5 * dx * (g1.values[[i - 1, 0]] + g1.values[[i, 0]]);
            }
            for i in 0..nx {
                for j in 1..ny {
                    out[[i, j]] =
                        out[[i, j - 1]] + 0.5 * dy * (g3.values[[i, j - 1]] + g3.values[[i, j]]);
                }
            }
        } else {
            for j in 1..ny {
                out[[0, j]] =
                    out[[0, j - 1]] + 0.5 * dy * (g3.values[[0, j - 1]] + g3.values[[0, j]]);
            }
            for j in 0..ny {
                for i in 1..nx {
                    out[[i, j]] =
                        out[[i - 1, j]] + 0.5 * dx * (g1.values[[i - 1, j]] + g1.values[[i, j]]);
                }
            }
        }
        Field2D::from_values(&self.grid, "path_potential", out).unwrap()
    }

    /// Kinetic energy of the (u1, u3) pair.
    pub fn kinetic_energy(&self, s: &OuterState) -> f64 {
        let a = s.u1.l2();
        let b = s.u3.l2();
        a * a + b * b
    }

    /// Weighted L2 norm of the discrete divergence.
    pub fn divergence_norm(&self, s: &OuterState, ell: f64) -> f64 {
        let d1u1 = spectral::dx1_spectral(&s.u1.values, self.grid.l, 1);
        let d3u3 = spectral::d3_parity(&s.u3.values, self.grid.y_max, 1, Parity::Odd);
        let div = Field2D::from_values(&self.grid, "div", d1u1 + d3u3).unwrap();
        ops::weighted_l2_halfplane(&div, ell)
    }
}

/// 1D monotone semi-Lagrangian transport of a trace by a trace velocity.
pub fn trace_transport_u2(u2_bar: &TraceField, u1_bar: &TraceField, dt: f64) -> Result<TraceField> {
    let g = &u2_bar.grid;
    let dx = g.dx1();
    let cmax = u1_bar.max_abs();
    let max_dt = if cmax > 0.0 { dx / cmax } else { f64::INFINITY };
    if dt > max_dt {
        return Err(Error::Cfl { dt, max_dt });
    }
    let n = g.n_x1;
    let interp_c = |x: f64| -> f64 {
        let (i0, i1, w) = periodic_cell(g, x);
        (1.0 - w) * u1_bar.values[i0] + w * u1_bar.values[i1]
    };
    let mut out = TraceField::zeros(g, &u2_bar.label);
    for i in 0..n {
        let x = g.x1(i);
        let xm = x - 0.5 * dt * u1_bar.values[i];
        let xd = x - dt * interp_c(xm);
        let (i0, i1, w) = periodic_cell(g, xd);
        out.values[i] = (1.0 - w) * u2_bar.values[i0] + w * u2_bar.values[i1];
    }
    Ok(out)
}

fn periodic_cell(g: &Grid, x: f64) -> (usize, usize, f64) {
    let span = 2.0 * g.l;
    let mut s = (x + g.l) / span;
    s -= s.floor();
    let pos = s * g.n_x1 as f64;
    let i0 = (pos.floor() as usize) % g.n_x1;
    let w = pos - pos.floor();
    ((i0) % g.n_x1, (i0 + 1) % g.n_x1, w)
}

fn bilinear(g: &Grid, v: &Array2<f64>, x: f64, y: f64) -> f64 {
    let (i0, i1, wx) = periodic_cell(g, x);
    let dy = g.dy();
    let fj = (y / dy).clamp(0.0, (g.n_y - 1) as f64);
    let j0 = (fj.floor() as usize).min(g.n_y - 2);
    let wy = fj - j0 as f64;
    (1.0 - wx) * ((1.0 - wy) * v[[i0, j0]] + wy * v[[i0, j0 + 1]])
        + wx * ((1.0 - wy) * v[[i1, j0]] + wy * v[[i1, j0 + 1]])
}

fn bilinear_pair(g: &Grid, v1: &Array2<f64>, v3: &Array2<f64>, x: f64, y: f64) -> (f64, f64) {
    (bilinear(g, v1, x, y), bilinear(g, v3, x, y))
}
