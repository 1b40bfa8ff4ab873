//! Linearized Euler solve with inhomogeneous wall-normal boundary data.
//!
//! The correction velocity is advected by the background and stretched by
//! its gradient. The wall condition u3 = -g (g the layer trace) is carried
//! by a harmonic lifting field built mode by mode, with a cosh profile so
//! the lift's normal component also vanishes at the artificial top; the
//! remainder is projected onto divergence-free fields with homogeneous wall
//! data through the streamfunction of its curl. The zero tangential mode of
//! g, which cannot be lifted inside a periodic strip, becomes a uniform
//! normal through-flow.

use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::euler::OuterState;
use crate::field::{Field2D, TraceField};
use crate::grid::Grid;
use crate::spectral::{self, Parity};

#[derive(Debug, Clone)]
pub struct LinOuterState {
    pub u1: Field2D,
    pub u2: Field2D,
    pub u3: Field2D,
    pub p: Field2D,
    /// Wall datum carried by the state: u3(x1, 0) = -g(x1).
    pub g: TraceField,
    pub t: f64,
}

pub struct LinSolver {
    pub grid: Arc<Grid>,
    pub cfl: f64,
}

/// Harmonic lift with normal trace -g at the wall and zero normal trace at
/// the top. Returns (u1, u3).
pub fn harmonic_lift(grid: &Arc<Grid>, g: &TraceField) -> (Field2D, Field2D) {
    let n = grid.n_x1;
    let ny = grid.n_y;
    let ghat = spectral::trace_spectrum(g.values.as_slice().unwrap());
    let mut u1hat: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); n]; ny];
    let mut u3hat: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); n]; ny];
    let period = 2.0 * grid.l;
    for m in 0..n {
        let k = spectral::wavenumber(m, n, period);
        if m == 0 {
            // uniform through-flow carries the mean wall flux
            for j in 0..ny {
                u3hat[j][0] = -ghat[0];
            }
            continue;
        }
        let ka = k.abs();
        let y_span = grid.y_max;
        for j in 0..ny {
            let y = grid.y(j);
            // phi_hat = ghat * cosh(|k|(Y - y)) / (|k| sinh(|k| Y)), computed
            // with exponentials to avoid overflow for large |k| Y
            let e = |t: f64| t.exp();
            let denom = 1.0 - e(-2.0 * ka * y_span);
            let cosh_term = (e(-ka * y) + e(-ka * (2.0 * y_span - y))) / denom.max(1e-300);
            let sinh_term = (e(-ka * y) - e(-ka * (2.0 * y_span - y))) / denom.max(1e-300);
            // u3 = d3 phi = -ghat * sinh(|k|(Y-y))/sinh(|k| Y)
            u3hat[j][m] = -ghat[m] * sinh_term;
            // u1 = d1 phi = ik ghat cosh(...)/(|k| sinh(|k| Y))
            u1hat[j][m] = Complex64::new(0.0, k / ka) * ghat[m] * cosh_term;
        }
    }
    let mut u1 = Field2D::zeros(grid, "u1_lift");
    let mut u3 = Field2D::zeros(grid, "u3_lift");
    let mut buf: Vec<Complex64> = vec![Complex64::default(); n];
    for j in 0..ny {
        buf.copy_from_slice(&u1hat[j]);
        spectral::ifft_in_place(&mut buf);
        for i in 0..n {
            u1.values[[i, j]] = buf[i].re;
        }
        buf.copy_from_slice(&u3hat[j]);
        spectral::ifft_in_place(&mut buf);
        for i in 0..n {
            u3.values[[i, j]] = buf[i].re;
        }
    }
    (u1, u3)
}

impl LinSolver {
    pub fn new(grid: &Arc<Grid>) -> Result<LinSolver> {
        if !grid.doubling_ok() {
            return Err(Error::Invalid(format!(
                "linearized solve needs n_y - 1 to be a power of two, got n_y = {}",
                grid.n_y
            )));
        }
        Ok(LinSolver {
            grid: grid.clone(),
            cfl: 0.5,
        })
    }

    /// Assemble a compatible state from a homogeneous streamfunction part, a
    /// second component, and the wall datum g.
    pub fn state_from_parts(
        &self,
        psi_w: &Field2D,
        u2: &Field2D,
        g: &TraceField,
        t: f64,
    ) -> Result<LinOuterState> {
        let w1 = spectral::d3_parity(&psi_w.values, self.grid.y_max, 1, Parity::Odd);
        let w3 = -spectral::dx1_spectral(&psi_w.values, self.grid.l, 1);
        let (l1, l3) = harmonic_lift(&self.grid, g);
        let mut u1 = Field2D::from_values(&self.grid, "u1_I1", w1)?;
        let mut u3 = Field2D::from_values(&self.grid, "u3_I1", w3)?;
        u1.values += &l1.values;
        u3.values += &l3.values;
        self.finalize_state(u1, u2.clone(), u3, g.clone(), t)
    }

    fn finalize_state(
        &self,
        u1: Field2D,
        u2: Field2D,
        mut u3: Field2D,
        g: TraceField,
        t: f64,
    ) -> Result<LinOuterState> {
        // wall row is the lift's by construction; pin it exactly
        for i in 0..self.grid.n_x1 {
            u3.values[[i, 0]] = -g.values[i];
        }
        let p = Field2D::zeros(&self.grid, "p_I1");
        Ok(LinOuterState {
            u1: u1.relabel("u1_I1"),
            u2: u2.relabel("u2_I1"),
            u3: u3.relabel("u3_I1"),
            p,
            g,
            t,
        })
    }

    pub fn cfl_limit(&self, s: &OuterState) -> f64 {
        let umax = s.u1.max_abs().max(s.u3.max_abs()).max(1e-14);
        self.cfl * self.grid.dx1().min(self.grid.dy()) / umax
    }

    /// Spatial derivatives of the correction state: the homogeneous part
    /// goes through the parity transforms, the lift analytically.
    fn gradients(
        &self,
        ls: &LinOuterState,
    ) -> (
        (Array2<f64>, Array2<f64>),
        (Array2<f64>, Array2<f64>),
        (Array2<f64>, Array2<f64>),
    ) {
        let (l1, l3) = harmonic_lift(&self.grid, &ls.g);
        let w1 = &ls.u1.values - &l1.values;
        let w3 = &ls.u3.values - &l3.values;

        let d1w1 = spectral::dx1_spectral(&w1, self.grid.l, 1);
        let d3w1 = spectral::d3_parity(&w1, self.grid.y_max, 1, Parity::Even);
        let d1w3 = spectral::dx1_spectral(&w3, self.grid.l, 1);
        let d3w3 = spectral::d3_parity(&w3, self.grid.y_max, 1, Parity::Odd);

        // lift derivatives: the lift is a gradient of a harmonic potential,
        // d1 l1 = d3 l3 * (-1)... computed spectrally mode by mode instead.
        let (d1l1, d3l1, d1l3, d3l3) = self.lift_gradients(&ls.g);

        let d1u2 = spectral::dx1_spectral(&ls.u2.values, self.grid.l, 1);
        let d3u2 = spectral::d3_parity(&ls.u2.values, self.grid.y_max, 1, Parity::Even);

        (
            (d1w1 + &d1l1, d3w1 + &d3l1),
            (d1u2, d3u2),
            (d1w3 + &d1l3, d3w3 + &d3l3),
        )
    }

    fn lift_gradients(
        &self,
        g: &TraceField,
    ) -> (Array2<f64>, Array2<f64>, Array2<f64>, Array2<f64>) {
        let n = self.grid.n_x1;
        let ny = self.grid.n_y;
        let ghat = spectral::trace_spectrum(g.values.as_slice().unwrap());
        let period = 2.0 * self.grid.l;
        let mut d1l1 = Array2::zeros((n, ny));
        let mut d3l1 = Array2::zeros((n, ny));
        let mut d1l3 = Array2::zeros((n, ny));
        let mut d3l3 = Array2::zeros((n, ny));
        let mut row1: Vec<Complex64> = vec![Complex64::default(); n];
        let mut row2: Vec<Complex64> = vec![Complex64::default(); n];
        let mut row3: Vec<Complex64> = vec![Complex64::default(); n];
        let mut row4: Vec<Complex64> = vec![Complex64::default(); n];
        for j in 0..ny {
            let y = self.grid.y(j);
            for m in 0..n {
                if m == 0 {
                    row1[0] = Complex64::default();
                    row2[0] = Complex64::default();
                    row3[0] = Complex64::default();
                    row4[0] = Complex64::default();
                    continue;
                }
                let k = spectral::wavenumber(m, n, period);
                let ka = k.abs();
                let y_span = self.grid.y_max;
                let e = |t: f64| t.exp();
                let denom = (1.0 - e(-2.0 * ka * y_span)).max(1e-300);
                let cosh_term = (e(-ka * y) + e(-ka * (2.0 * y_span - y))) / denom;
                let sinh_term = (e(-ka * y) - e(-ka * (2.0 * y_span - y))) / denom;
                let u1h = Complex64::new(0.0, k / ka) * ghat[m] * cosh_term;
                let u3h = -ghat[m] * sinh_term;
                let ik = Complex64::new(0.0, k);
                row1[m] = ik * u1h; // d1 l1
                row2[m] = Complex64::new(0.0, k / ka) * ghat[m] * (-ka) * sinh_term; // d3 l1
                row3[m] = ik * u3h; // d1 l3
                row4[m] = ghat[m] * ka * cosh_term; // d3 l3
            }
            let fill = |hat: &mut Vec<Complex64>, target: &mut Array2<f64>| {
                let mut buf = hat.clone();
                spectral::ifft_in_place(&mut buf);
                for i in 0..n {
                    target[[i, j]] = buf[i].re;
                }
            };
            fill(&mut row1, &mut d1l1);
            fill(&mut row2, &mut d3l1);
            fill(&mut row3, &mut d1l3);
            fill(&mut row4, &mut d3l3);
        }
        (d1l1, d3l1, d1l3, d3l3)
    }

    /// One explicit RK3 step of the linearized system, followed by the
    /// lift-plus-projection that restores the boundary and divergence
    /// invariants. `bl_trace` is the layer value u(., 0) whose negative
    /// becomes the new wall datum.
    pub fn step_linearized(
        &self,
        ls: &LinOuterState,
        s: &OuterState,
        bl_trace: &TraceField,
        dt: f64,
    ) -> Result<LinOuterState> {
        if (ls.t - s.t).abs() > 1e-12 {
            return Err(Error::TimeMismatch(ls.t, s.t));
        }
        let max_dt = self.cfl_limit(s);
        if dt > max_dt {
            return Err(Error::Cfl { dt, max_dt });
        }

        // background gradients
        let b1 = &s.u1.values;
        let b3 = &s.u3.values;
        let d1b1 = spectral::dx1_spectral(b1, self.grid.l, 1);
        let d3b1 = spectral::d3_parity(b1, self.grid.y_max, 1, Parity::Even);
        let d1b2 = spectral::dx1_spectral(&s.u2.values, self.grid.l, 1);
        let d3b2 = spectral::d3_parity(&s.u2.values, self.grid.y_max, 1, Parity::Even);
        let d1b3 = spectral::dx1_spectral(b3, self.grid.l, 1);
        let d3b3 = spectral::d3_parity(b3, self.grid.y_max, 1, Parity::Odd);

        let rhs = |state: &LinOuterState| -> (Array2<f64>, Array2<f64>, Array2<f64>) {
            let ((d1u1, d3u1), (d1u2, d3u2), (d1u3, d3u3)) = self.gradients(state);
            let v1 = &state.u1.values;
            let v2 = &state.u2.values;
            let v3 = &state.u3.values;
            let mut r1 = Array2::zeros(v1.dim());
            let mut r2 = Array2::zeros(v1.dim());
            let mut r3 = Array2::zeros(v1.dim());
            let _ = v2;
            for i in 0..self.grid.n_x1 {
                for j in 0..self.grid.n_y {
                    let adv = |du1: &Array2<f64>, du3: &Array2<f64>| {
                        b1[[i, j]] * du1[[i, j]] + b3[[i, j]] * du3[[i, j]]
                    };
                    r1[[i, j]] = -(adv(&d1u1, &d3u1)
                        + v1[[i, j]] * d1b1[[i, j]]
                        + v3[[i, j]] * d3b1[[i, j]]);
                    r2[[i, j]] = -(adv(&d1u2, &d3u2)
                        + v1[[i, j]] * d1b2[[i, j]]
                        + v3[[i, j]] * d3b2[[i, j]]);
                    r3[[i, j]] = -(adv(&d1u3, &d3u3)
                        + v1[[i, j]] * d1b3[[i, j]]
                        + v3[[i, j]] * d3b3[[i, j]]);
                }
            }
            (r1, r2, r3)
        };

        let mk = |u1: Array2<f64>, u2: Array2<f64>, u3: Array2<f64>, t: f64| LinOuterState {
            u1: Field2D::from_values(&self.grid, "u1_I1", u1).unwrap(),
            u2: Field2D::from_values(&self.grid, "u2_I1", u2).unwrap(),
            u3: Field2D::from_values(&self.grid, "u3_I1", u3).unwrap(),
            p: Field2D::zeros(&self.grid, "p_I1"),
            g: ls.g.clone(),
            t,
        };

        let (k1a, k1b, k1c) = rhs(ls);
        let s1 = mk(
            &ls.u1.values + &(dt * &k1a),
            &ls.u2.values + &(dt * &k1b),
            &ls.u3.values + &(dt * &k1c),
            ls.t + dt,
        );
        let (k2a, k2b, k2c) = rhs(&s1);
        let s2 = mk(
            0.75 * &ls.u1.values + 0.25 * (&s1.u1.values + &(dt * &k2a)),
            0.75 * &ls.u2.values + 0.25 * (&s1.u2.values + &(dt * &k2b)),
            0.75 * &ls.u3.values + 0.25 * (&s1.u3.values + &(dt * &k2c)),
            ls.t + 0.5 * dt,
        );
        let (k3a, k3b, k3c) = rhs(&s2);
        let u1_star = (1.0 / 3.0) * &ls.u1.values + (2.0 / 3.0) * (&s2.u1.values + &(dt * &k3a));
        let u2_star = (1.0 / 3.0) * &ls.u2.values + (2.0 / 3.0) * (&s2.u2.values + &(dt * &k3b));
        let u3_star = (1.0 / 3.0) * &ls.u3.values + (2.0 / 3.0) * (&s2.u3.values + &(dt * &k3c));

        // new wall datum from the most recent layer state; g stores u(., 0)
        // and the wall condition is u3 = -g
        let g_new = TraceField {
            grid: self.grid.clone(),
            values: bl_trace.values.clone(),
            label: "g".into(),
        };
        let (l1, l3) = harmonic_lift(&self.grid, &g_new);
        let w1 = &u1_star - &l1.values;
        let w3 = &u3_star - &l3.values;
        let mean_u1 = w1.sum() / w1.len() as f64;

        // Leray projection of the homogeneous remainder through its curl
        let d1w3 = spectral::dx1_spectral(&w3, self.grid.l, 1);
        let d3w1 = spectral::d3_parity(&w1, self.grid.y_max, 1, Parity::Even);
        let omega_w = &d1w3 - &d3w1;
        let psi = spectral::poisson_doubled(&omega_w, self.grid.l, self.grid.y_max, Parity::Odd);
        let mut w1_df = spectral::d3_parity(&psi, self.grid.y_max, 1, Parity::Odd);
        let w3_df = -spectral::dx1_spectral(&psi, self.grid.l, 1);
        w1_df += mean_u1;

        let u1_new = Field2D::from_values(&self.grid, "u1_I1", &w1_df + &l1.values)?;
        let u3_new = Field2D::from_values(&self.grid, "u3_I1", &w3_df + &l3.values)?;
        let u2_new = Field2D::from_values(&self.grid, "u2_I1", u2_star)?;
        if !u1_new.all_finite() || !u3_new.all_finite() {
            return Err(Error::NonFinite {
                label: "u_I1".into(),
                step: 0,
            });
        }
        let mut out = self.finalize_state(u1_new, u2_new, u3_new, g_new, ls.t + dt)?;
        out.p = self.pressure_diagnostic(&out, s)?;
        Ok(out)
    }

    /// Even-extension Poisson diagnostic for the correction pressure.
    fn pressure_diagnostic(&self, ls: &LinOuterState, s: &OuterState) -> Result<Field2D> {
        let d1b1 = spectral::dx1_spectral(&s.u1.values, self.grid.l, 1);
        let d3b1 = spectral::d3_parity(&s.u1.values, self.grid.y_max, 1, Parity::Even);
        let d1b3 = spectral::dx1_spectral(&s.u3.values, self.grid.l, 1);
        let d3b3 = spectral::d3_parity(&s.u3.values, self.grid.y_max, 1, Parity::Odd);
        let ((d1u1, d3u1), _, (d1u3, d3u3)) = self.gradients(ls);
        let mut rhs = Array2::zeros(d1b1.dim());
        for i in 0..self.grid.n_x1 {
            for j in 0..self.grid.n_y {
                rhs[[i, j]] = 2.0
                    * (d1b1[[i, j]] * d1u1[[i, j]]
                        + d1b3[[i, j]] * d3u1[[i, j]]
                        + d3b1[[i, j]] * d1u3[[i, j]]
                        + d3b3[[i, j]] * d3u3[[i, j]]);
            }
        }
        let p = spectral::poisson_doubled(&rhs, self.grid.l, self.grid.y_max, Parity::Even);
        Field2D::from_values(&self.grid, "p_I1", p)
    }

    /// Order -1 pressure: potential of (-u3, u1) for the correction fields,
    /// spectral antiderivatives with the uniform modes removed. Returns the
    /// potential and the size of the dropped uniform component (a domain
    /// truncation defect).
    pub fn reconstruct_p_minus1(&self, ls: &LinOuterState) -> (Field2D, f64) {
        // d1 p = -u3 along the wall row, then d3 p = u1 upward, both spectral.
        let wall = {
            let mut row = Array2::zeros((self.grid.n_x1, 1));
            for i in 0..self.grid.n_x1 {
                row[[i, 0]] = -ls.u3.values[[i, 0]];
            }
            row
        };
        let (wall_int, defect_x) = spectral::antiderivative_x1_spectral(&wall, self.grid.l);
        // vertical leg: spectral antiderivative via parity transform of u1
        let n = self.grid.n_x1;
        let ny = self.grid.n_y;
        let m = 2 * (ny - 1);
        let period = 2.0 * self.grid.y_max;
        let mut out = Array2::zeros((n, ny));
        let mut buf: Vec<Complex64> = vec![Complex64::default(); m];
        let mut defect_y = 0.0f64;
        for i in 0..n {
            let col: Vec<f64> = (0..ny).map(|j| ls.u1.values[[i, j]]).collect();
            let ext = spectral::extend_parity(&col, Parity::Even);
            for (b, v) in buf.iter_mut().zip(ext.iter()) {
                *b = Complex64::new(*v, 0.0);
            }
            spectral::fft_in_place(&mut buf);
            defect_y = defect_y.max(buf[0].norm() / m as f64);
            buf[0] = Complex64::default();
            for mm in 1..m {
                let k = spectral::wavenumber(mm, m, period);
                if mm == m / 2 {
                    buf[mm] = Complex64::default();
                } else {
                    buf[mm] /= Complex64::new(0.0, k);
                }
            }
            spectral::ifft_in_place(&mut buf);
            let base = buf[0].re;
            for j in 0..ny {
                out[[i, j]] = wall_int[[i, 0]] + buf[j].re - base;
            }
        }
        let mut p = Field2D::from_values(&self.grid, "p_Im1", out).unwrap();
        let corner = p.values[[0, 0]];
        p.values.mapv_inplace(|v| v - corner);
        (p, defect_x.max(defect_y))
    }

    /// Weighted divergence norm, lift included.
    pub fn divergence_norm(&self, ls: &LinOuterState, ell: f64) -> f64 {
        let ((d1u1, _), _, (_, d3u3)) = self.gradients(ls);
        let div = Field2D::from_values(&self.grid, "div", &d1u1 + &d3u3).unwrap();
        crate::ops::weighted_l2_halfplane(&div, ell)
    }
}
