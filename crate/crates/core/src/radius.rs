//! Analyticity-radius evolution, lifespan sizing and the energy budget.
//!
//! The radius obeys the scalar ODE rho' = -Z(t) with Z the auxiliary norm of
//! the current layer state; the update integrates the sampled Z
//! trapezoidally, which is exact for constant Z and second order otherwise.
//! The Gaussian-weight coefficient follows the linear schedule
//! a(t) = a0 - (2 a0^2 + C0) t.

use crate::error::{Error, Result};

/// Floor below which the weight schedule is clamped instead of crossing zero.
pub const A_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct RadiusTracker {
    pub t: Vec<f64>,
    pub rho: Vec<f64>,
    pub a: Vec<f64>,
    pub c0: f64,
    pub a0: f64,
    pub rho_floor: f64,
    pub aborted: bool,
    pub a_clamped: bool,
    z_prev: f64,
}

impl RadiusTracker {
    /// Initial radius used by the evolution.
    pub fn initial_rho(rho0: f64, tau: f64) -> f64 {
        (rho0 / 2.0).min(tau / 3.0)
    }

    pub fn new(rho_init: f64, a0: f64, c0: f64, rho_floor: f64, z0: f64) -> RadiusTracker {
        RadiusTracker {
            t: vec![0.0],
            rho: vec![rho_init],
            a: vec![a0],
            c0,
            a0,
            rho_floor,
            aborted: false,
            a_clamped: false,
            z_prev: z0,
        }
    }

    pub fn current_rho(&self) -> f64 {
        *self.rho.last().unwrap()
    }

    pub fn current_a(&self) -> f64 {
        *self.a.last().unwrap()
    }

    pub fn current_t(&self) -> f64 {
        *self.t.last().unwrap()
    }

    pub fn a_at(&self, t: f64) -> f64 {
        let a = self.a0 - (2.0 * self.a0 * self.a0 + self.c0) * t;
        if a < A_FLOOR {
            A_FLOOR
        } else {
            a
        }
    }

    /// Advance the radius by one step given the Z norm at the new time.
    pub fn evolve_radius(&mut self, z_value: f64, dt: f64) -> Result<()> {
        if z_value < 0.0 || !z_value.is_finite() {
            return Err(Error::Invalid(format!(
                "Z norm must be >= 0, got {z_value}"
            )));
        }
        let t_new = self.current_t() + dt;
        let rho_new = self.current_rho() - 0.5 * dt * (self.z_prev + z_value);
        self.z_prev = z_value;
        let a_new = self.a_at(t_new);
        if a_new == A_FLOOR {
            self.a_clamped = true;
        }
        if rho_new < self.rho_floor {
            self.aborted = true;
        }
        self.t.push(t_new);
        self.rho.push(rho_new);
        self.a.push(a_new);
        Ok(())
    }
}

/// Lifespan sizing from the initial norm:
/// T* = (3 x0^2 + x0^4)^{-1} min{rho0/2, tau/3}^2 / 4.
/// A zero initial norm returns +infinity.
pub fn lifespan_estimate(x0: f64, rho0: f64, tau: f64) -> f64 {
    if x0 == 0.0 {
        return f64::INFINITY;
    }
    let m = (rho0 / 2.0).min(tau / 3.0);
    0.25 * m * m / (3.0 * x0 * x0 + x0.powi(4))
}

/// One time sample of the budget input.
#[derive(Debug, Clone, Copy)]
pub struct BudgetSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub struct BudgetReport {
    /// |u(T)|_X^2 + int |u|_Z^2 - int rho' |u|_Y^2 at the final sample.
    pub lhs: f64,
    /// Initial energy |u0|_X^2 (evaluated at (rho0, a0)).
    pub x0_sq: f64,
    /// int ( |rho'| rho^-2 |u|_X + |u|_X^2 + |u|_X^4 ).
    pub s1: f64,
    /// int |u|_Z |u|_Y^2.
    pub s2: f64,
    /// Smallest constant making the budget inequality hold along the whole
    /// trajectory, clamped at zero.
    pub c_fit: f64,
    /// Unclamped supremum of (lhs - x0^2) / (s1 + s2) along the trajectory;
    /// negative when the inequality holds with room to spare. This is the
    /// quantity compared across grid resolutions.
    pub c_signed: f64,
}

/// Fit the smallest admissible constant in the energy inequality over a
/// sampled trajectory. Needs at least 3 samples. `x0_sq` is the squared
/// initial norm measured at the initial pair (rho0, a0).
pub fn energy_budget(samples: &[BudgetSample], x0_sq: f64) -> Result<BudgetReport> {
    if samples.len() < 3 {
        return Err(Error::Invalid(format!(
            "energy budget needs >= 3 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len();
    let mut int_z2 = 0.0; // int |u|_Z^2
    let mut int_rhop_y2 = 0.0; // int rho' |u|_Y^2
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut c_signed = f64::NEG_INFINITY;
    let mut lhs_final = 0.0;
    for i in 1..n {
        let dt = samples[i].t - samples[i - 1].t;
        if dt <= 0.0 {
            return Err(Error::TimeMismatch(samples[i - 1].t, samples[i].t));
        }
        let rho_p = (samples[i].rho - samples[i - 1].rho) / dt;
        let trap = |f: &dyn Fn(&BudgetSample, f64) -> f64| {
            0.5 * dt * (f(&samples[i - 1], rho_p) + f(&samples[i], rho_p))
        };
        int_z2 += trap(&|s, _| s.z * s.z);
        int_rhop_y2 += trap(&|s, rp| rp * s.y * s.y);
        s1 += trap(&|s, rp| {
            let rho2 = (s.rho * s.rho).max(1e-300);
            rp.abs() / rho2 * s.x + s.x * s.x + s.x.powi(4)
        });
        s2 += trap(&|s, _| s.z * s.y * s.y);
        let lhs = samples[i].x * samples[i].x + int_z2 - int_rhop_y2;
        lhs_final = lhs;
        let denom = s1 + s2;
        if denom > 0.0 {
            c_signed = c_signed.max((lhs - x0_sq) / denom);
        }
    }
    if !c_signed.is_finite() {
        c_signed = 0.0;
    }
    Ok(BudgetReport {
        lhs: lhs_final,
        x0_sq,
        s1,
        s2,
        c_fit: c_signed.max(0.0),
        c_signed,
    })
}
