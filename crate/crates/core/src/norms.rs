//! Weighted analytic norms in the tangential variable.
//!
//! All three norms are built from the same table of weighted derivative
//! norms `N[m][j] = || <x1>^ell e^{a y^2} d1^m dy^j u ||`. The X norm sums
//! squares over j, the Y and Z norms sum the j-norms first and square after;
//! for m >= 3 every summand carries the factorial weight rho^{m-1}/(m-3)!,
//! the Y norm additionally (m-1)^{1/2} rho^{-1/2}, and the Z norm runs over
//! j in {1, 2} instead of {0, 1}. The derivative sums are truncated at
//! `m_max`; past that, spectral differentiation noise dominates at 64-bit
//! precision.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::ops::{self, WeightParams, MAX_TANGENTIAL_ORDER};
use crate::spectral;

#[derive(Debug, Clone, Copy)]
pub struct NormParams {
    pub rho: f64,
    pub a: f64,
    pub ell: f64,
    pub m_max: usize,
}

impl NormParams {
    pub fn new(rho: f64, a: f64, ell: f64, m_max: usize) -> Result<NormParams> {
        if !(rho > 0.0) {
            return Err(Error::Config(format!("rho must be positive, got {rho}")));
        }
        if m_max < 3 || m_max > MAX_TANGENTIAL_ORDER {
            return Err(Error::Config(format!(
                "m_max must lie in [3, {MAX_TANGENTIAL_ORDER}], got {m_max}"
            )));
        }
        // weight ranges are shared with WeightParams
        WeightParams::new(ell, a)?;
        Ok(NormParams { rho, a, ell, m_max })
    }

    fn weight(&self) -> WeightParams {
        WeightParams {
            ell: self.ell,
            a: self.a,
        }
    }

    /// rho^{m-1}/(m-3)! for m >= 3 (with 0! = 1).
    pub fn factorial_weight(&self, m: usize) -> f64 {
        let mut f = 1.0f64;
        for k in 2..=(m - 3) {
            f *= k as f64;
        }
        self.rho.powi(m as i32 - 1) / f
    }
}

/// Contribution of one tangential order to the squared X norm.
#[derive(Debug, Clone, Copy)]
pub struct PerOrder {
    pub m: usize,
    pub x_sq: f64,
}

#[derive(Debug, Clone)]
pub struct NormReport {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub per_m: Vec<PerOrder>,
    /// Set when the top octave of the tangential spectrum is not negligible,
    /// i.e. high derivatives are unresolved.
    pub tail_warning: Option<f64>,
}

/// Table of `|| w d1^m dy^j u ||` for m <= m_max, j <= 2.
pub struct DerivativeTable {
    pub norms: Array2<f64>,
    pub tail_ratio: f64,
}

pub fn derivative_table(u: &Field2D, p: &NormParams) -> DerivativeTable {
    let w = p.weight();
    let mut norms = Array2::zeros((p.m_max + 1, 3));
    let tail_ratio = spectral::spectral_tail_ratio(&u.values);
    for m in 0..=p.m_max {
        let dm = if m == 0 {
            u.clone()
        } else {
            Field2D::from_values(
                &u.grid,
                "dm",
                spectral::dx1_spectral(&u.values, u.grid.l, m),
            )
            .unwrap()
        };
        norms[[m, 0]] = ops::weighted_l2(&dm, &w);
        let d1 = ops::d_y(&dm, 1).unwrap();
        norms[[m, 1]] = ops::weighted_l2(&d1, &w);
        let d2 = ops::d_y(&dm, 2).unwrap();
        norms[[m, 2]] = ops::weighted_l2(&d2, &w);
    }
    DerivativeTable { norms, tail_ratio }
}

/// Threshold on the relative spectral tail above which norm reports carry a
/// resolution warning.
pub const TAIL_WARN_RATIO: f64 = 1e-8;

/// All three norms from one derivative table.
pub fn compute_norms(u: &Field2D, p: &NormParams) -> NormReport {
    let table = derivative_table(u, p);
    norms_from_table(&table, p)
}

pub fn norms_from_table(table: &DerivativeTable, p: &NormParams) -> NormReport {
    let n = &table.norms;
    let mut x_sq = 0.0;
    let mut y_sq = 0.0;
    let mut z_sq = 0.0;
    let mut per_m = Vec::with_capacity(p.m_max + 1);
    for m in 0..=p.m_max {
        let (wx, wy, wz) = if m <= 2 {
            (1.0, 1.0, 1.0)
        } else {
            let f = p.factorial_weight(m);
            (f, ((m - 1) as f64).sqrt() / p.rho.sqrt() * f, f)
        };
        let xm = wx * wx * (n[[m, 0]] * n[[m, 0]] + n[[m, 1]] * n[[m, 1]]);
        x_sq += xm;
        per_m.push(PerOrder { m, x_sq: xm });
        let ym = wy * (n[[m, 0]] + n[[m, 1]]);
        y_sq += ym * ym;
        let zm = wz * (n[[m, 1]] + n[[m, 2]]);
        z_sq += zm * zm;
    }
    NormReport {
        x: x_sq.sqrt(),
        y: y_sq.sqrt(),
        z: z_sq.sqrt(),
        per_m,
        tail_warning: if table.tail_ratio > TAIL_WARN_RATIO {
            Some(table.tail_ratio)
        } else {
            None
        },
    }
}

pub fn x_norm(u: &Field2D, p: &NormParams) -> NormReport {
    compute_norms(u, p)
}

pub fn y_norm(u: &Field2D, p: &NormParams) -> f64 {
    compute_norms(u, p).y
}

pub fn z_norm(u: &Field2D, p: &NormParams) -> f64 {
    compute_norms(u, p).z
}

/// Truncated analytic-radius estimate on the half plane:
/// sup over |alpha| <= alpha_max of tau^{|alpha|}/|alpha|! times the
/// weighted L2 norm of the mixed derivative, weight <(x1, x3)>^ell.
/// Returns the supremum and the maximizing multi-index.
pub fn a_tau_estimate(
    f: &Field2D,
    tau: f64,
    ell: f64,
    alpha_max: usize,
) -> Result<(f64, (usize, usize))> {
    if alpha_max > MAX_TANGENTIAL_ORDER {
        return Err(Error::OrderBounds {
            order: alpha_max,
            max: MAX_TANGENTIAL_ORDER,
        });
    }
    let mut best = 0.0;
    let mut arg = (0, 0);
    for a1 in 0..=alpha_max {
        let d1 = if a1 == 0 {
            f.clone()
        } else {
            Field2D::from_values(
                &f.grid,
                "da1",
                spectral::dx1_spectral(&f.values, f.grid.l, a1),
            )?
        };
        let mut cur = d1;
        for a3 in 0..=(alpha_max - a1) {
            if a3 > 0 {
                cur = ops::d_y(&cur, 1)?;
            }
            let total = a1 + a3;
            let mut fac = 1.0f64;
            for k in 2..=total {
                fac *= k as f64;
            }
            let value = tau.powi(total as i32) / fac * ops::weighted_l2_halfplane(&cur, ell);
            if value > best {
                best = value;
                arg = (a1, a3);
            }
        }
    }
    Ok((best, arg))
}

/// Weighted derivative stacks used by the energy diagnostics:
/// `phi_m = <x1>^ell e^{a y^2} d1^m dy u` and
/// `psi_m = <x1>^ell e^{a y^2} d1^m u`, for m = 0..m_max.
pub fn phi_stack(u: &Field2D, p: &NormParams) -> (Vec<Field2D>, Vec<Field2D>) {
    let mut phis = Vec::with_capacity(p.m_max + 1);
    let mut psis = Vec::with_capacity(p.m_max + 1);
    let weight = |f: &Field2D, label: String| -> Field2D {
        let mut out = f.clone();
        for i in 0..f.grid.n_x1 {
            let x = f.grid.x1(i);
            let px = (1.0 + x * x).powf(p.ell / 2.0);
            for j in 0..f.grid.n_y {
                let y = f.grid.y(j);
                out.values[[i, j]] *= px * (p.a * y * y).exp();
            }
        }
        out.relabel(&label)
    };
    for m in 0..=p.m_max {
        let dm = if m == 0 {
            u.clone()
        } else {
            Field2D::from_values(
                &u.grid,
                "dm",
                spectral::dx1_spectral(&u.values, u.grid.l, m),
            )
            .unwrap()
        };
        let omega_m = ops::d_y(&dm, 1).unwrap();
        phis.push(weight(&omega_m, format!("phi_{m}")));
        psis.push(weight(&dm, format!("psi_{m}")));
    }
    (phis, psis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn params() -> NormParams {
        NormParams::new(0.5, 0.25, 1.0, 5).unwrap()
    }

    #[test]
    fn zero_field_all_norms_zero() {
        let grid = Grid::new(64, 33, 10.0, 8.0).unwrap();
        let z = Field2D::zeros(&grid, "z");
        let r = compute_norms(&z, &params());
        assert_eq!(r.x, 0.0);
        assert_eq!(r.y, 0.0);
        assert_eq!(r.z, 0.0);
    }

    #[test]
    fn homogeneity() {
        let grid = Grid::new(128, 65, 10.0, 8.0).unwrap();
        let p = params();
        let u = Field2D::from_fn(&grid, "u", |x, y| (-2.0 * p.a * y * y - x * x).exp());
        let r1 = compute_norms(&u, &p);
        let r2 = compute_norms(&u.scaled(2.5), &p);
        assert!((r2.x - 2.5 * r1.x).abs() < 1e-10 * r1.x);
        assert!((r2.y - 2.5 * r1.y).abs() < 1e-10 * r1.y);
        assert!((r2.z - 2.5 * r1.z).abs() < 1e-10 * r1.z);
    }

    #[test]
    fn x_sq_equals_sum_of_per_m() {
        let grid = Grid::new(128, 65, 10.0, 8.0).unwrap();
        let p = params();
        let u = Field2D::from_fn(&grid, "u", |x, y| (-2.0 * p.a * y * y - x * x).exp());
        let r = compute_norms(&u, &p);
        let total: f64 = r.per_m.iter().map(|pm| pm.x_sq).sum();
        assert!((r.x * r.x - total).abs() < 1e-12 * total);
    }

    #[test]
    fn monotone_in_rho() {
        let grid = Grid::new(128, 65, 10.0, 8.0).unwrap();
        let u = Field2D::from_fn(&grid, "u", |x, y| (-0.5 * y * y - x * x).exp());
        let lo = NormParams::new(0.3, 0.25, 1.0, 6).unwrap();
        let hi = NormParams::new(0.6, 0.25, 1.0, 6).unwrap();
        let rl = compute_norms(&u, &lo);
        let rh = compute_norms(&u, &hi);
        assert!(rl.x <= rh.x);
        assert!(rl.y <= rh.y);
        assert!(rl.z <= rh.z);
    }

    #[test]
    fn phi_stack_reproduces_j1_part_of_x() {
        let grid = Grid::new(128, 65, 10.0, 8.0).unwrap();
        let p = params();
        let u = Field2D::from_fn(&grid, "u", |x, y| (-2.0 * p.a * y * y - x * x).exp());
        let (phis, _) = phi_stack(&u, &p);
        let table = derivative_table(&u, &p);
        let mut from_stack = 0.0;
        let mut from_table = 0.0;
        for m in 0..=p.m_max {
            let w = if m <= 2 { 1.0 } else { p.factorial_weight(m) };
            from_stack += w * w * phis[m].l2().powi(2);
            from_table += w * w * table.norms[[m, 1]] * table.norms[[m, 1]];
        }
        assert!(
            (from_stack - from_table).abs() < 1e-10 * from_table.max(1e-30),
            "{from_stack} vs {from_table}"
        );
    }

    #[test]
    fn a_tau_small_tau_maximized_at_zero_order() {
        let grid = Grid::new(64, 33, 10.0, 8.0).unwrap();
        let f = Field2D::from_fn(&grid, "g", |x, y| (-x * x - y * y).exp());
        let (_, arg) = a_tau_estimate(&f, 1e-3, 1.0, 3).unwrap();
        assert_eq!(arg, (0, 0));
    }

    #[test]
    fn a_tau_homogeneous() {
        let grid = Grid::new(64, 33, 10.0, 8.0).unwrap();
        let f = Field2D::from_fn(&grid, "g", |x, y| (-x * x - y * y).exp());
        let (v1, _) = a_tau_estimate(&f, 0.5, 1.0, 3).unwrap();
        let (v2, _) = a_tau_estimate(&f.scaled(4.0), 0.5, 1.0, 3).unwrap();
        assert!((v2 - 4.0 * v1).abs() < 1e-10 * v1);
    }
}

#[cfg(test)]
mod tail_tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn unresolved_spectrum_attaches_warning() {
        let grid = Grid::new(32, 17, 10.0, 8.0).unwrap();
        let p = NormParams::new(0.5, 0.25, 1.0, 4).unwrap();
        // alternating-sign field: all energy at the top octave
        let mut u = Field2D::zeros(&grid, "noise");
        for i in 0..grid.n_x1 {
            for j in 0..grid.n_y {
                u.values[[i, j]] = if i % 2 == 0 { 1.0 } else { -1.0 };
            }
        }
        let r = compute_norms(&u, &p);
        assert!(r.tail_warning.is_some());
        // smooth decaying field on a grid that resolves it: clean spectrum
        let fine = Grid::new(128, 17, 10.0, 8.0).unwrap();
        let s = Field2D::from_fn(&fine, "smooth", |x, y| (-x * x - y).exp());
        assert!(compute_norms(&s, &p).tail_warning.is_none());
    }
}
