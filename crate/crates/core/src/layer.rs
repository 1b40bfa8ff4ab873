//! Prandtl-like boundary-layer solve.
//!
//! The scalar unknown is the order-sqrt(eps) wall-normal layer velocity u;
//! the tangential layer velocity v is slaved to it through the nonlocal
//! relation v = -int_{-L}^{x1} dy u. One step treats wall-normal diffusion
//! with Crank-Nicolson (tridiagonal solve per tangential column, Neumann
//! ghost at the wall, homogeneous Dirichlet at the artificial top) and
//! everything else explicitly, including the small tangential
//! regularization eps1 d1^2.
//!
//! Tangential derivatives of v itself are never formed spectrally: v does
//! not decay on the right, so they go through the defining relation
//! d1 v = -dy u instead.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::euler::TraceSet;
use crate::field::{Field2D, TraceField};
use crate::norms::{self, NormParams};
use crate::ops::{self, DecayWarning};
use crate::spectral;

/// Tangential regularization strength and the sweep schedule.
#[derive(Debug, Clone)]
pub struct RegularizationParams {
    pub eps1: f64,
    pub schedule: Vec<f64>,
}

impl RegularizationParams {
    pub fn new(eps1: f64, schedule: Vec<f64>) -> Result<RegularizationParams> {
        if !(eps1 > 0.0) {
            return Err(Error::Config(format!("eps1 must be positive, got {eps1}")));
        }
        if !schedule.windows(2).all(|w| w[1] < w[0]) {
            return Err(Error::Config(
                "eps1 schedule must be strictly decreasing".into(),
            ));
        }
        Ok(RegularizationParams { eps1, schedule })
    }
}

/// Which parts of the explicit operator act; all on in production, selective
/// in the operator-splitting checks.
#[derive(Debug, Clone, Copy)]
pub struct TermFlags {
    pub tangential_diffusion: bool,
    pub stretch: bool,
    pub tangential_advection: bool,
    pub vertical_advection: bool,
    pub zeroth_order: bool,
    pub nonlocal: bool,
}

impl TermFlags {
    pub fn all() -> TermFlags {
        TermFlags {
            tangential_diffusion: true,
            stretch: true,
            tangential_advection: true,
            vertical_advection: true,
            zeroth_order: true,
            nonlocal: true,
        }
    }

    pub fn none() -> TermFlags {
        TermFlags {
            tangential_diffusion: false,
            stretch: false,
            tangential_advection: false,
            vertical_advection: false,
            zeroth_order: false,
            nonlocal: false,
        }
    }
}

/// Extra inputs for one step.
pub struct StepOpts<'a> {
    pub terms: TermFlags,
    /// Forcing evaluated at the half step, added to the explicit part.
    pub source: Option<&'a Field2D>,
    /// Override of the wall Neumann datum; by default it is the tangential
    /// derivative of the u1 trace.
    pub neumann: Option<&'a TraceField>,
}

impl Default for StepOpts<'_> {
    fn default() -> Self {
        StepOpts {
            terms: TermFlags::all(),
            source: None,
            neumann: None,
        }
    }
}

/// The derived tangential layer velocity: v = -int dy u, zero at the left
/// edge. Decay warnings from the integral are propagated.
pub fn reconstruct_v(u: &Field2D) -> (Field2D, Option<DecayWarning>) {
    let dyu = ops::d_y(u, 1).unwrap();
    let (int, warn) = ops::integrate_x1_from_left(&dyu);
    (int.scaled(-1.0).relabel("v_B0_1"), warn)
}

/// Same, but with the wall row of dy u replaced by the imposed Neumann
/// datum. This is the form the coupled pipeline uses: the scheme carries the
/// wall derivative in its ghost row, so the one-sided stencil value is not
/// the one the discrete solution obeys.
pub fn reconstruct_v_with_wall(
    u: &Field2D,
    wall_dyu: &TraceField,
) -> (Field2D, Option<DecayWarning>) {
    let mut dyu = ops::d_y(u, 1).unwrap();
    for i in 0..u.grid.n_x1 {
        dyu.values[[i, 0]] = wall_dyu.values[i];
    }
    let (int, warn) = ops::integrate_x1_from_left(&dyu);
    (int.scaled(-1.0).relabel("v_B0_1"), warn)
}

/// Neumann datum the regularized problem imposes at the wall: d1 of the u1
/// trace.
pub fn neumann_from_traces(traces: &TraceSet) -> TraceField {
    ops::d_x1_trace(&traces.u1_bar, 1)
        .unwrap()
        .relabel("wall_dyu")
}

/// Advective stability limit of the explicit part.
pub fn cfl_limit(u: &Field2D, v: &Field2D, traces: &TraceSet, reg: &RegularizationParams) -> f64 {
    let g = &u.grid;
    let mut sx = 0.0f64;
    let mut sy = 0.0f64;
    let u0 = u.wall_row("u0");
    for i in 0..g.n_x1 {
        for j in 0..g.n_y {
            let tv = (v.values[[i, j]] + traces.u1_bar.values[i]).abs();
            sx = sx.max(tv);
            let vv =
                (u.values[[i, j]] - u0.values[i]).abs() + traces.d3u3_bar.values[i].abs() * g.y(j);
            sy = sy.max(vv);
        }
    }
    let adv = 1.0 / (sx / g.dx1() + sy / g.dy() + 1e-14);
    let kmax = std::f64::consts::PI * (g.n_x1 / 2) as f64 / g.l;
    let diff = 2.0 / (reg.eps1 * kmax * kmax + 1e-14);
    0.9 * adv.min(diff)
}

/// One IMEX step of the regularized layer problem.
pub fn step_bl(
    u: &Field2D,
    traces: &TraceSet,
    reg: &RegularizationParams,
    dt: f64,
) -> Result<Field2D> {
    step_bl_with(u, traces, reg, dt, &StepOpts::default())
}

pub fn step_bl_with(
    u: &Field2D,
    traces: &TraceSet,
    reg: &RegularizationParams,
    dt: f64,
    opts: &StepOpts,
) -> Result<Field2D> {
    let g = &u.grid;
    let (nx, ny) = (g.n_x1, g.n_y);
    let dy = g.dy();

    let neumann_default;
    let neumann = match opts.neumann {
        Some(t) => t,
        None => {
            neumann_default = neumann_from_traces(traces);
            &neumann_default
        }
    };
    let (v, _warn) = reconstruct_v_with_wall(u, neumann);

    let max_dt = cfl_limit(u, &v, traces, reg);
    if dt > max_dt {
        return Err(Error::Cfl { dt, max_dt });
    }

    let explicit = explicit_terms(u, &v, traces, reg, neumann, &opts.terms);

    // Crank-Nicolson in dy^2: (I - dt/2 A) u_new = (I + dt/2 A) u_old
    //                         + dt * (explicit + source) + boundary terms.
    // A has the Neumann ghost folded in at the wall row; the constant ghost
    // contribution -2 b / dy lands on the right-hand side with weight dt
    // (b held over the step; the coupling is explicit in time anyway).
    let r = dt / (2.0 * dy * dy);
    let mut rhs = Array2::<f64>::zeros((nx, ny));
    for i in 0..nx {
        // wall row: A u = (2 u1 - 2 u0)/dy^2 - 2 b/dy; the ghost part enters
        // both halves of the average, so its weight is the full dt
        rhs[[i, 0]] = u.values[[i, 0]] + r * (2.0 * u.values[[i, 1]] - 2.0 * u.values[[i, 0]])
            - 2.0 * dt * neumann.values[i] / dy
            + dt * explicit[[i, 0]];
        for j in 1..ny - 1 {
            rhs[[i, j]] = u.values[[i, j]]
                + r * (u.values[[i, j + 1]] - 2.0 * u.values[[i, j]] + u.values[[i, j - 1]])
                + dt * explicit[[i, j]];
        }
        rhs[[i, ny - 1]] = 0.0; // homogeneous Dirichlet at the top
    }
    if let Some(src) = opts.source {
        for i in 0..nx {
            for j in 0..ny - 1 {
                rhs[[i, j]] += dt * src.values[[i, j]];
            }
        }
    }

    // tridiagonal solve per column; coefficients identical across columns
    let mut lower = vec![0.0; ny];
    let mut diag = vec![0.0; ny];
    let mut upper = vec![0.0; ny];
    diag[0] = 1.0 + 2.0 * r;
    upper[0] = -2.0 * r;
    for j in 1..ny - 1 {
        lower[j] = -r;
        diag[j] = 1.0 + 2.0 * r;
        upper[j] = -r;
    }
    diag[ny - 1] = 1.0;
    lower[ny - 1] = 0.0;

    let mut out = Array2::<f64>::zeros((nx, ny));
    let mut cp = vec![0.0; ny];
    let mut dp = vec![0.0; ny];
    for i in 0..nx {
        // Thomas algorithm
        cp[0] = upper[0] / diag[0];
        dp[0] = rhs[[i, 0]] / diag[0];
        for j in 1..ny {
            let m = diag[j] - lower[j] * cp[j - 1];
            cp[j] = upper[j] / m;
            dp[j] = (rhs[[i, j]] - lower[j] * dp[j - 1]) / m;
        }
        out[[i, ny - 1]] = dp[ny - 1];
        for j in (0..ny - 1).rev() {
            out[[i, j]] = dp[j] - cp[j] * out[[i, j + 1]];
        }
    }

    let f = Field2D::from_values(g, &u.label, out)?;
    if !f.all_finite() {
        return Err(Error::NonFinite {
            label: u.label.clone(),
            step: 0,
        });
    }
    Ok(f)
}

fn explicit_terms(
    u: &Field2D,
    v: &Field2D,
    traces: &TraceSet,
    reg: &RegularizationParams,
    neumann: &TraceField,
    terms: &TermFlags,
) -> Array2<f64> {
    let g = &u.grid;
    let (nx, ny) = (g.n_x1, g.n_y);
    let mut e = Array2::<f64>::zeros((nx, ny));
    let _ = neumann;

    let d1u = spectral::dx1_spectral(&u.values, g.l, 1);
    let mut dyu = ops::d_y(u, 1).unwrap();
    // the scheme's wall derivative is the ghost one
    for i in 0..nx {
        dyu.values[[i, 0]] = neumann.values[i];
    }
    let u0 = u.wall_row("u0");
    let d1u0 = ops::d_x1_trace(&u0, 1).unwrap();

    if terms.tangential_diffusion {
        let d11u = spectral::dx1_spectral(&u.values, g.l, 2);
        for i in 0..nx {
            for j in 0..ny {
                e[[i, j]] += reg.eps1 * d11u[[i, j]];
            }
        }
    }
    for i in 0..nx {
        let dbar = traces.d3u3_bar.values[i];
        let d1dbar = traces.d1d3u3_bar.values[i];
        let u1b = traces.u1_bar.values[i];
        for j in 0..ny {
            let y = g.y(j);
            if terms.stretch {
                e[[i, j]] -= dbar * y * dyu.values[[i, j]];
            }
            if terms.tangential_advection {
                e[[i, j]] -= (v.values[[i, j]] + u1b) * d1u[[i, j]];
            }
            if terms.vertical_advection {
                e[[i, j]] -= (u.values[[i, j]] - u0.values[i]) * dyu.values[[i, j]];
            }
            if terms.zeroth_order {
                e[[i, j]] -= dbar * u.values[[i, j]];
            }
            if terms.nonlocal {
                e[[i, j]] -= (d1u0.values[i] + y * d1dbar) * v.values[[i, j]];
            }
        }
    }
    e
}

/// Total layer tangential velocity: v plus the broadcast u1 trace.
pub fn assemble_u1_total(u: &Field2D, traces: &TraceSet) -> (Field2D, Option<DecayWarning>) {
    let (v, warn) = reconstruct_v(u);
    let mut out = v;
    for i in 0..u.grid.n_x1 {
        for j in 0..u.grid.n_y {
            out.values[[i, j]] += traces.u1_bar.values[i];
        }
    }
    (out.relabel("U_p0_1"), warn)
}

/// Same total, with the wall row of dy u replaced by the Neumann datum the
/// scheme imposes. This is the form coupled runs use; the wall identity
/// (the total vanishing at y = 0) holds for it at quadrature accuracy.
pub fn assemble_u1_total_with_wall(
    u: &Field2D,
    traces: &TraceSet,
) -> (Field2D, Option<DecayWarning>) {
    let neumann = neumann_from_traces(traces);
    let (v, warn) = reconstruct_v_with_wall(u, &neumann);
    let mut out = v;
    for i in 0..u.grid.n_x1 {
        for j in 0..u.grid.n_y {
            out.values[[i, j]] += traces.u1_bar.values[i];
        }
    }
    (out.relabel("U_p0_1"), warn)
}

/// Total layer wall-normal velocity: u plus the linearized trace plus the
/// linear-in-y lift of the wall-normal background shear.
pub fn assemble_u3_total(u: &Field2D, trace_lin_u3: &TraceField, traces: &TraceSet) -> Field2D {
    let mut out = u.clone().relabel("U_p1_3");
    for i in 0..u.grid.n_x1 {
        for j in 0..u.grid.n_y {
            out.values[[i, j]] += trace_lin_u3.values[i] + u.grid.y(j) * traces.d3u3_bar.values[i];
        }
    }
    out
}

/// Tangential derivative of the total layer tangential velocity, through the
/// defining relation d1 v = -dy u (v itself is not tangentially decaying).
pub fn d1_u1_total(u: &Field2D, traces: &TraceSet) -> Field2D {
    let mut out = ops::d_y(u, 1).unwrap().scaled(-1.0);
    let neumann = neumann_from_traces(traces);
    for i in 0..u.grid.n_x1 {
        out.values[[i, 0]] = -neumann.values[i];
        for j in 0..u.grid.n_y {
            out.values[[i, j]] += neumann.values[i];
        }
    }
    out.relabel("d1_U_p0_1")
}

/// Recover the layer pressure gradient from the totals:
/// d1 p = -dt U1 + dy^2 U1 - U1 d1 U1 - U3 dy U1 - d1p0_bar.
pub fn recover_pressure_gradient(
    u1_prev: &Field2D,
    u1_next: &Field2D,
    u_next: &Field2D,
    u3_total: &Field2D,
    traces: &TraceSet,
    dt: f64,
) -> Result<Field2D> {
    if dt == 0.0 {
        return Err(Error::Invalid("pressure recovery needs dt > 0".into()));
    }
    let g = &u1_next.grid;
    let dy1 = ops::d_y(u1_next, 1)?;
    let dy2 = ops::d_y(u1_next, 2)?;
    let d1u1 = d1_u1_total(u_next, traces);
    let mut out = Field2D::zeros(g, "d1p_B0");
    for i in 0..g.n_x1 {
        for j in 0..g.n_y {
            let dtu = (u1_next.values[[i, j]] - u1_prev.values[[i, j]]) / dt;
            out.values[[i, j]] = -dtu + dy2.values[[i, j]]
                - u1_next.values[[i, j]] * d1u1.values[[i, j]]
                - u3_total.values[[i, j]] * dy1.values[[i, j]]
                - traces.d1p0_bar.values[i];
        }
    }
    Ok(out)
}

/// Max-abs of the discrete layer incompressibility defect
/// D+ v + avg(dy u) on tangential midpoints (wrap column excluded). Zero to
/// round-off by construction of v.
pub fn fluctuation_divergence(u: &Field2D, v: &Field2D) -> f64 {
    fluctuation_divergence_with(u, v, None)
}

/// Same defect with the wall row of dy u replaced by the Neumann datum used
/// when v was built through [`reconstruct_v_with_wall`].
pub fn fluctuation_divergence_with(u: &Field2D, v: &Field2D, wall_dyu: Option<&TraceField>) -> f64 {
    let mut dyu = ops::d_y(u, 1).unwrap();
    if let Some(w) = wall_dyu {
        for i in 0..u.grid.n_x1 {
            dyu.values[[i, 0]] = w.values[i];
        }
    }
    let dv = ops::diff_forward_x1(v);
    let aw = ops::avg_forward_x1(&dyu);
    let mut m = 0.0f64;
    for i in 0..u.grid.n_x1 - 1 {
        for j in 0..u.grid.n_y {
            m = m.max((dv.values[[i, j]] + aw.values[[i, j]]).abs());
        }
    }
    m
}

/// Solve the layer for each regularization strength in the schedule against
/// a frozen trace history and measure successive differences in the X norm
/// at the final time.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub eps_from: f64,
    pub eps_to: f64,
    pub diff_x: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub final_x: Vec<(f64, f64)>,
    pub monotone: bool,
    pub failures: Vec<(f64, String)>,
}

pub fn regularization_sweep(
    u0: &Field2D,
    trace_history: &[TraceSet],
    schedule: &[f64],
    dt: f64,
    np: &NormParams,
) -> Result<SweepReport> {
    if schedule.len() < 3 {
        return Err(Error::Invalid(format!(
            "sweep schedule needs >= 3 entries, got {}",
            schedule.len()
        )));
    }
    let mut finals: Vec<(f64, Option<Field2D>)> = Vec::new();
    let mut failures = Vec::new();
    for &eps1 in schedule {
        let reg = RegularizationParams::new(eps1, schedule.to_vec())?;
        let mut u = u0.clone();
        let mut failed = None;
        for tr in trace_history {
            match step_bl(&u, tr, &reg, dt) {
                Ok(next) => u = next,
                Err(e) => {
                    failed = Some(e.to_string());
                    break;
                }
            }
        }
        if let Some(msg) = failed {
            failures.push((eps1, msg));
            finals.push((eps1, None));
        } else {
            finals.push((eps1, Some(u)));
        }
    }
    let mut entries = Vec::new();
    for w in finals.windows(2) {
        if let (Some(a), Some(b)) = (&w[0].1, &w[1].1) {
            let d = a.sub(b)?;
            entries.push(SweepEntry {
                eps_from: w[0].0,
                eps_to: w[1].0,
                diff_x: norms::compute_norms(&d, np).x,
            });
        }
    }
    let monotone = entries.windows(2).all(|e| e[1].diff_x < e[0].diff_x);
    let final_x = finals
        .iter()
        .map(|(e, f)| {
            (
                *e,
                f.as_ref()
                    .map(|u| norms::compute_norms(u, np).x)
                    .unwrap_or(f64::NAN),
            )
        })
        .collect();
    Ok(SweepReport {
        entries,
        final_x,
        monotone,
        failures,
    })
}
