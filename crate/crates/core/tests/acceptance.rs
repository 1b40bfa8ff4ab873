//! Acceptance suite: one test per criterion, each printing a pass line with
//! the measured quantities. Tolerances are pinned here, not configurable.

use std::sync::Arc;

use rotbl_core::config::RunConfig;
use rotbl_core::euler::{OuterForcing, OuterSolver, TraceSet};
use rotbl_core::field::{Field2D, TraceField};
use rotbl_core::grid::Grid;
use rotbl_core::identity;
use rotbl_core::layer::{self, RegularizationParams, StepOpts, TermFlags};
use rotbl_core::norms::{self, NormParams};
use rotbl_core::ops;
use rotbl_core::pipeline::Pipeline;
use rotbl_core::radius::RadiusTracker;
use rotbl_core::residual;
use rotbl_core::scenario::ScenarioKind;

fn zero_traces(grid: &Arc<Grid>) -> TraceSet {
    TraceSet {
        u1_bar: TraceField::zeros(grid, "u1_bar"),
        u2_bar: TraceField::zeros(grid, "u2_bar"),
        u3_bar: TraceField::zeros(grid, "u3_bar"),
        d3u3_bar: TraceField::zeros(grid, "d3u3_bar"),
        d1d3u3_bar: TraceField::zeros(grid, "d1d3u3_bar"),
        d1p0_bar: TraceField::zeros(grid, "d1p0_bar"),
        d2p0_bar: TraceField::zeros(grid, "d2p0_bar"),
        t: 0.0,
    }
}

// ---------------------------------------------------------------------------
// criterion 1: operator correctness
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_operator_correctness() {
    // transform derivative exact on a single mode
    let grid = Grid::new(64, 33, 10.0, 8.0).unwrap();
    let l = grid.l;
    let f = Field2D::from_fn(&grid, "s", |x, _| {
        (2.0 * std::f64::consts::PI * x / l).sin()
    });
    let d = ops::d_x1(&f, 1).unwrap();
    let exact = Field2D::from_fn(&grid, "c", |x, _| {
        (2.0 * std::f64::consts::PI / l) * (2.0 * std::f64::consts::PI * x / l).cos()
    });
    let mode_err = d.sub(&exact).unwrap().max_abs();
    assert!(mode_err <= 1e-10, "single-mode error {mode_err}");

    // wall-normal derivative refines at second order (L2)
    let mut errs = Vec::new();
    for n in [33usize, 65, 129] {
        let g = Grid::new(16, n, 10.0, 8.0).unwrap();
        let f = Field2D::from_fn(&g, "e", |_, y| (-y).exp());
        let d = ops::d_y(&f, 1).unwrap();
        let ex = Field2D::from_fn(&g, "e", |_, y| -(-y).exp());
        errs.push(d.sub(&ex).unwrap().l2());
    }
    let slope = ((errs[0] / errs[2]).ln() / (4.0f64).ln()).abs();
    assert!((slope - 2.0).abs() <= 0.1, "d_y refinement slope {slope}");

    // cumulative integral inverts the derivative to O(dx^2)
    let grid = Grid::new(256, 9, 10.0, 8.0).unwrap();
    let g = Field2D::from_fn(&grid, "g", |x, _| (-x * x).exp());
    let dg = ops::d_x1(&g, 1).unwrap();
    let (rec, _) = ops::integrate_x1_from_left(&dg);
    let dx = grid.dx1();
    let ftc_err = rec.sub(&g).unwrap().max_abs();
    assert!(ftc_err <= 2.0 * dx * dx, "integrate(d_x1) error {ftc_err}");

    println!(
        "criterion 1 PASS: single-mode error {mode_err:.2e}, d_y slope {slope:.3}, \
         integrate-derivative error {ftc_err:.2e} (dx^2 = {:.2e})",
        dx * dx
    );
}

// ---------------------------------------------------------------------------
// criterion 2: heat-limit oracle
// ---------------------------------------------------------------------------

/// Independent per-column Crank-Nicolson heat step: Neumann-0 ghost at the
/// wall, Dirichlet 0 at the top.
fn cn_heat_oracle_step(col: &[f64], dy: f64, dt: f64) -> Vec<f64> {
    let n = col.len();
    let r = dt / (2.0 * dy * dy);
    let mut b = vec![1.0 + 2.0 * r; n];
    let mut c = vec![-r; n];
    let mut a = vec![-r; n];
    let mut d = vec![0.0; n];
    a[0] = 0.0;
    c[0] = -2.0 * r;
    d[0] = col[0] + r * (2.0 * col[1] - 2.0 * col[0]);
    for j in 1..n - 1 {
        d[j] = col[j] + r * (col[j + 1] - 2.0 * col[j] + col[j - 1]);
    }
    a[n - 1] = 0.0;
    b[n - 1] = 1.0;
    c[n - 1] = 0.0;
    d[n - 1] = 0.0;
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for j in 1..n {
        let m = b[j] - a[j] * cp[j - 1];
        cp[j] = c[j] / m;
        dp[j] = (d[j] - a[j] * dp[j - 1]) / m;
    }
    let mut out = vec![0.0; n];
    out[n - 1] = dp[n - 1];
    for j in (0..n - 1).rev() {
        out[j] = dp[j] - cp[j] * out[j + 1];
    }
    out
}

#[test]
fn criterion_02_heat_limit_oracle() {
    let grid = Grid::new(128, 128, 10.0, 8.0).unwrap();
    let traces = zero_traces(&grid);
    let reg = RegularizationParams::new(1e-8, vec![1e-2, 1e-3, 1e-4]).unwrap();
    // small amplitude so the quadratic terms sit below the gate; Neumann
    // compatibility dy u0(0) = 0
    let amp = 1e-4;
    let mut u = Field2D::from_fn(&grid, "u", |x, y| {
        amp * (-(x / 3.0) * (x / 3.0)).exp() * (std::f64::consts::PI * y / 16.0).cos().powi(2)
    });
    for i in 0..grid.n_x1 {
        u.values[[i, grid.n_y - 1]] = 0.0;
    }
    let dt = 1e-3;
    let dy = grid.dy();
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let next = layer::step_bl(&u, &traces, &reg, dt).unwrap();
        let mut step_err = 0.0f64;
        for i in 0..grid.n_x1 {
            let col: Vec<f64> = (0..grid.n_y).map(|j| u.values[[i, j]]).collect();
            let oracle = cn_heat_oracle_step(&col, dy, dt);
            for j in 0..grid.n_y {
                step_err = step_err.max((next.values[[i, j]] - oracle[j]).abs());
            }
        }
        worst = worst.max(step_err);
        assert!(step_err <= 1e-10, "per-step deviation {step_err}");
        u = next;
    }
    println!(
        "criterion 2 PASS: worst per-step deviation from the heat oracle {worst:.2e} on 128x128"
    );
}

// ---------------------------------------------------------------------------
// criterion 3: manufactured-solution convergence
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_manufactured_convergence() {
    // --- layer operator with source injection, slope in dy ---
    let l = 10.0f64;
    let amp = 0.2;
    let a_t = |t: f64| 1.0 + 0.5 * t;
    let ap_t = 0.5;
    let e_x = move |x: f64| (-x * x / 9.0).exp();
    let f_x = move |x: f64| -(2.0 * x / 9.0) * e_x(x);
    let fp_x = move |x: f64| e_x(x) * (4.0 * x * x - 18.0) / 81.0;
    let fpp_x = move |x: f64| e_x(x) * (108.0 * x - 8.0 * x * x * x) / 729.0;
    let cap_f = move |x: f64| e_x(x); // antiderivative of f
    let e_y = move |y: f64| (-(y / 1.5) * (y / 1.5)).exp();
    let g_y = move |y: f64| (1.0 + y) * e_y(y);
    let gp_y = move |y: f64| e_y(y) * (1.0 - 2.0 * y * (1.0 + y) / 2.25);
    let gpp_y = move |y: f64| {
        e_y(y) * ((-2.0 * y / 2.25) * (1.0 - 2.0 * y * (1.0 + y) / 2.25) - (2.0 + 4.0 * y) / 2.25)
    };
    // analytic traces
    let dbar = move |x: f64| 0.15 * (-x * x / 9.0).exp();
    let dbar_p = move |x: f64| 0.15 * (-2.0 * x / 9.0) * (-x * x / 9.0).exp();
    let u1b = move |x: f64| 0.25 * (-x * x / 6.25).exp();
    let eps1 = 1e-4;

    let u_m = move |t: f64, x: f64, y: f64| amp * a_t(t) * f_x(x) * g_y(y);
    let v_m = move |t: f64, x: f64, y: f64| -amp * a_t(t) * cap_f(x) * gp_y(y);

    let source = move |t: f64, x: f64, y: f64| {
        let a = a_t(t);
        let u = u_m(t, x, y);
        let v = v_m(t, x, y);
        let du_t = amp * ap_t * f_x(x) * g_y(y);
        let d1u = amp * a * fp_x(x) * g_y(y);
        let d11u = amp * a * fpp_x(x) * g_y(y);
        let dyu = amp * a * f_x(x) * gp_y(y);
        let dyyu = amp * a * f_x(x) * gpp_y(y);
        let u0 = amp * a * f_x(x) * g_y(0.0);
        let d1u0 = amp * a * fp_x(x) * g_y(0.0);
        du_t - eps1 * d11u - dyyu
            + dbar(x) * y * dyu
            + (v + u1b(x)) * d1u
            + (u - u0) * dyu
            + dbar(x) * u
            + (d1u0 + y * dbar_p(x)) * v
    };

    // all discretization parameters tied to dy (dt ~ dy^2, dx ~ dy)
    let run_layer = |n_x1: usize, n_y: usize| -> f64 {
        let grid = Grid::new(n_x1, n_y, l, 8.0).unwrap();
        let mut traces = zero_traces(&grid);
        traces.u1_bar = TraceField::from_fn(&grid, "u1_bar", u1b);
        traces.d3u3_bar = TraceField::from_fn(&grid, "d3u3_bar", dbar);
        traces.d1d3u3_bar = TraceField::from_fn(&grid, "d1d3u3_bar", dbar_p);
        let reg = RegularizationParams::new(eps1, vec![1e-2, 1e-3, 1e-4]).unwrap();
        let t_end = 0.05;
        let dy = grid.dy();
        let steps = (t_end / (0.3 * dy * dy)).ceil() as usize;
        let dt = t_end / steps as f64;
        let mut u = Field2D::from_fn(&grid, "u", |x, y| u_m(0.0, x, y));
        let mut t = 0.0;
        for _ in 0..steps {
            // scheme-imposed wall derivative and midpoint source
            let neumann = TraceField::from_fn(&grid, "b", |x| amp * a_t(t) * f_x(x) * gp_y(0.0));
            let src = Field2D::from_fn(&grid, "S", |x, y| source(t + 0.5 * dt, x, y));
            let opts = StepOpts {
                terms: TermFlags::all(),
                source: Some(&src),
                neumann: Some(&neumann),
            };
            u = layer::step_bl_with(&u, &traces, &reg, dt, &opts).unwrap();
            t += dt;
        }
        let exact = Field2D::from_fn(&grid, "exact", |x, y| u_m(t, x, y));
        u.sub(&exact).unwrap().l2()
    };
    let e1 = run_layer(64, 33);
    let e2 = run_layer(128, 65);
    let e3 = run_layer(256, 129);
    let layer_slope = ((e1 / e3).ln() / (4.0f64).ln()).abs();
    assert!(
        (layer_slope - 2.0).abs() <= 0.2,
        "layer slope {layer_slope} (errors {e1:.3e}, {e2:.3e}, {e3:.3e})"
    );

    // --- outer solve with vorticity forcing, slope in dt ---
    let aa = |t: f64| 0.3 * (1.0 + 0.25 * (8.0 * t).sin());
    let aap = |t: f64| 0.3 * 2.0 * (8.0 * t).cos();
    let p_x = |x: f64| (-x * x / 6.25).exp();
    let pp_x = |x: f64| (-2.0 * x / 6.25) * (-x * x / 6.25).exp();
    let ppp_x = |x: f64| (-x * x / 6.25).exp() * (4.0 * x * x / 39.0625 - 2.0 / 6.25);
    let pppp_x = |x: f64| {
        (-2.0 * x / 6.25) * (-x * x / 6.25).exp() * (4.0 * x * x / 39.0625 - 2.0 / 6.25)
            + (-x * x / 6.25).exp() * (8.0 * x / 39.0625)
    };
    let q_y = |y: f64| y * (-y * y / 4.0).exp();
    let qp_y = |y: f64| (-y * y / 4.0).exp() * (1.0 - y * y / 2.0);
    let qpp_y = |y: f64| (-y * y / 4.0).exp() * (y * y * y / 4.0 - 1.5 * y);
    let qppp_y = |y: f64| (-y * y / 4.0).exp() * (1.5 * y * y - y.powi(4) / 8.0 - 1.5);

    let run_outer = |dt: f64| -> f64 {
        let grid = Grid::new(128, 129, 10.0, 8.0).unwrap();
        let solver = OuterSolver::new(&grid).unwrap();
        let omega_m = |t: f64, x: f64, y: f64| -aa(t) * (ppp_x(x) * q_y(y) + p_x(x) * qpp_y(y));
        let fgrid = grid.clone();
        let forcing_fn = move |t: f64| {
            let mut arr = ndarray::Array2::zeros((fgrid.n_x1, fgrid.n_y));
            for i in 0..fgrid.n_x1 {
                let x = fgrid.x1(i);
                for j in 0..fgrid.n_y {
                    let y = fgrid.y(j);
                    let a = aa(t);
                    let dtw = -aap(t) * (ppp_x(x) * q_y(y) + p_x(x) * qpp_y(y));
                    let u1 = a * p_x(x) * qp_y(y);
                    let u3 = -a * pp_x(x) * q_y(y);
                    let d1w = -a * (pppp_x(x) * q_y(y) + pp_x(x) * qpp_y(y));
                    let d3w = -a * (ppp_x(x) * qp_y(y) + p_x(x) * qppp_y(y));
                    arr[[i, j]] = dtw + u1 * d1w + u3 * d3w;
                }
            }
            arr
        };
        let forcing = OuterForcing {
            omega: Some(&forcing_fn),
        };
        let omega0 = Field2D::from_fn(&grid, "omega", |x, y| omega_m(0.0, x, y));
        let mut st = solver
            .state_from_vorticity(&omega0, &Field2D::zeros(&grid, "u2"), 0.0)
            .unwrap();
        let t_end = 0.2;
        let steps = (t_end / dt).round() as usize;
        for _ in 0..steps {
            st = solver.step_outer_forced(&st, dt, Some(&forcing)).unwrap();
        }
        let exact = Field2D::from_fn(&grid, "omega", |x, y| omega_m(st.t, x, y));
        st.omega.sub(&exact).unwrap().l2()
    };
    let o1 = run_outer(3.2e-2);
    let o2 = run_outer(1.6e-2);
    let o3 = run_outer(8e-3);
    let outer_slope = ((o1 / o3).ln() / (4.0f64).ln()).abs();
    assert!(
        outer_slope >= 1.8,
        "outer slope {outer_slope} (errors {o1:.3e}, {o2:.3e}, {o3:.3e})"
    );

    println!(
        "criterion 3 PASS: layer slope {layer_slope:.3} (target 2.0 +- 0.2), \
         outer slope {outer_slope:.3} (target >= 1.8)"
    );
}

// ---------------------------------------------------------------------------
// criterion 4: divergence-free coupling
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_divergence_free_coupling() {
    let mut cfg = RunConfig::default();
    cfg.n_x1 = 1024;
    cfg.n_x3 = 129;
    cfg.n_y = 129;
    cfg.amplitude = 0.01;
    cfg.dt = 1e-3;
    cfg.t_end = 0.01;
    cfg.div_consistent_traces = true;
    let mut pipe = Pipeline::new(cfg).unwrap();
    pipe.run_to_end().unwrap();

    let traces = pipe.traces_now();
    let traces_l = rotbl_core::compose::retarget_traces(&traces, &pipe.layer_grid).unwrap();
    let neumann = layer::neumann_from_traces(&traces_l);
    let (v, _) = layer::reconstruct_v_with_wall(&pipe.u, &neumann);
    let fluct = layer::fluctuation_divergence_with(&pipe.u, &v, Some(&neumann));
    assert!(fluct <= 1e-12, "fluctuation divergence {fluct}");

    let (u1_total, _) = layer::assemble_u1_total_with_wall(&pipe.u, &traces_l);
    let wall = u1_total.wall_row("wall").weighted_l2(1.0);
    assert!(wall <= 1e-6, "wall identity norm {wall}");

    println!(
        "criterion 4 PASS: fluctuation divergence {fluct:.2e} (gate 1e-12), \
         wall identity {wall:.2e} (gate 1e-6)"
    );
}

// ---------------------------------------------------------------------------
// criterion 5: regularization Cauchy property
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_regularization_cauchy() {
    let mut cfg = RunConfig::default();
    cfg.n_x1 = 128;
    cfg.n_x3 = 65;
    cfg.n_y = 65;
    cfg.dt = 1e-3;
    cfg.t_star_fraction = 0.5; // run to T*/2
    cfg.eps1_schedule = vec![1e-2, 1e-3, 1e-4];
    let pipe = Pipeline::new(cfg).unwrap();
    let t_half = pipe.t_final;
    let rep = pipe.regularization_sweep().unwrap();
    assert!(
        rep.failures.is_empty(),
        "sweep failures: {:?}",
        rep.failures
    );
    assert!(rep.entries.len() == 2);
    assert!(
        rep.monotone,
        "differences not strictly decreasing: {:?}",
        rep.entries
    );
    println!(
        "criterion 5 PASS: |u(1e-2)-u(1e-3)|_X = {:.3e} > |u(1e-3)-u(1e-4)|_X = {:.3e} at T*/2 = {:.3e}",
        rep.entries[0].diff_x, rep.entries[1].diff_x, t_half
    );
}

// ---------------------------------------------------------------------------
// criterion 6: radius ODE
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_radius_ode() {
    // constant Z reproduces the linear decay exactly
    let z0 = 0.35;
    let mut tr = RadiusTracker::new(1.5, 0.25, 1.0, 0.0, z0);
    for _ in 0..250 {
        tr.evolve_radius(z0, 4e-3).unwrap();
    }
    let lin_err = (tr.current_rho() - (1.5 - z0 * tr.current_t())).abs();
    assert!(lin_err <= 1e-13, "constant-Z error {lin_err}");

    // varying Z against an independent RK4 integration of rho' = -sin^2(t)
    let dt = 1e-4;
    let steps = (1.0 / dt) as usize;
    let mut tr = RadiusTracker::new(2.0, 0.25, 1.0, 0.0, 0.0);
    let mut rho_rk4 = 2.0;
    let f = |t: f64| -(t.sin() * t.sin());
    for k in 0..steps {
        let t = k as f64 * dt;
        tr.evolve_radius(((k + 1) as f64 * dt).sin().powi(2), dt)
            .unwrap();
        let k1 = f(t);
        let k2 = f(t + 0.5 * dt);
        let k3 = f(t + 0.5 * dt);
        let k4 = f(t + dt);
        rho_rk4 += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    let ode_err = (tr.current_rho() - rho_rk4).abs();
    assert!(ode_err <= 1e-8, "varying-Z error vs RK4 oracle {ode_err}");

    // rho non-increasing on every shipped scenario
    let mut worst_increase = 0.0f64;
    for kind in [
        ScenarioKind::Zero,
        ScenarioKind::Shear,
        ScenarioKind::SmallData,
        ScenarioKind::Transport,
    ] {
        let mut cfg = RunConfig::default();
        cfg.n_x1 = 128;
        cfg.n_x3 = 65;
        cfg.n_y = 65;
        cfg.scenario = kind;
        cfg.dt = 1e-3;
        cfg.t_end = 0.02;
        let mut pipe = Pipeline::new(cfg).unwrap();
        pipe.run_to_end().unwrap();
        for w in pipe.tracker.rho.windows(2) {
            worst_increase = worst_increase.max(w[1] - w[0]);
            assert!(w[1] <= w[0], "rho increased in scenario {}", kind.name());
        }
    }
    println!(
        "criterion 6 PASS: constant-Z error {lin_err:.2e}, RK4-oracle error {ode_err:.2e}, \
         rho non-increasing on all scenarios (max increment {worst_increase:.1e})"
    );
}

// ---------------------------------------------------------------------------
// criterion 7: energy budget stability
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_energy_budget_stability() {
    let run_signed_c = |n_x1: usize, n_y: usize, kind: ScenarioKind| -> f64 {
        let mut cfg = RunConfig::default();
        cfg.n_x1 = n_x1;
        cfg.n_y = n_y;
        cfg.n_x3 = 65;
        cfg.scenario = kind;
        cfg.dt = 1e-3;
        cfg.t_end = 0.05;
        cfg.sample_every = 5;
        let mut pipe = Pipeline::new(cfg).unwrap();
        pipe.run_to_end().unwrap();
        pipe.energy_budget().unwrap().c_signed
    };
    // the small-data scenario, and its zero-trace heat-like limit through
    // the shear scenario (zero traces, zero layer data evolves trivially),
    // so the heat-dominated trajectory is the small-data layer itself on a
    // quiet outer state
    let c_small_1 = run_signed_c(128, 65, ScenarioKind::SmallData);
    let c_small_2 = run_signed_c(256, 129, ScenarioKind::SmallData);
    assert!(c_small_1.is_finite() && c_small_2.is_finite());
    let ratio_small = (c_small_2 / c_small_1).abs();
    assert!(
        (0.5..=2.0).contains(&ratio_small) && c_small_1 * c_small_2 > 0.0,
        "small-data budget constant unstable: {c_small_1:.3e} vs {c_small_2:.3e}"
    );

    // heat-limit trajectory: layer data with zero traces (quiet outer)
    let run_heat_c = |n_x1: usize, n_y: usize| -> f64 {
        use rotbl_core::radius::{self, BudgetSample};
        let grid = Grid::new(n_x1, n_y, 10.0, 8.0).unwrap();
        let traces = zero_traces(&grid);
        let reg = RegularizationParams::new(1e-6, vec![1e-2, 1e-3, 1e-4]).unwrap();
        let mut u = Field2D::from_fn(&grid, "u", |x, y| {
            0.05 * (-(x / 2.0) * (x / 2.0)).exp() * (-0.5 * y * y).exp()
        });
        for i in 0..grid.n_x1 {
            u.values[[i, grid.n_y - 1]] = 0.0;
        }
        let rho0 = RadiusTracker::initial_rho(1.0, 3.0);
        let np = NormParams::new(rho0, 0.25, 1.0, 8).unwrap();
        let r0 = norms::compute_norms(&u, &np);
        let mut tracker = radius::RadiusTracker::new(rho0, 0.25, 1.0, 0.01, r0.z);
        let mut samples = vec![BudgetSample {
            t: 0.0,
            x: r0.x,
            y: r0.y,
            z: r0.z,
            rho: rho0,
        }];
        let dt = 1e-3;
        for k in 1..=50usize {
            u = layer::step_bl(&u, &traces, &reg, dt).unwrap();
            let npk = NormParams::new(tracker.current_rho(), tracker.a_at(k as f64 * dt), 1.0, 8)
                .unwrap();
            let r = norms::compute_norms(&u, &npk);
            tracker.evolve_radius(r.z, dt).unwrap();
            if k % 5 == 0 {
                samples.push(BudgetSample {
                    t: k as f64 * dt,
                    x: r.x,
                    y: r.y,
                    z: r.z,
                    rho: tracker.current_rho(),
                });
            }
        }
        radius::energy_budget(&samples, r0.x * r0.x)
            .unwrap()
            .c_signed
    };
    let c_heat_1 = run_heat_c(128, 65);
    let c_heat_2 = run_heat_c(256, 129);
    let ratio_heat = (c_heat_2 / c_heat_1).abs();
    assert!(
        (0.5..=2.0).contains(&ratio_heat) && c_heat_1 * c_heat_2 > 0.0,
        "heat-limit budget constant unstable: {c_heat_1:.3e} vs {c_heat_2:.3e}"
    );

    println!(
        "criterion 7 PASS: budget constant small-data {c_small_1:.3e}/{c_small_2:.3e} \
         (ratio {ratio_small:.3}), heat-limit {c_heat_1:.3e}/{c_heat_2:.3e} (ratio {ratio_heat:.3})"
    );
}

// ---------------------------------------------------------------------------
// criterion 8: order-identity suite with negative test
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_order_identities() {
    let mut cfg = RunConfig::default();
    cfg.n_x1 = 256;
    cfg.n_x3 = 257;
    cfg.n_y = 129;
    cfg.dt = 1e-3;
    cfg.t_end = 0.01;
    let mut pipe = Pipeline::new(cfg).unwrap();
    pipe.run_to_end().unwrap();
    let rep = pipe
        .identity_report(identity::DEFAULT_IDENTITY_TOL)
        .unwrap();
    assert!(rep.all_pass(), "{}", identity::render_report(&rep));

    // deliberate perturbation must be detected
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let (_, mut e) = pipe.expansion_pair().unwrap();
    let grid = e.p_pm1.grid.clone();
    // seeded smooth perturbation: a few random tangential modes with a
    // decaying vertical profile
    let modes: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(0.3..1.0),
                rng.gen_range(0.5..2.5),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let bump = Field2D::from_fn(&grid, "bump", |x, y| {
        let mut v = 0.0;
        for (a, k, ph) in &modes {
            v += a * (k * x + ph).sin();
        }
        // nonzero at the wall so both the vertical and the wall-anchored
        // checks must trip
        1e-3 * v * (-(x / 3.0) * (x / 3.0)).exp() * (1.0 + y) * (-0.3 * y * y).exp()
    });
    e.p_pm1 = e.p_pm1.add(&bump).unwrap();
    let bad = identity::order_identity_check(&e, 1.0, identity::DEFAULT_IDENTITY_TOL).unwrap();
    let vertical = bad
        .entries
        .iter()
        .find(|en| en.name == "layer_pressure_vertical")
        .unwrap();
    let tangential = bad
        .entries
        .iter()
        .find(|en| en.name == "layer_pressure_tangential_wall")
        .unwrap();
    assert!(
        !vertical.pass && !tangential.pass,
        "perturbation not detected: vertical {:.3e}, tangential {:.3e}",
        vertical.relative,
        tangential.relative
    );

    let worst = rep
        .entries
        .iter()
        .filter(|e| !e.structural)
        .map(|e| e.relative)
        .fold(0.0f64, f64::max);
    println!(
        "criterion 8 PASS: all identities within {:.0e} (worst relative {worst:.2e}); \
         perturbed state detected at {:.2e}/{:.2e}",
        identity::DEFAULT_IDENTITY_TOL,
        vertical.relative,
        tangential.relative
    );
}

// ---------------------------------------------------------------------------
// criterion 9: composite residual order
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_composite_residual_order() {
    let mut cfg = RunConfig::default();
    cfg.n_x1 = 256;
    cfg.n_x3 = 129;
    cfg.n_y = 129;
    cfg.dt = 5e-4;
    cfg.t_end = 0.02;
    cfg.eps_sweep = vec![1e-2, 3e-3, 1e-3, 3e-4];
    let mut pipe = Pipeline::new(cfg).unwrap();
    pipe.run_to_end().unwrap();
    let rep = pipe.residual_report().unwrap();
    let slope = rep.fitted_slope;
    assert!(
        (slope - 0.5).abs() <= 0.15,
        "residual slope {slope} (entries: {:?})",
        rep.entries
            .iter()
            .map(|e| (e.eps, e.total))
            .collect::<Vec<_>>()
    );
    let divs: Vec<f64> = rep
        .entries
        .iter()
        .map(|e| e.window[3].max(e.bulk[3]))
        .collect();
    println!(
        "criterion 9 PASS: residual slope {slope:.4} over eps {:?} (divergence residual <= {:.1e})",
        rep.entries.iter().map(|e| e.eps).collect::<Vec<_>>(),
        divs.iter().fold(0.0f64, |m, v| m.max(*v))
    );
}

// ---------------------------------------------------------------------------
// criterion 10: second-component maximum principle
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_maximum_principle() {
    // small-data scenario: the outer second component vanishes, so the
    // substituted equation has zero source and the interval bound is strict
    let mut cfg = RunConfig::default();
    cfg.n_x1 = 128;
    cfg.n_x3 = 65;
    cfg.n_y = 65;
    cfg.dt = 1e-3;
    cfg.t_end = 0.05;
    let mut pipe = Pipeline::new(cfg).unwrap();
    pipe.run_to_end().unwrap();
    assert!(pipe.max_principle_ok, "warnings: {:?}", pipe.warnings);

    // transport scenario: nonzero source; the bound holds within the
    // recorded source slack, and the transported trace max norm is
    // non-increasing
    let mut cfg = RunConfig::default();
    cfg.n_x1 = 128;
    cfg.n_x3 = 65;
    cfg.n_y = 65;
    cfg.scenario = ScenarioKind::Transport;
    cfg.dt = 1e-3;
    cfg.t_end = 0.05;
    let mut pipe2 = Pipeline::new(cfg).unwrap();
    pipe2.run_to_end().unwrap();
    assert!(pipe2.max_principle_ok, "warnings: {:?}", pipe2.warnings);
    let mut worst_growth = 0.0f64;
    for w in pipe2.u2_trace_max_history.windows(2) {
        worst_growth = worst_growth.max(w[1].1 - w[0].1);
        assert!(
            w[1].1 <= w[0].1 + 1e-13,
            "u2 trace max norm grew from {:.6e} to {:.6e}",
            w[0].1,
            w[1].1
        );
    }
    println!(
        "criterion 10 PASS: substituted variable stayed in its data interval on both scenarios; \
         u2 trace max norm non-increasing (max increment {worst_growth:.1e})"
    );
}

// ---------------------------------------------------------------------------
// residual slope support: the fitted slope on synthetic powers
// ---------------------------------------------------------------------------

#[test]
fn slope_fit_sanity() {
    let x = [1e-2, 3e-3, 1e-3, 3e-4];
    let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(0.5)).collect();
    assert!((residual::fit_slope(&x, &y) - 0.5).abs() < 1e-12);
}
