//! Coupled-run measurements: wall matching of the composite, identity suite
//! on trivial states, Bernoulli defect on steady data, and the boundary
//! feedback residual.

use rotbl_core::compose::{self, ComposeOpts};
use rotbl_core::config::RunConfig;
use rotbl_core::identity;
use rotbl_core::pipeline::Pipeline;
use rotbl_core::scenario::ScenarioKind;

fn short_run(kind: ScenarioKind, steps: usize) -> Pipeline {
    let mut cfg = RunConfig::default();
    cfg.n_x1 = 128;
    cfg.n_x3 = 65;
    cfg.n_y = 65;
    cfg.scenario = kind;
    cfg.dt = 1e-3;
    cfg.t_end = steps as f64 * cfg.dt;
    let mut pipe = Pipeline::new(cfg).unwrap();
    pipe.run_to_end().unwrap();
    pipe
}

#[test]
fn zero_scenario_everything_stays_zero() {
    let pipe = short_run(ScenarioKind::Zero, 5);
    for n in &pipe.norm_history {
        assert_eq!(n.x, 0.0);
        assert_eq!(n.y, 0.0);
        assert_eq!(n.z, 0.0);
    }
    let rep = pipe
        .identity_report(identity::DEFAULT_IDENTITY_TOL)
        .unwrap();
    for e in &rep.entries {
        assert!(e.pass, "{} failed on the zero state", e.name);
        assert_eq!(e.residual, 0.0, "{} nonzero on the zero state", e.name);
    }
}

#[test]
fn shear_scenario_bernoulli_defect_tiny() {
    let pipe = short_run(ScenarioKind::Shear, 10);
    for (_, b) in &pipe.bernoulli_history {
        assert!(*b <= 1e-8, "Bernoulli defect {b}");
    }
}

#[test]
fn composite_wall_matching_small() {
    // after a short coupled run, the composite velocity at the wall is small
    // wherever both expansion pieces are carried: no-slip is recovered up to
    // the coupling and quadrature defects
    let pipe = short_run(ScenarioKind::SmallData, 10);
    let (_, e) = pipe.expansion_pair().unwrap();
    let eps = 1e-2;
    let (tg, _) = compose::composition_grid(&e, eps).unwrap();
    let [u1, u2, u3] = compose::compose_velocity(&e, eps, &tg, &ComposeOpts::default()).unwrap();

    let scale = pipe.traces_now().u1_bar.max_abs();
    let mut wall1 = 0.0f64;
    let mut wall2 = 0.0f64;
    let mut wall3 = 0.0f64;
    for i in 0..tg.n_x1 {
        wall1 = wall1.max(u1.values[[i, 0]].abs());
        wall2 = wall2.max(u2.values[[i, 0]].abs());
        wall3 = wall3.max(u3.values[[i, 0]].abs());
    }
    // tangential order 0: the wall identity; order sqrt(eps) carries the
    // linearized trace whose layer partner is not part of the expansion, so
    // subtract it from the comparison
    let mut lin_wall = 0.0f64;
    for i in 0..tg.n_x1 {
        lin_wall = lin_wall.max(e.lin.u1.values[[i, 0]].abs());
    }
    assert!(
        wall1 <= eps.sqrt() * lin_wall + 1e-3 * scale,
        "u1 wall residual {wall1}"
    );
    // second component: Dirichlet-matched layer
    assert!(wall2 <= 1e-3 * scale, "u2 wall residual {wall2}");
    // wall-normal component: explicit coupling, one step stale
    let coupling = pipe.coupling_history.last().unwrap().1;
    assert!(
        wall3 <= eps.sqrt() * (10.0 * coupling + 1e-10).max(1e-6),
        "u3 wall residual {wall3} vs coupling {coupling}"
    );
}

#[test]
fn coupling_residual_decays_with_dt() {
    // the linearized wall value lags the layer trace by one step, so the
    // coupling defect scales with dt
    let run = |dt: f64| -> f64 {
        let mut cfg = RunConfig::default();
        cfg.n_x1 = 128;
        cfg.n_x3 = 65;
        cfg.n_y = 65;
        cfg.dt = dt;
        cfg.t_end = 0.02;
        cfg.sample_every = (0.02 / dt).round() as usize;
        let mut pipe = Pipeline::new(cfg).unwrap();
        pipe.run_to_end().unwrap();
        pipe.coupling_history.last().unwrap().1
    };
    let c1 = run(2e-3);
    let c2 = run(1e-3);
    let ratio = c1 / c2;
    assert!(
        ratio > 1.5 && ratio < 3.0,
        "coupling defect not first order in dt: {c1:.3e} vs {c2:.3e}"
    );
}

#[test]
fn transport_scenario_runs_clean() {
    let pipe = short_run(ScenarioKind::Transport, 20);
    assert!(pipe.max_principle_ok);
    assert!(!pipe.tracker.aborted);
    // second components actually moved
    assert!(pipe.u2_layer.max_abs() > 0.0);
    assert!(pipe.u2_bar.max_abs() > 0.0);
}

#[test]
fn far_field_assembly_and_pressure_gradient() {
    // at the artificial top the total tangential velocity reverts to the
    // trace, and the recovered pressure gradient approaches zero when the
    // wall law holds on the traces
    let pipe = short_run(ScenarioKind::SmallData, 10);
    let (_, e) = pipe.expansion_pair().unwrap();
    let g = &e.u1_total.grid;
    let mut top_dev = 0.0f64;
    for i in 0..g.n_x1 {
        top_dev = top_dev.max(
            (e.u1_total.values[[i, g.n_y - 1]] - e.traces.u1_bar.values[i]).abs(),
        );
    }
    let gauss_tail = (-0.25 * g.y_max * g.y_max).exp(); // e^{-a Y^2} scale
    assert!(
        top_dev <= 100.0 * gauss_tail * pipe.cfg.amplitude.max(1e-3),
        "top deviation {top_dev} vs tail scale {gauss_tail}"
    );

    let mut near_wall = 0.0f64;
    let mut top = 0.0f64;
    for i in 0..g.n_x1 {
        for j in 0..g.n_y {
            let v = e.d1pb0.values[[i, j]].abs();
            if j <= g.n_y / 4 {
                near_wall = near_wall.max(v);
            }
            if j == g.n_y - 1 {
                top = top.max(v);
            }
        }
    }
    assert!(
        top <= 0.05 * near_wall,
        "pressure gradient did not decay toward the top: {top} vs near-wall {near_wall}"
    );
}

#[test]
fn steady_shear_composite_residual_at_discretization_level() {
    // one-component shear with zero layer terms: every composed order is
    // steady and the rotation couple is balanced by the recovered pressure
    // identities, so the residual sits at the discretization floor
    let pipe = short_run(ScenarioKind::Shear, 5);
    let (e_old, e_new) = pipe.expansion_pair().unwrap();
    let eps = 1e-2;
    let (tg, _) = compose::composition_grid(&e_new, eps).unwrap();
    let entry =
        rotbl_core::residual::nsc_residual(&e_old, &e_new, eps, &tg, 1.0).unwrap();
    assert!(
        entry.total <= 1e-8,
        "steady shear residual {:.3e}",
        entry.total
    );
}
