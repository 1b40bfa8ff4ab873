// Diagnostic harness for interactive inspection of coupled runs. Not part
// of the gated suite; run with:
//   cargo test -p rotbl-core --test probe -- --nocapture --ignored

use rotbl_core::config::RunConfig;
use rotbl_core::identity;
use rotbl_core::pipeline::Pipeline;

#[test]
#[ignore]
fn probe_coupled_run() {
    let mut cfg = RunConfig::default();
    cfg.n_x1 = 256;
    cfg.n_x3 = 257;
    cfg.n_y = 129;
    cfg.dt = 1e-3;
    cfg.t_end = 0.02;
    cfg.sample_every = 5;
    let mut pipe = Pipeline::new(cfg).unwrap();
    pipe.run_to_end().unwrap();
    println!("steps: {}", pipe.step_idx);
    let last = pipe.norm_history.last().unwrap();
    println!(
        "norms at end: X {:.3e} Y {:.3e} Z {:.3e} rho {:.4}",
        last.x, last.y, last.z, last.rho
    );
    println!("coupling history: {:?}", pipe.coupling_history);
    println!("bernoulli history: {:?}", pipe.bernoulli_history);

    let traces = pipe.traces_now();
    let traces_l = rotbl_core::compose::retarget_traces(&traces, &pipe.layer_grid).unwrap();
    let (u1t, _) = rotbl_core::layer::assemble_u1_total_with_wall(&pipe.u, &traces_l);
    println!(
        "wall identity norm: {:.3e}",
        u1t.wall_row("wall").weighted_l2(1.0)
    );

    let rep = pipe
        .identity_report(identity::DEFAULT_IDENTITY_TOL)
        .unwrap();
    print!("{}", identity::render_report(&rep));
}

#[test]
#[ignore]
fn probe_residual_sweep() {
    let mut cfg = RunConfig::default();
    cfg.n_x1 = 256;
    cfg.n_x3 = 129;
    cfg.n_y = 129;
    cfg.dt = 5e-4;
    cfg.t_end = 0.02;
    let mut pipe = Pipeline::new(cfg).unwrap();
    pipe.run_to_end().unwrap();
    let rep = pipe.residual_report().unwrap();
    for e in &rep.entries {
        println!(
            "eps {:.3e}: window {:?} bulk {:?} total {:.6e}",
            e.eps, e.window, e.bulk, e.total
        );
    }
    println!("slope: {:.4}", rep.fitted_slope);
}

#[test]
#[ignore]
fn probe_regularization_sweep() {
    let mut cfg = RunConfig::default();
    cfg.n_x1 = 128;
    cfg.n_x3 = 65;
    cfg.n_y = 65;
    cfg.dt = 1e-3;
    cfg.t_star_fraction = 0.5;
    let pipe = Pipeline::new(cfg).unwrap();
    println!("t_final (T*/2): {:.4e}, dt {:.3e}", pipe.t_final, pipe.dt);
    let rep = pipe.regularization_sweep().unwrap();
    for e in &rep.entries {
        println!(
            "|u({:.0e}) - u({:.0e})|_X = {:.6e}",
            e.eps_from, e.eps_to, e.diff_x
        );
    }
    println!("monotone: {}, failures: {:?}", rep.monotone, rep.failures);
}
