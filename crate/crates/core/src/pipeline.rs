//! Coupled run orchestration: outer solve, trace extraction, layer solves,
//! linearized solve, diagnostics, and artifact emission.
//!
//! Data flows one way per step: traces feed the layer, the layer's wall
//! value feeds the linearized solve, both explicitly in time. Diagnostics
//! (norms, radius, budget, Bernoulli and coupling defects) are recorded on a
//! configurable stride; the radius ODE is advanced every step.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::compose::{self, ExpansionState};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::euler::{self, OuterSolver, OuterState, TraceSet};
use crate::euler_lin::{LinOuterState, LinSolver};
use crate::field::{Field2D, TraceField};
use crate::grid::Grid;
use crate::identity::{self, IdentityReport};
use crate::io;
use crate::layer::{self, RegularizationParams};
use crate::layer_u2;
use crate::norms::{self, NormParams};
use crate::radius::{self, BudgetSample, RadiusTracker};
use crate::residual::{self, ResidualReport};
use crate::scenario::ScenarioData;

pub struct Pipeline {
    pub cfg: RunConfig,
    pub outer_grid: Arc<Grid>,
    pub layer_grid: Arc<Grid>,
    pub outer_solver: OuterSolver,
    pub lin_solver: LinSolver,
    pub reg: RegularizationParams,
    pub outer: OuterState,
    pub lin: LinOuterState,
    pub u: Field2D,
    pub u2_layer: Field2D,
    pub u2_bar: TraceField,
    pub tracker: RadiusTracker,
    pub step_idx: usize,
    pub warnings: Vec<String>,
    pub norm_history: Vec<NormSample>,
    pub budget_samples: Vec<BudgetSample>,
    pub bernoulli_history: Vec<(f64, f64)>,
    pub coupling_history: Vec<(f64, f64)>,
    /// Max norm of the transported u2 trace after every step.
    pub u2_trace_max_history: Vec<(f64, f64)>,
    /// Trace snapshots at the sampling stride, for the history artifacts.
    pub trace_samples: Vec<TraceSet>,
    pub max_principle_ok: bool,
    /// (count, worst ratio) of left-edge decay-check failures.
    pub decay_warnings: Option<(usize, f64)>,
    /// (count, worst ratio) of unresolved-spectrum warnings.
    pub tail_warnings: Option<(usize, f64)>,
    pub x0_sq: f64,
    pub t_final: f64,
    pub dt: f64,
    prev: Option<StepSnapshot>,
    prev_traces: Option<TraceSet>,
    /// u1_total two steps back, for the pressure recovery of the older
    /// expansion record.
    prev2_u1_total: Option<Field2D>,
}

#[derive(Debug, Clone, Copy)]
pub struct NormSample {
    pub t: f64,
    pub rho: f64,
    pub a: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// State bundle retained for expansion building and difference quotients.
#[derive(Clone)]
struct StepSnapshot {
    outer: OuterState,
    lin: LinOuterState,
    u: Field2D,
    u2_layer: Field2D,
    u2_bar: TraceField,
    u1_total: Field2D,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Result<Pipeline> {
        let violations = cfg.validate();
        if !violations.is_empty() {
            return Err(Error::Config(violations.join("; ")));
        }
        let outer_grid = Grid::new(cfg.n_x1, cfg.n_x3, cfg.l, cfg.y_max)?;
        let layer_grid = Grid::new(cfg.n_x1, cfg.n_y, cfg.l, cfg.y_max)?;
        let outer_solver = OuterSolver::new(&outer_grid)?;
        let lin_solver = LinSolver::new(&outer_grid)?;
        let reg = RegularizationParams::new(cfg.eps1, cfg.eps1_schedule.clone())?;
        let data = cfg.scenario_spec().build(&outer_grid, &layer_grid)?;

        let np0 = NormParams::new(
            RadiusTracker::initial_rho(cfg.rho0, cfg.tau),
            cfg.a0,
            cfg.ell,
            cfg.m_max,
        )?;
        let report0 = norms::compute_norms(&data.layer_u, &np0);
        let x0_sq = report0.x * report0.x;
        let rho_floor = 0.125 * cfg.rho0.min(cfg.tau / 3.0);
        let tracker = RadiusTracker::new(np0.rho, cfg.a0, cfg.c0, rho_floor, report0.z);

        let t_star = radius::lifespan_estimate(report0.x, cfg.rho0, cfg.tau);
        let t_final = if cfg.t_star_fraction > 0.0 {
            (cfg.t_star_fraction * t_star).min(1e6)
        } else {
            cfg.t_end
        };
        let steps = (t_final / cfg.dt).ceil().max(1.0);
        let dt = t_final / steps;

        let mut p = Pipeline {
            cfg,
            outer_grid,
            layer_grid,
            outer_solver,
            lin_solver,
            reg,
            outer: data.outer,
            lin: data.lin,
            u: data.layer_u,
            u2_layer: data.layer_u2,
            u2_bar: data.u2_bar,
            tracker,
            step_idx: 0,
            warnings: Vec::new(),
            norm_history: Vec::new(),
            budget_samples: Vec::new(),
            bernoulli_history: Vec::new(),
            coupling_history: Vec::new(),
            u2_trace_max_history: Vec::new(),
            trace_samples: Vec::new(),
            max_principle_ok: true,
            decay_warnings: None,
            tail_warnings: None,
            x0_sq,
            t_final,
            dt,
            prev: None,
            prev_traces: None,
            prev2_u1_total: None,
        };
        p.budget_samples.push(BudgetSample {
            t: 0.0,
            x: report0.x,
            y: report0.y,
            z: report0.z,
            rho: p.tracker.current_rho(),
        });
        p.u2_trace_max_history.push((0.0, p.u2_bar.max_abs()));
        p.record_norms(report0);
        Ok(p)
    }

    pub fn scenario(cfg: &RunConfig) -> Result<ScenarioData> {
        let outer_grid = Grid::new(cfg.n_x1, cfg.n_x3, cfg.l, cfg.y_max)?;
        let layer_grid = Grid::new(cfg.n_x1, cfg.n_y, cfg.l, cfg.y_max)?;
        cfg.scenario_spec().build(&outer_grid, &layer_grid)
    }

    fn record_norms(&mut self, r: norms::NormReport) {
        if let Some(ratio) = r.tail_warning {
            let (count, worst) = self.tail_warnings.unwrap_or((0, 0.0));
            self.tail_warnings = Some((count + 1, worst.max(ratio)));
        }
        self.norm_history.push(NormSample {
            t: self.tracker.current_t(),
            rho: self.tracker.current_rho(),
            a: self.tracker.current_a(),
            x: r.x,
            y: r.y,
            z: r.z,
        });
    }

    pub fn traces_now(&self) -> TraceSet {
        let tr = self.outer_solver.extract_traces(&self.outer);
        if self.cfg.div_consistent_traces {
            self.outer_solver.make_div_consistent(&tr)
        } else {
            tr
        }
    }

    fn layer_traces(&self, tr: &TraceSet) -> Result<TraceSet> {
        compose::retarget_traces(tr, &self.layer_grid)
    }

    /// Advance the coupled system by one step.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.dt;
        let traces = self.traces_now();
        let traces_l = self.layer_traces(&traces)?;
        let t_new = self.outer.t + dt;

        // current totals feed the second-component step and the expansion
        let (u1_total, warn) = layer::assemble_u1_total_with_wall(&self.u, &traces_l);
        if let Some(w) = warn {
            let (count, worst) = self.decay_warnings.unwrap_or((0, 0.0));
            self.decay_warnings = Some((count + 1, worst.max(w.edge_ratio)));
        }
        let trace_lin_u3 = self
            .lin
            .u3
            .wall_row("u3_I1_bar")
            .on_grid(&self.layer_grid, "u3_I1_bar")?;
        let u3_total = layer::assemble_u3_total(&self.u, &trace_lin_u3, &traces_l);
        let neumann = layer::neumann_from_traces(&traces_l);
        let (v, _) = layer::reconstruct_v_with_wall(&self.u, &neumann);

        // transported trace of the outer second component
        let u2_bar_new = euler::trace_transport_u2(&self.u2_bar, &traces.u1_bar, dt)?;
        self.u2_trace_max_history
            .push((t_new, u2_bar_new.max_abs()));

        // layer second component
        let u2_bar_l = self.u2_bar.on_grid(&self.layer_grid, "u2_bar")?;
        let d1u2_bar_l = crate::ops::d_x1_trace(&u2_bar_l, 1)?;
        let u2_bar_new_l = u2_bar_new.on_grid(&self.layer_grid, "u2_bar")?;
        let (u2_next, u2_report) = layer_u2::step_u2_bl(
            &self.u2_layer,
            &u1_total,
            &u3_total,
            &v,
            &u2_bar_l,
            &d1u2_bar_l,
            &u2_bar_new_l,
            self.cfg.a0,
            dt,
        )
        .map_err(|e| self.stamp_step(e))?;
        if !u2_report.within_bounds() {
            self.max_principle_ok = false;
            self.warnings.push(format!(
                "step {}: second-component range [{:.3e}, {:.3e}] left its data interval [{:.3e}, {:.3e}] (source slack {:.3e})",
                self.step_idx,
                u2_report.observed_lo,
                u2_report.observed_hi,
                u2_report.bound_lo,
                u2_report.bound_hi,
                u2_report.source_slack
            ));
        }

        // layer unknown
        let u_next =
            layer::step_bl(&self.u, &traces_l, &self.reg, dt).map_err(|e| self.stamp_step(e))?;

        // linearized solve forced by the start-of-step layer trace
        let bl_trace = self
            .u
            .wall_row("bl_trace")
            .on_grid(&self.outer_grid, "bl_trace")?;
        let lin_next = self
            .lin_solver
            .step_linearized(&self.lin, &self.outer, &bl_trace, dt)
            .map_err(|e| self.stamp_step(e))?;

        // outer solve
        let outer_next = self
            .outer_solver
            .step_outer(&self.outer, dt)
            .map_err(|e| self.stamp_step(e))?;

        // stash the pre-step snapshot for difference quotients
        self.prev2_u1_total = self.prev.take().map(|s| s.u1_total);
        self.prev = Some(StepSnapshot {
            outer: std::mem::replace(&mut self.outer, outer_next),
            lin: std::mem::replace(&mut self.lin, lin_next),
            u: std::mem::replace(&mut self.u, u_next),
            u2_layer: std::mem::replace(&mut self.u2_layer, u2_next),
            u2_bar: std::mem::replace(&mut self.u2_bar, u2_bar_new),
            u1_total,
        });
        self.prev_traces = Some(traces);
        self.step_idx += 1;

        // diagnostics at the new time
        let np = NormParams::new(
            self.tracker.current_rho().max(1e-6),
            self.tracker.a_at(t_new),
            self.cfg.ell,
            self.cfg.m_max,
        )?;
        let report = norms::compute_norms(&self.u, &np);
        self.tracker.evolve_radius(report.z, dt)?;
        self.record_norms(report);

        if self.step_idx % self.cfg.sample_every == 0 || self.is_done() {
            let ns = self.norm_history.last().unwrap();
            self.budget_samples.push(BudgetSample {
                t: ns.t,
                x: ns.x,
                y: ns.y,
                z: ns.z,
                rho: ns.rho,
            });
            let traces_new = self.traces_now();
            self.trace_samples.push(traces_new.clone());
            if let Some(old) = &self.prev_traces {
                let b = self
                    .outer_solver
                    .bernoulli_residual(old, &traces_new, self.cfg.ell)?;
                self.bernoulli_history.push((t_new, b));
            }
            // coupling defect: wall value of the layer unknown against the
            // linearized trace it is supposed to cancel
            let mut c = TraceField::zeros(&self.layer_grid, "coupling");
            let lin_tr = self.lin.u3.wall_row("w");
            for i in 0..self.layer_grid.n_x1 {
                c.values[i] = self.u.values[[i, 0]] + lin_tr.values[i];
            }
            self.coupling_history
                .push((t_new, c.weighted_l2(self.cfg.ell)));
        }
        Ok(())
    }

    fn stamp_step(&self, e: Error) -> Error {
        match e {
            Error::NonFinite { label, .. } => Error::NonFinite {
                label,
                step: self.step_idx,
            },
            other => other,
        }
    }

    pub fn is_done(&self) -> bool {
        self.outer.t >= self.t_final - 1e-12
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        while !self.is_done() {
            if self.tracker.aborted {
                self.warnings.push(format!(
                    "step {}: analyticity radius fell below its floor; run stopped early",
                    self.step_idx
                ));
                break;
            }
            self.step()?;
        }
        Ok(())
    }

    /// Expansion records at the last two times (for difference quotients and
    /// the residual sweep). Call after at least two steps.
    pub fn expansion_pair(&self) -> Result<(ExpansionState, ExpansionState)> {
        let prev = self.prev.as_ref().ok_or_else(|| {
            Error::Invalid("expansion pair needs at least two completed steps".into())
        })?;
        let prev2_u1 = self.prev2_u1_total.as_ref().ok_or_else(|| {
            Error::Invalid("expansion pair needs at least two completed steps".into())
        })?;
        let traces_prev = self
            .prev_traces
            .clone()
            .ok_or_else(|| Error::Invalid("missing previous traces".into()))?;
        let traces_new = self.traces_now();
        let e_old = compose::build_expansion(
            &self.outer_solver,
            &self.lin_solver,
            &prev.outer,
            &prev.lin,
            &prev.u,
            &prev.u2_layer,
            &prev.u2_bar,
            &traces_prev,
            prev2_u1,
            self.dt,
        )?;
        let e_new = compose::build_expansion(
            &self.outer_solver,
            &self.lin_solver,
            &self.outer,
            &self.lin,
            &self.u,
            &self.u2_layer,
            &self.u2_bar,
            &traces_new,
            &prev.u1_total,
            self.dt,
        )?;
        Ok((e_old, e_new))
    }

    pub fn energy_budget(&self) -> Result<radius::BudgetReport> {
        radius::energy_budget(&self.budget_samples, self.x0_sq)
    }

    pub fn identity_report(&self, tol: f64) -> Result<IdentityReport> {
        let (_, e_new) = self.expansion_pair()?;
        identity::order_identity_check(&e_new, self.cfg.ell, tol)
    }

    pub fn residual_report(&self) -> Result<ResidualReport> {
        let (e_old, e_new) = self.expansion_pair()?;
        residual::residual_sweep(&e_old, &e_new, &self.cfg.eps_sweep, self.cfg.ell)
    }

    /// Layer-only Cauchy sweep over the regularization schedule against the
    /// frozen trace history of this run's outer solve.
    pub fn regularization_sweep(&self) -> Result<layer::SweepReport> {
        let mut cfg = self.cfg.clone();
        cfg.t_end = self.t_final;
        cfg.t_star_fraction = 0.0;
        let data = Self::scenario(&cfg)?;
        // replay the outer solve to harvest traces
        let mut outer = data.outer;
        let mut history = Vec::new();
        let steps = (self.t_final / self.dt).round() as usize;
        for _ in 0..steps {
            let tr = {
                let t = self.outer_solver.extract_traces(&outer);
                if cfg.div_consistent_traces {
                    self.outer_solver.make_div_consistent(&t)
                } else {
                    t
                }
            };
            history.push(compose::retarget_traces(&tr, &self.layer_grid)?);
            outer = self.outer_solver.step_outer(&outer, self.dt)?;
        }
        let np = NormParams::new(
            RadiusTracker::initial_rho(cfg.rho0, cfg.tau),
            cfg.a0,
            cfg.ell,
            cfg.m_max,
        )?;
        layer::regularization_sweep(&data.layer_u, &history, &cfg.eps1_schedule, self.dt, &np)
    }
}

/// Artifact bundle written by a full run.
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Execute a full run and write every artifact plus the manifest.
pub fn run(cfg: &RunConfig) -> Result<(Pipeline, RunArtifacts)> {
    let out_dir = cfg.out_dir.clone();
    fs::create_dir_all(&out_dir)?;
    let mut files = Vec::new();
    let mut pipe = Pipeline::new(cfg.clone())?;
    let run_result = pipe.run_to_end();

    // norm history
    {
        let path = out_dir.join("norms.csv");
        let mut s = String::from("t,rho,a,X,Y,Z\n");
        for n in &pipe.norm_history {
            writeln!(
                s,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                n.t, n.rho, n.a, n.x, n.y, n.z
            )
            .unwrap();
        }
        fs::write(&path, s)?;
        files.push(path);
    }
    // scalar diagnostics
    {
        let path = out_dir.join("bernoulli.csv");
        let mut s = String::from("t,residual\n");
        for (t, r) in &pipe.bernoulli_history {
            writeln!(s, "{t:.12e},{r:.12e}").unwrap();
        }
        fs::write(&path, s)?;
        files.push(path);
        let path = out_dir.join("coupling.csv");
        let mut s = String::from("t,residual\n");
        for (t, r) in &pipe.coupling_history {
            writeln!(s, "{t:.12e},{r:.12e}").unwrap();
        }
        fs::write(&path, s)?;
        files.push(path);
    }
    // trace histories over the sampled times
    {
        let initial = pipe0_traces(&pipe);
        let pick = |tr: &TraceSet, which: usize| -> TraceField {
            match which {
                0 => tr.u1_bar.clone(),
                1 => tr.u2_bar.clone(),
                2 => tr.d3u3_bar.clone(),
                _ => tr.d1p0_bar.clone(),
            }
        };
        for (which, name) in [
            (0usize, "trace_u1_bar"),
            (1, "trace_u2_bar"),
            (2, "trace_d3u3_bar"),
            (3, "trace_d1p0_bar"),
        ] {
            let path = out_dir.join(format!("{name}.csv"));
            let mut w = io::TraceHistoryWriter::create(&path)?;
            if let Some(tr) = &initial {
                w.append(tr.t, &pick(tr, which))?;
            }
            for tr in &pipe.trace_samples {
                w.append(tr.t, &pick(tr, which))?;
            }
            w.finish()?;
            files.push(path);
        }
    }
    // field dumps
    for (name, f) in [
        ("u_B1_3", &pipe.u),
        ("u2_B0", &pipe.u2_layer),
        ("u1_I0", &pipe.outer.u1),
        ("u2_I0", &pipe.outer.u2),
        ("u3_I0", &pipe.outer.u3),
        ("p_I0", &pipe.outer.p),
        ("u1_I1", &pipe.lin.u1),
        ("u3_I1", &pipe.lin.u3),
    ] {
        let path = out_dir.join(format!("{name}.bin"));
        io::dump_field(f, &path)?;
        files.push(path);
    }
    {
        let path = out_dir.join("u_B1_3.csv");
        io::field_csv(&pipe.u, &path)?;
        files.push(path);
    }
    // budget and identities (need enough samples/steps)
    if let Ok(budget) = pipe.energy_budget() {
        let path = out_dir.join("budget.txt");
        let mut s = String::new();
        writeln!(s, "energy budget over [0, {:.6}]", pipe.outer.t).unwrap();
        writeln!(s, "lhs                 {:.6e}", budget.lhs).unwrap();
        writeln!(s, "initial energy      {:.6e}", budget.x0_sq).unwrap();
        writeln!(s, "structural integral {:.6e}", budget.s1).unwrap();
        writeln!(s, "triple integral     {:.6e}", budget.s2).unwrap();
        writeln!(s, "fitted constant     {:.6e}", budget.c_fit).unwrap();
        writeln!(s, "signed supremum     {:.6e}", budget.c_signed).unwrap();
        fs::write(&path, s)?;
        files.push(path);
    }
    if pipe.step_idx >= 2 {
        if let Ok(rep) = pipe.identity_report(identity::DEFAULT_IDENTITY_TOL) {
            let path = out_dir.join("identities.txt");
            fs::write(&path, identity::render_report(&rep))?;
            files.push(path);
        }
    }
    // run report
    {
        let path = out_dir.join("run_report.txt");
        let mut s = String::new();
        writeln!(s, "scenario        {}", cfg.scenario.name()).unwrap();
        writeln!(s, "steps           {}", pipe.step_idx).unwrap();
        writeln!(s, "final time      {:.6e}", pipe.outer.t).unwrap();
        writeln!(s, "dt              {:.6e}", pipe.dt).unwrap();
        writeln!(
            s,
            "max principle   {}",
            if pipe.max_principle_ok {
                "held"
            } else {
                "violated"
            }
        )
        .unwrap();
        writeln!(s, "radius aborted  {}", pipe.tracker.aborted).unwrap();
        writeln!(s, "seed            {}", cfg.seed).unwrap();
        match &run_result {
            Ok(()) => writeln!(s, "status          completed").unwrap(),
            Err(e) => writeln!(s, "status          failed: {e}").unwrap(),
        }
        if let Some((count, worst)) = pipe.decay_warnings {
            writeln!(
                s,
                "warning: left-edge decay check failed on {count} steps (worst ratio {worst:.2e})"
            )
            .unwrap();
        }
        if let Some((count, worst)) = pipe.tail_warnings {
            writeln!(
                s,
                "warning: tangential spectrum tail above threshold on {count} steps (worst ratio {worst:.2e})"
            )
            .unwrap();
        }
        for w in &pipe.warnings {
            writeln!(s, "warning: {w}").unwrap();
        }
        fs::write(&path, s)?;
        files.push(path);
    }
    write_manifest(&out_dir, cfg, &files)?;
    run_result?;
    Ok((pipe, RunArtifacts { out_dir, files }))
}

/// Residual sweep entry point: coupled run, then per-eps residual
/// measurements over a scoped worker pool.
pub fn sweep(cfg: &RunConfig) -> Result<(Pipeline, ResidualReport)> {
    let mut pipe = Pipeline::new(cfg.clone())?;
    pipe.run_to_end()?;
    let (e_old, e_new) = pipe.expansion_pair()?;
    let ell = cfg.ell;
    let eps_list = cfg.eps_sweep.clone();
    let mut entries: Vec<Option<residual::ResidualEntry>> = vec![None; eps_list.len()];
    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for (k, &eps) in eps_list.iter().enumerate() {
            let e_old = &e_old;
            let e_new = &e_new;
            handles.push((
                k,
                scope.spawn(move || -> Result<residual::ResidualEntry> {
                    let (target, _) = compose::composition_grid(e_new, eps)?;
                    residual::nsc_residual(e_old, e_new, eps, &target, ell)
                }),
            ));
        }
        for (k, h) in handles {
            entries[k] = Some(
                h.join()
                    .map_err(|_| Error::Invalid("residual worker panicked".into()))??,
            );
        }
        Ok(())
    })?;
    let entries: Vec<residual::ResidualEntry> = entries.into_iter().map(|e| e.unwrap()).collect();
    let fitted_slope = residual::fit_slope(
        &entries.iter().map(|e| e.eps).collect::<Vec<_>>(),
        &entries.iter().map(|e| e.total).collect::<Vec<_>>(),
    );
    let report = ResidualReport {
        entries,
        fitted_slope,
    };

    // artifacts
    let out_dir = cfg.out_dir.clone();
    fs::create_dir_all(&out_dir)?;
    let mut files = Vec::new();
    {
        let path = out_dir.join("residual.csv");
        let mut s = String::from("eps,component,window,residual\n");
        for e in &report.entries {
            for (c, name) in ["u1", "u2", "u3", "div"].iter().enumerate() {
                writeln!(s, "{:.12e},{name},near_wall,{:.12e}", e.eps, e.window[c]).unwrap();
                writeln!(s, "{:.12e},{name},bulk,{:.12e}", e.eps, e.bulk[c]).unwrap();
            }
        }
        fs::write(&path, s)?;
        files.push(path);
    }
    {
        let path = out_dir.join("residual_summary.txt");
        let mut s = String::new();
        writeln!(s, "momentum residual vs eps").unwrap();
        for e in &report.entries {
            writeln!(s, "  eps {:.3e}  total {:.6e}", e.eps, e.total).unwrap();
        }
        writeln!(s, "fitted log-log slope: {:.4}", report.fitted_slope).unwrap();
        fs::write(&path, s)?;
        files.push(path);
    }
    write_manifest(&out_dir, cfg, &files)?;
    Ok((pipe, report))
}

fn pipe0_traces(pipe: &Pipeline) -> Option<TraceSet> {
    // the first sample is the state at the final recorded step when no
    // intermediate sample fired; emit the current traces then
    if pipe.trace_samples.is_empty() {
        Some(pipe.traces_now())
    } else {
        None
    }
}

fn write_manifest(out_dir: &Path, cfg: &RunConfig, files: &[PathBuf]) -> Result<()> {
    let mut s = String::new();
    let cfg_hash = Sha256::digest(cfg.canonical_text().as_bytes());
    writeln!(s, "config_sha256 {}", hex_string(&cfg_hash)).unwrap();
    let mut sorted: Vec<&PathBuf> = files.iter().collect();
    sorted.sort();
    for path in sorted {
        let bytes = fs::read(path)?;
        let h = Sha256::digest(&bytes);
        let name = path.file_name().unwrap().to_string_lossy();
        writeln!(s, "sha256 {} {}", hex_string(&h), name).unwrap();
    }
    fs::write(out_dir.join("manifest.txt"), s)?;
    Ok(())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
