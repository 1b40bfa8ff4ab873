//! Analytic initial-data families.
//!
//! Every scenario is built from Gaussian-modulated tangential profiles so
//! the data is analytic, decays super-exponentially toward the domain
//! edges, and satisfies the structural constraints by construction: the
//! outer velocity comes from a streamfunction (divergence-free and
//! impermeable), the layer datum matches the wall Neumann condition through
//! an explicit compatibility shape, and the linearized state carries the
//! exact wall value the layer trace dictates.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::euler::{OuterSolver, OuterState};
use crate::euler_lin::{LinOuterState, LinSolver};
use crate::field::{Field2D, TraceField};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// All fields identically zero.
    Zero,
    /// Tangentially uniform shear: an exact steady state of the outer solve.
    Shear,
    /// Small-amplitude coupled data with a quiescent second component.
    SmallData,
    /// Small-amplitude data with nonzero second components, exercising the
    /// transport chain.
    Transport,
}

impl ScenarioKind {
    pub fn parse(s: &str) -> Result<ScenarioKind> {
        match s {
            "zero" => Ok(ScenarioKind::Zero),
            "shear" => Ok(ScenarioKind::Shear),
            "smalldata" => Ok(ScenarioKind::SmallData),
            "transport" => Ok(ScenarioKind::Transport),
            other => Err(Error::Config(format!(
                "unknown scenario '{other}' (expected zero|shear|smalldata|transport)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Zero => "zero",
            ScenarioKind::Shear => "shear",
            ScenarioKind::SmallData => "smalldata",
            ScenarioKind::Transport => "transport",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub amplitude: f64,
    pub mode: usize,
    pub width: f64,
    pub a0: f64,
}

/// Initial data for the whole coupled pipeline.
pub struct ScenarioData {
    pub outer: OuterState,
    pub lin: LinOuterState,
    /// Layer unknown u (order-sqrt(eps) wall-normal component).
    pub layer_u: Field2D,
    /// Layer second component.
    pub layer_u2: Field2D,
    /// Transported wall trace of the outer second component.
    pub u2_bar: TraceField,
}

impl ScenarioSpec {
    pub fn build(&self, outer_grid: &Arc<Grid>, layer_grid: &Arc<Grid>) -> Result<ScenarioData> {
        if outer_grid.n_x1 != layer_grid.n_x1 || outer_grid.l != layer_grid.l {
            return Err(Error::Config(
                "outer and layer grids must share the tangential sampling".into(),
            ));
        }
        let os = OuterSolver::new(outer_grid)?;
        let ls = LinSolver::new(outer_grid)?;
        let a = self.amplitude;
        let w = self.width;
        let a0 = self.a0;
        let m = self.mode as f64;
        let l = outer_grid.l;

        // tangential envelope and its derivative
        let env = move |x: f64| (-(x / w) * (x / w)).exp();
        let envp = move |x: f64| -2.0 * x / (w * w) * (-(x / w) * (x / w)).exp();
        let modef = move |x: f64| (std::f64::consts::PI * m * x / l).cos();
        let wall_shape = move |x: f64| env(x) * modef(x);

        match self.kind {
            ScenarioKind::Zero => {
                let psi = Field2D::zeros(outer_grid, "psi");
                let u2 = Field2D::zeros(outer_grid, "u2");
                let outer = os.state_from_streamfunction(&psi, &u2, 0.0)?;
                let lin = ls.state_from_parts(
                    &Field2D::zeros(outer_grid, "psi1"),
                    &Field2D::zeros(outer_grid, "u2"),
                    &TraceField::zeros(outer_grid, "g"),
                    0.0,
                )?;
                Ok(ScenarioData {
                    outer,
                    lin,
                    layer_u: Field2D::zeros(layer_grid, "u_B1_3"),
                    layer_u2: Field2D::zeros(layer_grid, "u2_B0"),
                    u2_bar: TraceField::zeros(outer_grid, "u2_bar"),
                })
            }
            ScenarioKind::Shear => {
                // u1 = U(x3), everything else zero; steady by symmetry
                let omega = Field2D::from_fn(outer_grid, "omega", move |_, y| {
                    let d = (y - 4.0) / 2.0;
                    a * (2.0 * d / 2.0) * (-d * d).exp()
                });
                let u2 = Field2D::zeros(outer_grid, "u2");
                let outer = os.state_from_vorticity(&omega, &u2, 0.0)?;
                let lin = ls.state_from_parts(
                    &Field2D::zeros(outer_grid, "psi1"),
                    &Field2D::zeros(outer_grid, "u2"),
                    &TraceField::zeros(outer_grid, "g"),
                    0.0,
                )?;
                Ok(ScenarioData {
                    outer,
                    lin,
                    layer_u: Field2D::zeros(layer_grid, "u_B1_3"),
                    layer_u2: Field2D::zeros(layer_grid, "u2_B0"),
                    u2_bar: TraceField::zeros(outer_grid, "u2_bar"),
                })
            }
            ScenarioKind::SmallData | ScenarioKind::Transport => {
                let with_u2 = self.kind == ScenarioKind::Transport;
                // outer: psi = a * shape(x1) * x3 e^{-(x3/2)^2}
                let psi = Field2D::from_fn(outer_grid, "psi", move |x, y| {
                    a * wall_shape(x) * y * (-(y / 2.0) * (y / 2.0)).exp()
                });
                let u2_outer = if with_u2 {
                    Field2D::from_fn(outer_grid, "u2", move |x, y| {
                        0.5 * a * env(x) * (-(y / 2.0) * (y / 2.0)).exp()
                    })
                } else {
                    Field2D::zeros(outer_grid, "u2")
                };
                let outer = os.state_from_streamfunction(&psi, &u2_outer, 0.0)?;
                let traces0 = os.extract_traces(&outer);

                // layer: free part with zero-mean wall trace, plus the shape
                // that carries the wall Neumann value d1(u1_bar)
                let b0 = crate::layer::neumann_from_traces(&traces0);
                let mut layer_u = Field2D::from_fn(layer_grid, "u_B1_3", move |x, y| {
                    0.5 * a * envp(x) * (-2.0 * a0 * y * y).exp()
                });
                for i in 0..layer_grid.n_x1 {
                    for j in 0..layer_grid.n_y {
                        let y = layer_grid.y(j);
                        layer_u.values[[i, j]] += b0.values[i] * y * (-2.0 * a0 * y * y).exp();
                    }
                }
                // pin the top row; the Gaussian tail there is below roundoff
                for i in 0..layer_grid.n_x1 {
                    layer_u.values[[i, layer_grid.n_y - 1]] = 0.0;
                }

                // linearized state: wall datum g = layer trace at t = 0
                let g0 = layer_u.wall_row("g");
                let g0 = g0.on_grid(outer_grid, "g")?;
                let psi1 = Field2D::from_fn(outer_grid, "psi1", move |x, y| {
                    0.3 * a * env(x) * y * (-(y / 2.0) * (y / 2.0)).exp()
                });
                let u2_lin = if with_u2 {
                    Field2D::from_fn(outer_grid, "u2", move |x, y| {
                        0.2 * a * env(x) * (-(y / 2.0) * (y / 2.0)).exp()
                    })
                } else {
                    Field2D::zeros(outer_grid, "u2")
                };
                let lin = ls.state_from_parts(&psi1, &u2_lin, &g0, 0.0)?;

                // layer second component honors u2(x1, 0) = -u2_bar
                let u2_bar = outer.u2.wall_row("u2_bar");
                let u2_bar_l = u2_bar.on_grid(layer_grid, "u2_bar")?;
                let mut layer_u2 = Field2D::from_fn(layer_grid, "u2_B0", move |x, y| {
                    0.4 * a * wall_shape(x) * y * (-2.0 * a0 * y * y).exp()
                });
                for i in 0..layer_grid.n_x1 {
                    for j in 0..layer_grid.n_y {
                        let y = layer_grid.y(j);
                        layer_u2.values[[i, j]] -= u2_bar_l.values[i] * (-2.0 * a0 * y * y).exp();
                    }
                }
                Ok(ScenarioData {
                    outer,
                    lin,
                    layer_u,
                    layer_u2,
                    u2_bar,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops;

    fn grids() -> (Arc<Grid>, Arc<Grid>) {
        (
            Grid::new(128, 65, 10.0, 8.0).unwrap(),
            Grid::new(128, 129, 10.0, 8.0).unwrap(),
        )
    }

    #[test]
    fn smalldata_satisfies_structural_constraints() {
        let (og, lg) = grids();
        let spec = ScenarioSpec {
            kind: ScenarioKind::SmallData,
            amplitude: 0.05,
            mode: 1,
            width: 2.0,
            a0: 0.25,
        };
        let data = spec.build(&og, &lg).unwrap();
        let os = OuterSolver::new(&og).unwrap();
        // divergence-free, impermeable outer data
        assert!(os.divergence_norm(&data.outer, 1.0) <= 1e-10);
        for i in 0..og.n_x1 {
            assert_eq!(data.outer.u3.values[[i, 0]], 0.0);
        }
        // linearized wall condition matches the layer trace
        for i in 0..og.n_x1 {
            assert!(
                (data.lin.u3.values[[i, 0]] + data.layer_u.values[[i, 0]]).abs() < 1e-13,
                "compatibility defect at {i}"
            );
        }
        // layer Neumann compatibility: one-sided dy of u at the wall matches
        // d1 u1_bar to stencil order
        let traces = os.extract_traces(&data.outer);
        let b = crate::layer::neumann_from_traces(&traces);
        let dyu = ops::d_y(&data.layer_u, 1).unwrap();
        let mut err = 0.0f64;
        for i in 0..lg.n_x1 {
            err = err.max((dyu.values[[i, 0]] - b.values[i]).abs());
        }
        let dy = lg.dy();
        assert!(
            err <= 0.05 * spec.amplitude.max(dy * dy),
            "neumann defect {err}"
        );
        // zero-mean wall trace of the layer unknown
        let g = data.layer_u.wall_row("g");
        assert!(g.mean().abs() < 1e-3 * spec.amplitude);
    }

    #[test]
    fn transport_scenario_wall_dirichlet_consistency() {
        let (og, lg) = grids();
        let spec = ScenarioSpec {
            kind: ScenarioKind::Transport,
            amplitude: 0.05,
            mode: 1,
            width: 2.0,
            a0: 0.25,
        };
        let data = spec.build(&og, &lg).unwrap();
        // u2 layer wall row equals minus the outer trace
        for i in 0..lg.n_x1 {
            assert!(
                (data.layer_u2.values[[i, 0]] + data.u2_bar.values[i]).abs() < 1e-13,
                "u2 wall mismatch at {i}"
            );
        }
    }
}
