//! Split semi-Lagrangian integrators in the physical and rotating frames.
//!
//! Every advection stage is a constant shift per pencil. Physical-frame
//! shifts are `Δt·v` for space and `Δt·(E + v×B0)` for velocity, with the
//! cross term frozen at the pencil's own coordinates. Rotating-frame shifts
//! are `(∫D⁻¹dt · ṽ)` for space and `(∫D dt · E)` for velocity, taken over
//! the stage's absolute interval.

mod plan;
mod source;
mod sweep;

pub use plan::{
    fourth_order_gammas, plan_stages, strang_substep, Frame, Order, PlanOptions, Stage, StageKind,
    StagePlan,
};
pub use source::{apply_gradient_source, v_star, GradientParams, GradientSource};
pub use sweep::{advect_axis, SweepError};

use thiserror::Error;

use crate::fields::{FieldModel, FieldSolver, FieldState};
use crate::grid::{Axis, AxisKind, DistributionFunction, PhaseSpaceGrid};
use crate::interpolation::InterpMethod;
use crate::rotation::integrated_rotation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub frame: Frame,
    pub order: Order,
    pub interp: InterpMethod,
    pub h: f64,
    pub omega_c: f64,
    /// Fuse adjacent velocity stages across steps (rotating frame) and the
    /// paired spatial half sweeps (both frames).
    pub merge: bool,
}

#[derive(Debug, Error)]
pub enum PropagatorError {
    #[error("step {step}, stage {index} ({kind}) over [{t_a}, {t_b}]: {source}")]
    Stage {
        step: usize,
        index: usize,
        kind: StageKind,
        t_a: f64,
        t_b: f64,
        #[source]
        source: SweepError,
    },
}

impl PropagatorError {
    pub fn step(&self) -> usize {
        match self {
            PropagatorError::Stage { step, .. } => *step,
        }
    }
}

pub struct Propagator {
    grid: PhaseSpaceGrid,
    scheme: SchemeConfig,
    solver: FieldSolver,
    fields: FieldState,
    source: Option<GradientSource>,
    velocity_nodes: Vec<[f64; 3]>,
}

impl Propagator {
    /// Binds a scheme to `f`'s grid and solves the initial fields.
    pub fn new(
        f: &DistributionFunction,
        scheme: SchemeConfig,
        model: FieldModel,
        source: Option<GradientSource>,
    ) -> Self {
        let grid = f.grid().clone();
        let solver = FieldSolver::new(&grid, model);
        let fields = solver.solve(f);
        let velocity_nodes = (0..grid.velocity_len()).map(|w| grid.velocity_node(w)).collect();
        Self { grid, scheme, solver, fields, source, velocity_nodes }
    }

    pub fn scheme(&self) -> &SchemeConfig {
        &self.scheme
    }

    pub fn fields(&self) -> &FieldState {
        &self.fields
    }

    pub fn plan_options(&self) -> PlanOptions {
        PlanOptions {
            frame: self.scheme.frame,
            order: self.scheme.order,
            h: self.scheme.h,
            merge: self.scheme.merge,
            source: self.source.is_some(),
        }
    }

    /// Advances `n_steps` steps from `t0` using the configured scheme and
    /// returns the final time.
    pub fn advance(&mut self, f: &mut DistributionFunction, t0: f64, n_steps: usize) -> Result<f64, PropagatorError> {
        let plan = plan_stages(self.plan_options(), t0, n_steps);
        self.execute(f, &plan)?;
        Ok(plan.t_end)
    }

    pub fn execute(&mut self, f: &mut DistributionFunction, plan: &StagePlan) -> Result<(), PropagatorError> {
        self.run_stages(f, &plan.stages)
    }

    fn run_stages(&mut self, f: &mut DistributionFunction, stages: &[Stage]) -> Result<(), PropagatorError> {
        for (index, stage) in stages.iter().enumerate() {
            self.run_stage(f, stage).map_err(|source| PropagatorError::Stage {
                step: stage.step,
                index,
                kind: stage.kind,
                t_a: stage.t_a,
                t_b: stage.t_b,
                source,
            })?;
        }
        Ok(())
    }

    fn run_stage(&mut self, f: &mut DistributionFunction, stage: &Stage) -> Result<(), SweepError> {
        match stage.kind {
            StageKind::Advect(axis) => {
                if self.grid.is_degenerate(axis) {
                    return Ok(());
                }
                self.advect(f, axis, stage)
            }
            StageKind::FieldSolve => {
                self.fields = self.solver.solve(f);
                Ok(())
            }
            StageKind::Source => {
                if let Some(src) = &self.source {
                    let grad_phi = self.fields.e.clone().map(|c| c.into_iter().map(|e| -e).collect());
                    let t_mid = 0.5 * (stage.t_a + stage.t_b);
                    let omega = match stage.frame {
                        Frame::Rotating => Some(self.scheme.omega_c),
                        Frame::Physical => None,
                    };
                    apply_gradient_source(f, &grad_phi, stage.dt(), t_mid, src, omega);
                }
                Ok(())
            }
        }
    }

    fn advect(&self, f: &mut DistributionFunction, axis: Axis, stage: &Stage) -> Result<(), SweepError> {
        let nv = self.grid.velocity_len();
        let nodes = &self.velocity_nodes;
        let e = &self.fields.e;
        let omega = self.scheme.omega_c;
        let dt = stage.dt();
        let c = axis.component();
        let interp = self.scheme.interp;
        match (stage.frame, axis.kind()) {
            (Frame::Physical, AxisKind::Spatial) => {
                advect_axis(f, axis, |base| dt * nodes[base % nv][c], interp)
            }
            (Frame::Physical, AxisKind::Velocity) => {
                // v×B0 with B0 = ẑ gives (v_y, -v_x, 0)
                advect_axis(
                    f,
                    axis,
                    |base| {
                        let (s, v) = (base / nv, nodes[base % nv]);
                        let lorentz = [v[1], -v[0], 0.0];
                        dt * (e[c][s] + omega * lorentz[c])
                    },
                    interp,
                )
            }
            (Frame::Rotating, AxisKind::Spatial) => {
                let m = integrated_rotation(omega, stage.t_a, stage.t_b, true).0[c];
                advect_axis(
                    f,
                    axis,
                    |base| {
                        let v = nodes[base % nv];
                        m[0] * v[0] + m[1] * v[1] + m[2] * v[2]
                    },
                    interp,
                )
            }
            (Frame::Rotating, AxisKind::Velocity) => {
                let m = integrated_rotation(omega, stage.t_a, stage.t_b, false).0[c];
                advect_axis(
                    f,
                    axis,
                    |base| {
                        let s = base / nv;
                        m[0] * e[0][s] + m[1] * e[1][s] + m[2] * e[2][s]
                    },
                    interp,
                )
            }
        }
    }

    /// One physical-frame Strang step of length `h` from `t0`.
    pub fn strang_step_physical(&mut self, f: &mut DistributionFunction, h: f64, t0: f64) -> Result<(), PropagatorError> {
        let stages = strang_substep(Frame::Physical, t0, h, self.source.is_some(), false, 0);
        self.run_stages(f, &stages)
    }

    /// One rotating-frame Strang step of length `h` from `t0`.
    pub fn strang_step_rotating(&mut self, f: &mut DistributionFunction, h: f64, t0: f64) -> Result<(), PropagatorError> {
        let stages = strang_substep(Frame::Rotating, t0, h, self.source.is_some(), false, 0);
        self.run_stages(f, &stages)
    }

    /// Triple-jump composition of this scheme's Strang step.
    pub fn fourth_order_step(&mut self, f: &mut DistributionFunction, h: f64, t0: f64) -> Result<(), PropagatorError> {
        let frame = self.scheme.frame;
        fourth_order_step(
            |sub_h, t| match frame {
                Frame::Physical => self.strang_step_physical(f, sub_h, t),
                Frame::Rotating => self.strang_step_rotating(f, sub_h, t),
            },
            h,
            t0,
        )
    }
}

/// Applies `base(γ₁h, t0)`, `base(γ₂h, t0 + γ₁h)`, `base(γ₁h, t0 + (γ₁+γ₂)h)`.
pub fn fourth_order_step<E, F>(mut base: F, h: f64, t0: f64) -> Result<(), E>
where
    F: FnMut(f64, f64) -> Result<(), E>,
{
    let (g1, g2) = fourth_order_gammas();
    let t1 = t0 + g1 * h;
    let t2 = t1 + g2 * h;
    base(g1 * h, t0)?;
    base(t2 - t1, t1)?;
    base(t0 + h - t2, t2)
}
