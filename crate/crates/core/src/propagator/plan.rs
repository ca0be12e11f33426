//! Stage plans for the split integrators.

use std::fmt;

use crate::grid::Axis;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Physical,
    Rotating,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Frame::Physical => "physical",
            Frame::Rotating => "rotating",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Strang,
    Fourth,
}

impl Order {
    pub fn name(self) -> &'static str {
        match self {
            Order::Strang => "strang",
            Order::Fourth => "fourth",
        }
    }
}

/// Triple-jump coefficients `(γ₁, γ₂)` with `2γ₁ + γ₂ = 1`.
pub fn fourth_order_gammas() -> (f64, f64) {
    let c = 2f64.cbrt();
    (1.0 / (2.0 - c), -c / (2.0 - c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageKind {
    Advect(Axis),
    FieldSolve,
    Source,
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageKind::Advect(axis) => write!(f, "advect {axis}"),
            StageKind::FieldSolve => f.write_str("field solve"),
            StageKind::Source => f.write_str("source"),
        }
    }
}

/// One operation of a plan over the absolute interval `[t_a, t_b]`.
///
/// `t_b < t_a` is legal and appears in the negative fourth-order substep.
/// Source stages are point evaluations: `t_b - t_a` is the Euler step and the
/// source is frozen at the midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub kind: StageKind,
    pub t_a: f64,
    pub t_b: f64,
    pub frame: Frame,
    /// Step (counted from the plan start) in which the stage begins.
    pub step: usize,
}

impl Stage {
    pub fn dt(&self) -> f64 {
        self.t_b - self.t_a
    }

    pub fn is_advection(&self) -> bool {
        matches!(self.kind, StageKind::Advect(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StagePlan {
    pub stages: Vec<Stage>,
    pub merged: bool,
    pub frame: Frame,
    pub n_steps: usize,
    pub t_start: f64,
    pub t_end: f64,
}

impl StagePlan {
    pub fn advection_count(&self) -> usize {
        self.stages.iter().filter(|s| s.is_advection()).count()
    }

    pub fn field_solve_count(&self) -> usize {
        self.stages.iter().filter(|s| s.kind == StageKind::FieldSolve).count()
    }
}

/// Scheme-level options that shape the plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    pub frame: Frame,
    pub order: Order,
    pub h: f64,
    pub merge: bool,
    pub source: bool,
}

const V_FORWARD: [Axis; 3] = [Axis::Vx, Axis::Vy, Axis::Vz];
const V_BACKWARD: [Axis; 3] = [Axis::Vz, Axis::Vy, Axis::Vx];
const X_FORWARD: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
const X_BACKWARD: [Axis; 3] = [Axis::Z, Axis::Y, Axis::X];

fn push_group(out: &mut Vec<Stage>, axes: [Axis; 3], t_a: f64, t_b: f64, frame: Frame, step: usize) {
    for axis in axes {
        out.push(Stage { kind: StageKind::Advect(axis), t_a, t_b, frame, step });
    }
}

/// Stages of one Strang substep of length `dt` starting at `t_a`.
///
/// `split_space` spells the spatial flow as two half sweeps per axis, the
/// twelve-operation form before the commuting spatial stages are fused.
pub fn strang_substep(
    frame: Frame,
    t_a: f64,
    dt: f64,
    source: bool,
    split_space: bool,
    step: usize,
) -> Vec<Stage> {
    let t_m = t_a + 0.5 * dt;
    let t_b = t_a + dt;
    let mut out = Vec::with_capacity(13);
    push_group(&mut out, V_FORWARD, t_a, t_m, frame, step);
    if split_space {
        push_group(&mut out, X_FORWARD, t_a, t_m, frame, step);
        push_group(&mut out, X_BACKWARD, t_m, t_b, frame, step);
    } else {
        push_group(&mut out, X_FORWARD, t_a, t_b, frame, step);
    }
    out.push(Stage { kind: StageKind::FieldSolve, t_a: t_b, t_b, frame, step });
    if source {
        out.push(Stage { kind: StageKind::Source, t_a, t_b, frame, step });
    }
    push_group(&mut out, V_BACKWARD, t_m, t_b, frame, step);
    out
}

/// Substep lengths of one full step.
fn substeps(order: Order, h: f64) -> Vec<f64> {
    match order {
        Order::Strang => vec![h],
        Order::Fourth => {
            let (g1, g2) = fourth_order_gammas();
            vec![g1 * h, g2 * h, g1 * h]
        }
    }
}

/// Builds the plan for `n_steps` steps starting at absolute time `t0`.
///
/// The physical frame always uses the fused nine-stage step (twelve when
/// `merge` is off). The rotating frame additionally fuses the trailing
/// velocity half sweeps of each substep with the leading ones of the next
/// when `merge` is set, because velocity flows commute there.
pub fn plan_stages(opts: PlanOptions, t0: f64, n_steps: usize) -> StagePlan {
    let mut stages = Vec::new();
    let subs = substeps(opts.order, opts.h);
    let split_space = !opts.merge && opts.frame == Frame::Physical;
    let mut t = t0;
    for step in 0..n_steps {
        // step boundaries at t0 + k h exactly, independent of rounding in the substeps
        let step_start = t0 + step as f64 * opts.h;
        t = step_start;
        for (i, &dt) in subs.iter().enumerate() {
            let t_next = if i + 1 == subs.len() { t0 + (step + 1) as f64 * opts.h } else { t + dt };
            let dt = t_next - t;
            let sub = strang_substep(opts.frame, t, dt, opts.source, split_space, step);
            append(&mut stages, sub, opts.merge && opts.frame == Frame::Rotating);
            t = t_next;
        }
    }
    StagePlan {
        stages,
        merged: opts.merge,
        frame: opts.frame,
        n_steps,
        t_start: t0,
        t_end: if n_steps == 0 { t0 } else { t },
    }
}

/// Appends a substep, fusing its leading velocity group with the trailing
/// group already in `stages` when `fuse` is set.
fn append(stages: &mut Vec<Stage>, sub: Vec<Stage>, fuse: bool) {
    let n = stages.len();
    let can_fuse = fuse
        && n >= 3
        && stages[n - 3..].iter().all(|s| {
            matches!(s.kind, StageKind::Advect(a) if a.kind() == crate::grid::AxisKind::Velocity)
        });
    if !can_fuse {
        stages.extend(sub);
        return;
    }
    let lead = &sub[..3];
    for prev in stages[n - 3..].iter_mut() {
        let next = lead
            .iter()
            .find(|s| s.kind == prev.kind)
            .expect("leading group covers every velocity axis");
        debug_assert_eq!(prev.t_b, next.t_a);
        prev.t_b = next.t_b;
    }
    stages.extend_from_slice(&sub[3..]);
}
