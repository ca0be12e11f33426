//! Background-gradient drive for the unstable Bernstein case.

use rayon::prelude::*;

use crate::grid::DistributionFunction;
use crate::rotation::to_physical;

/// Normalized density and temperature gradients along `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientParams {
    pub kappa_n: f64,
    pub kappa_t: f64,
}

impl GradientParams {
    pub fn is_zero(&self) -> bool {
        self.kappa_n == 0.0 && self.kappa_t == 0.0
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Diamagnetic drift `v* = B0×(∇n/n) - B0×(∇T/T)(3 - |v|²)/2` with `B0 = ẑ`
/// and the gradients `κ x̂`.
pub fn v_star(v: [f64; 3], params: GradientParams) -> [f64; 3] {
    let b0 = [0.0, 0.0, 1.0];
    let dn = cross(b0, [params.kappa_n, 0.0, 0.0]);
    let dt = cross(b0, [params.kappa_t, 0.0, 0.0]);
    let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let w = 0.5 * (3.0 - v2);
    [dn[0] - dt[0] * w, dn[1] - dt[1] * w, dn[2] - dt[2] * w]
}

/// Background and drift evaluated on the velocity grid.
pub struct GradientSource {
    pub params: GradientParams,
    /// `f_M` at each velocity node.
    pub background: Vec<f64>,
    /// Velocity nodes in grid coordinates.
    pub nodes: Vec<[f64; 3]>,
}

/// Forward-Euler update `f += h (v*·∇φ) f_M` with `∇φ = -E`.
///
/// In the rotating frame `v*` uses the physical velocity `D⁻¹(t) ṽ`.
pub fn apply_gradient_source(
    f: &mut DistributionFunction,
    grad_phi: &[Vec<f64>; 3],
    h: f64,
    t_stage: f64,
    source: &GradientSource,
    rotating_omega: Option<f64>,
) {
    if source.params.is_zero() || h == 0.0 {
        return;
    }
    let nv = f.grid().velocity_len();
    let drift: Vec<[f64; 3]> = source
        .nodes
        .iter()
        .map(|v| {
            let v = match rotating_omega {
                Some(omega) => to_physical(v, omega, t_stage),
                None => *v,
            };
            v_star(v, source.params)
        })
        .collect();
    f.values_mut().par_chunks_mut(nv).enumerate().for_each(|(s, block)| {
        let g = [grad_phi[0][s], grad_phi[1][s], grad_phi[2][s]];
        if g == [0.0; 3] {
            return;
        }
        for (w, value) in block.iter_mut().enumerate() {
            let d = drift[w];
            *value += h * (d[0] * g[0] + d[1] * g[1] + d[2] * g[2]) * source.background[w];
        }
    });
}
