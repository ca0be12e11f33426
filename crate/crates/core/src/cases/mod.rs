//! Initial conditions and closed-form references for the test cases.

pub mod bessel;

use std::f64::consts::PI;

use crate::grid::{Axis, PhaseSpaceGrid};
use crate::propagator::{Frame, GradientParams};
use crate::rotation::{integrated_rotation, rotation_matrix, to_physical};

pub use bessel::{bessel_i, bessel_i_scaled, bessel_j, BesselError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    RotationOnly,
    ConstFields,
    NibwStable,
    NibwUnstable,
}

impl CaseKind {
    pub const ALL: [CaseKind; 4] =
        [CaseKind::RotationOnly, CaseKind::ConstFields, CaseKind::NibwStable, CaseKind::NibwUnstable];

    pub fn name(self) -> &'static str {
        match self {
            CaseKind::RotationOnly => "rotation_only",
            CaseKind::ConstFields => "const_fields",
            CaseKind::NibwStable => "nibw_stable",
            CaseKind::NibwUnstable => "nibw_unstable",
        }
    }

    pub fn from_name(name: &str) -> Option<CaseKind> {
        CaseKind::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Whether a closed-form reference exists.
    pub fn is_analytic(self) -> bool {
        matches!(self, CaseKind::RotationOnly | CaseKind::ConstFields)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseParams {
    pub kind: CaseKind,
    pub epsilon: f64,
    pub e0: [f64; 3],
    pub alpha: f64,
    pub m_max: u32,
    pub p_max: u32,
    pub kappa_n: f64,
    pub kappa_t: f64,
}

impl CaseParams {
    pub fn new(kind: CaseKind) -> Self {
        Self {
            kind,
            epsilon: 0.1,
            e0: match kind {
                CaseKind::ConstFields => [0.1, 0.0, 0.0],
                _ => [0.0; 3],
            },
            alpha: 1e-3,
            m_max: 8,
            p_max: 6,
            kappa_n: 0.44,
            kappa_t: 0.36,
        }
    }

    pub fn gradients(&self) -> GradientParams {
        GradientParams { kappa_n: self.kappa_n, kappa_t: self.kappa_t }
    }
}

/// `f₀(v) = exp(-|v - (1,0,0)|²/2) / √(2π)`.
pub fn maxwellian_ic(v: &[f64; 3]) -> f64 {
    let d2 = (v[0] - 1.0).powi(2) + v[1] * v[1] + v[2] * v[2];
    (-0.5 * d2).exp() / (2.0 * PI).sqrt()
}

/// Centered Maxwellian with unit density over `dims` velocity dimensions.
pub fn unit_maxwellian(v: &[f64; 3], dims: usize) -> f64 {
    let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    (-0.5 * v2).exp() / (2.0 * PI).powf(0.5 * dims as f64)
}

/// `1 + ε sin(k₀·x)`.
pub fn plane_wave_ic(x: &[f64; 3], k0: &[f64; 3], epsilon: f64) -> f64 {
    1.0 + epsilon * (k0[0] * x[0] + k0[1] * x[1] + k0[2] * x[2]).sin()
}

/// Lowest resolved wavevector `2π/L` along the non-degenerate spatial axes.
pub fn fundamental_wavevector(grid: &PhaseSpaceGrid) -> [f64; 3] {
    Axis::SPATIAL.map(|a| {
        if grid.is_degenerate(a) {
            0.0
        } else {
            2.0 * PI / grid.axis(a).length
        }
    })
}

/// Exact solution of the rotation-only problem. `v` is the grid velocity;
/// in the rotating frame the solution is stationary.
pub fn analytic_rotation(v: &[f64; 3], t: f64, frame: Frame, omega_c: f64) -> f64 {
    match frame {
        Frame::Physical => maxwellian_ic(&rotation_matrix(omega_c, t).apply(v)),
        Frame::Rotating => maxwellian_ic(v),
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// `(sinc x - 1)/x`, accurate near zero.
fn sinc_defect(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        x * (-1.0 / 6.0 + x2 / 120.0 - x2 * x2 / 5040.0)
    } else {
        (sinc(x) - 1.0) / x
    }
}

/// Foot `(x₀, v₀)` at time 0 of the characteristic through `(x, v)` at time
/// `t`, for `dX/dt = V`, `dV/dt = E0 + ω V×ẑ`.
///
/// With the drift `a = (-E_y, E_x, 0)/ω` the perpendicular velocity `v + a`
/// gyrates rigidly, which gives
/// `v₀ = D(t)(v + a) - a - E_z t ẑ` and
/// `x₀ = x - ∫₀ᵗD (v + a - E_z t ẑ) + a t - E_z t²/2 ẑ`.
/// The terms in `a` are regrouped so that `ω → 0` is regular.
pub fn const_field_backtrace(
    x: &[f64; 3],
    v: &[f64; 3],
    t: f64,
    frame: Frame,
    e0: &[f64; 3],
    omega_c: f64,
) -> ([f64; 3], [f64; 3]) {
    let v = match frame {
        Frame::Physical => *v,
        Frame::Rotating => to_physical(v, omega_c, t),
    };
    let phase = omega_c * t;
    let d = rotation_matrix(omega_c, t);
    let int_d = integrated_rotation(omega_c, 0.0, t, false);
    // S = ∫cos = sin(ωt)/ω, C = ∫sin = (1 - cos ωt)/ω
    let s1 = t * sinc(phase);
    let c1 = t * (0.5 * phase).sin() * sinc(0.5 * phase);
    // P = (S - t)/ω and Q = C/ω
    let p = t * t * sinc_defect(phase);
    let q = 0.5 * t * t * sinc(0.5 * phase).powi(2);
    let (ex, ey, ez) = (e0[0], e0[1], e0[2]);

    let dv = d.apply(&v);
    let v0 = [dv[0] + c1 * ey - s1 * ex, dv[1] - s1 * ey - c1 * ex, v[2] - ez * t];

    let iv = int_d.apply(&v);
    let x0 = [
        x[0] - iv[0] + p * ey + q * ex,
        x[1] - iv[1] + q * ey - p * ex,
        x[2] - v[2] * t + 0.5 * ez * t * t,
    ];
    (x0, v0)
}

/// Exact constant-field solution for the plane-wave × shifted Maxwellian
/// initial state.
#[allow(clippy::too_many_arguments)]
pub fn analytic_const_fields(
    x: &[f64; 3],
    v: &[f64; 3],
    t: f64,
    frame: Frame,
    e0: &[f64; 3],
    omega_c: f64,
    k0: &[f64; 3],
    epsilon: f64,
) -> f64 {
    let (x0, v0) = const_field_backtrace(x, v, t, frame, e0, omega_c);
    plane_wave_ic(&x0, k0, epsilon) * maxwellian_ic(&v0)
}

/// Mode amplitudes `min(1/(e^{-k²} I_p(k²)), 0.01 (p+1)^{1/3})`, indexed
/// `[m-1][p]`, together with the wavenumbers `k_m = 2πm/L_y`.
#[derive(Debug, Clone)]
pub struct NibwModes {
    pub ks: Vec<f64>,
    pub amplitudes: Vec<Vec<f64>>,
    pub alpha: f64,
    pub p_max: u32,
}

impl NibwModes {
    pub fn new(alpha: f64, m_max: u32, p_max: u32, length_y: f64) -> Result<Self, BesselError> {
        let mut ks = Vec::new();
        let mut amplitudes = Vec::new();
        for m in 1..=m_max {
            let k = 2.0 * PI * m as f64 / length_y;
            let mut row = Vec::new();
            for p in 0..=p_max {
                let scaled = bessel_i_scaled(p, k * k)?;
                let clamp = 0.01 * ((p + 1) as f64).cbrt();
                row.push(if scaled > 0.0 { (1.0 / scaled).min(clamp) } else { clamp });
            }
            ks.push(k);
            amplitudes.push(row);
        }
        Ok(Self { ks, amplitudes, alpha, p_max })
    }

    /// Bracketed perturbation sum at `(y, v)`; `v` is the physical velocity.
    pub fn perturbation(&self, y: f64, v: &[f64; 3]) -> Result<f64, BesselError> {
        let v_perp = v[0].hypot(v[1]);
        // angle between v_⊥ and ŷ
        let gamma = v[0].atan2(v[1]);
        let mut sum = 0.0;
        for (k, row) in self.ks.iter().zip(&self.amplitudes) {
            for (p, amp) in row.iter().enumerate() {
                let j = bessel_j(p as u32, k * v_perp)?;
                if j == 0.0 {
                    continue;
                }
                let phase = v_perp * k * gamma.sin() - p as f64 * gamma + k * y;
                sum += j * amp * phase.cos();
            }
        }
        Ok(self.alpha * sum)
    }
}

/// Stable Bernstein initial state `f_M(v) [1 + α Σ_m Σ_p ...]`.
pub fn nibw_ic(x: &[f64; 3], v: &[f64; 3], modes: &NibwModes, velocity_dims: usize) -> Result<f64, BesselError> {
    Ok(unit_maxwellian(v, velocity_dims) * (1.0 + modes.perturbation(x[1], v)?))
}
