//! Rotating-frame algebra for a constant background field along `z`.
//!
//! The rotating velocity coordinate is `ṽ = D(t) v` with
//! `D(t) = [[cos ωt, -sin ωt, 0], [sin ωt, cos ωt, 0], [0, 0, 1]]`.

use std::ops::{Add, Mul, Sub};

/// Below this `|ω Δt|` the integrated entries switch to their Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclotronParams {
    /// Cyclotron frequency `q B0 / m`; the field points along `+z`.
    pub omega_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(pub [[f64; 3]; 3]);

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix =
        RotationMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn zero() -> Self {
        RotationMatrix([[0.0; 3]; 3])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        RotationMatrix([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn apply(&self, v: &[f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn scale(&self, s: f64) -> Self {
        RotationMatrix(self.0.map(|row| row.map(|e| e * s)))
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        d
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        RotationMatrix(out)
    }
}

impl Add for RotationMatrix {
    type Output = RotationMatrix;

    fn add(self, rhs: RotationMatrix) -> RotationMatrix {
        let mut out = self.0;
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] += rhs.0[i][j];
            }
        }
        RotationMatrix(out)
    }
}

impl Sub for RotationMatrix {
    type Output = RotationMatrix;

    fn sub(self, rhs: RotationMatrix) -> RotationMatrix {
        self + rhs.scale(-1.0)
    }
}

/// `D(t)` for cyclotron frequency `omega_c`.
pub fn rotation_matrix(omega_c: f64, t: f64) -> RotationMatrix {
    let (s, c) = (omega_c * t).sin_cos();
    RotationMatrix([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
}

/// `∫_{t0}^{t1} D(t) dt`, or `∫ D⁻¹(t) dt` when `inverse` is set.
pub fn integrated_rotation(omega_c: f64, t0: f64, t1: f64, inverse: bool) -> RotationMatrix {
    let dt = t1 - t0;
    // ∫cos and ∫sin over [t0, t1]
    let (int_cos, int_sin) = if (omega_c * dt).abs() < SERIES_THRESHOLD {
        // expand about the midpoint: ∫cos = dt cos(ωm) (1 - (ωdt)²/24), same for sin
        let mid = 0.5 * (t0 + t1);
        let (s, c) = (omega_c * mid).sin_cos();
        let corr = 1.0 - (omega_c * dt).powi(2) / 24.0;
        (dt * c * corr, dt * s * corr)
    } else {
        let (s0, c0) = (omega_c * t0).sin_cos();
        let (s1, c1) = (omega_c * t1).sin_cos();
        // differences computed as products to avoid cancellation
        let half = 0.5 * omega_c * dt;
        let mid = 0.5 * omega_c * (t0 + t1);
        let sin_diff = 2.0 * mid.cos() * half.sin();
        let cos_diff = -2.0 * mid.sin() * half.sin();
        debug_assert!((sin_diff - (s1 - s0)).abs() < 1e-9 + 1e-9 * sin_diff.abs());
        debug_assert!((cos_diff - (c1 - c0)).abs() < 1e-9 + 1e-9 * cos_diff.abs());
        (sin_diff / omega_c, -cos_diff / omega_c)
    };
    let sign = if inverse { -1.0 } else { 1.0 };
    RotationMatrix([
        [int_cos, -sign * int_sin, 0.0],
        [sign * int_sin, int_cos, 0.0],
        [0.0, 0.0, dt],
    ])
}

pub fn to_rotating(v: &[f64; 3], omega_c: f64, t: f64) -> [f64; 3] {
    rotation_matrix(omega_c, t).apply(v)
}

pub fn to_physical(v_rot: &[f64; 3], omega_c: f64, t: f64) -> [f64; 3] {
    rotation_matrix(omega_c, t).transpose().apply(v_rot)
}
