//! Density moment and the quasi-neutral field closure `φ = n`, `E = -∇φ`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::grid::{DistributionFunction, PhaseSpaceGrid};

/// Fields on the spatial grid, stored row-major over `(x, y, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub n: Vec<f64>,
    pub phi: Vec<f64>,
    pub e: [Vec<f64>; 3],
}

impl FieldState {
    pub fn zeros(spatial_len: usize) -> Self {
        Self {
            n: vec![0.0; spatial_len],
            phi: vec![0.0; spatial_len],
            e: [
                vec![0.0; spatial_len],
                vec![0.0; spatial_len],
                vec![0.0; spatial_len],
            ],
        }
    }

    pub fn e_at(&self, s: usize) -> [f64; 3] {
        [self.e[0][s], self.e[1][s], self.e[2][s]]
    }

    /// `Σ |E|² ΔV` over the spatial grid.
    pub fn energy(&self, spatial_weight: f64) -> f64 {
        (0..self.n.len())
            .map(|s| self.e[0][s].powi(2) + self.e[1][s].powi(2) + self.e[2][s].powi(2))
            .sum::<f64>()
            * spatial_weight
    }
}

/// Builds a uniform field `E ≡ E0`. Density and potential stay zero; the
/// mean-zero property of gradient fields does not apply here.
pub fn const_field(spatial_len: usize, e0: [f64; 3]) -> FieldState {
    let mut state = FieldState::zeros(spatial_len);
    for (component, value) in state.e.iter_mut().zip(e0) {
        component.fill(value);
    }
    state
}

/// `n(x) = Σ_v f · Πspacing_v`; degenerate velocity axes weigh 1.
pub fn density(f: &DistributionFunction) -> Vec<f64> {
    let grid = f.grid();
    let nv = grid.velocity_len();
    let weight = grid.velocity_weight();
    f.values()
        .par_chunks(nv)
        .map(|cell| cell.iter().sum::<f64>() * weight)
        .collect()
}

/// Quasi-neutrality with adiabatic electrons in normalized units: `φ = n`.
pub fn solve_quasineutral(n: &[f64]) -> Vec<f64> {
    n.to_vec()
}

/// Spectral gradient operator on the periodic spatial grid.
pub struct SpectralGradient {
    shape: [usize; 3],
    lengths: [f64; 3],
    plans: [Option<(Arc<dyn RealToComplex<f64>>, Arc<dyn ComplexToReal<f64>>)>; 3],
}

impl SpectralGradient {
    pub fn new(grid: &PhaseSpaceGrid) -> Self {
        let shape = grid.spatial_shape();
        let lengths = grid.spatial_lengths();
        let mut planner = RealFftPlanner::<f64>::new();
        let plans = shape.map(|n| {
            (n > 1).then(|| (planner.plan_fft_forward(n), planner.plan_fft_inverse(n)))
        });
        Self {
            shape,
            lengths,
            plans,
        }
    }

    /// `∂φ/∂x_axis`; zero along degenerate axes. The even-length Nyquist
    /// coefficient is dropped.
    pub fn derivative(&self, phi: &[f64], axis: usize) -> Vec<f64> {
        let mut out = vec![0.0; phi.len()];
        let Some((forward, inverse)) = &self.plans[axis] else {
            return out;
        };
        let n = self.shape[axis];
        let [_, ny, nz] = self.shape;
        let stride = match axis {
            0 => ny * nz,
            1 => nz,
            _ => 1,
        };
        let outer = phi.len() / (n * stride);
        let mut line = vec![0.0; n];
        let mut spec = forward.make_output_vec();
        let mut dline = vec![0.0; n];
        let dk = 2.0 * PI / self.lengths[axis];
        for o in 0..outer {
            for i in 0..stride {
                let base = o * n * stride + i;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = phi[base + j * stride];
                }
                forward
                    .process(&mut line, &mut spec)
                    .expect("forward FFT with matching buffers");
                let last = spec.len() - 1;
                for (k, c) in spec.iter_mut().enumerate() {
                    if k == 0 || (n % 2 == 0 && k == last) {
                        *c = Complex64::new(0.0, 0.0);
                    } else {
                        *c *= Complex64::new(0.0, k as f64 * dk / n as f64);
                    }
                }
                inverse
                    .process(&mut spec, &mut dline)
                    .expect("inverse FFT with matching buffers");
                for (j, d) in dline.iter().enumerate() {
                    out[base + j * stride] = *d;
                }
            }
        }
        out
    }

    /// `E = -∇φ`.
    pub fn efield(&self, phi: &[f64]) -> [Vec<f64>; 3] {
        [0, 1, 2].map(|axis| {
            let mut d = self.derivative(phi, axis);
            d.iter_mut().for_each(|v| *v = -*v);
            d
        })
    }
}

pub fn efield(grid: &PhaseSpaceGrid, phi: &[f64]) -> [Vec<f64>; 3] {
    SpectralGradient::new(grid).efield(phi)
}

/// How the electric field is obtained at each field-solve stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldModel {
    Constant([f64; 3]),
    QuasiNeutral,
}

/// Field solver bound to one grid; caches the gradient plans.
pub struct FieldSolver {
    model: FieldModel,
    gradient: SpectralGradient,
    spatial_len: usize,
}

impl FieldSolver {
    pub fn new(grid: &PhaseSpaceGrid, model: FieldModel) -> Self {
        Self {
            model,
            gradient: SpectralGradient::new(grid),
            spatial_len: grid.spatial_len(),
        }
    }

    pub fn model(&self) -> FieldModel {
        self.model
    }

    pub fn gradient(&self) -> &SpectralGradient {
        &self.gradient
    }

    pub fn solve(&self, f: &DistributionFunction) -> FieldState {
        match self.model {
            FieldModel::Constant(e0) => {
                let mut state = const_field(self.spatial_len, e0);
                state.n = density(f);
                state
            }
            FieldModel::QuasiNeutral => {
                let n = density(f);
                let phi = solve_quasineutral(&n);
                let e = self.gradient.efield(&phi);
                FieldState { n, phi, e }
            }
        }
    }
}
