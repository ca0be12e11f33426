//! Periodic 1-D interpolation kernels used by the advection stages.
//!
//! Every kernel evaluates the backtraced value `out[j] = I(x_j - shift)` of
//! a periodic line sampled at `x_j = j * spacing`.

use std::f64::consts::PI;
use std::sync::Arc;

use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpError {
    #[error("Lagrange CFL violation: |shift| = {shift} must be below the spacing {spacing}")]
    Cfl { shift: f64, spacing: f64 },
    #[error("Lagrange stencil of {q} points does not fit on a line of {n} points")]
    Stencil { q: usize, n: usize },
    #[error("Lagrange stencil needs at least 2 points, got {0}")]
    StencilSize(usize),
    #[error("non-finite shift {0}")]
    NonFiniteShift(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpMethod {
    /// Centered local Lagrange interpolation on `q` nodes.
    Lagrange { q: usize },
    /// Global trigonometric interpolation.
    Trig,
}

impl InterpMethod {
    pub fn name(&self) -> &'static str {
        match self {
            InterpMethod::Lagrange { .. } => "lagrange",
            InterpMethod::Trig => "trig",
        }
    }
}

/// Lagrange weights on the node offsets `start .. start + q` relative to the
/// target node.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeStencil {
    pub start: isize,
    pub weights: Vec<f64>,
}

/// First node offset of the centered stencil for the normalized offset
/// `theta`. Even stencils bracket the target in their central interval and
/// fall back to the left-biased option when `theta == 0`.
pub fn stencil_start(q: usize, theta: f64) -> isize {
    let half = (q / 2) as isize;
    if q % 2 == 1 {
        -half
    } else if theta > 0.0 {
        -half + 1
    } else {
        -half
    }
}

/// Weights of the `q`-point Lagrange interpolant evaluated at
/// `x_j + theta * spacing`.
pub fn lagrange_weights(q: usize, theta: f64) -> Result<LagrangeStencil, InterpError> {
    if q < 2 {
        return Err(InterpError::StencilSize(q));
    }
    if !theta.is_finite() {
        return Err(InterpError::NonFiniteShift(theta));
    }
    if theta.abs() >= 1.0 {
        return Err(InterpError::Cfl {
            shift: theta.abs(),
            spacing: 1.0,
        });
    }
    let start = stencil_start(q, theta);
    let mut weights = vec![0.0; q];
    fill_lagrange_weights(start, theta, &mut weights);
    Ok(LagrangeStencil { start, weights })
}

fn fill_lagrange_weights(start: isize, theta: f64, weights: &mut [f64]) {
    let q = weights.len();
    for (i, w) in weights.iter_mut().enumerate() {
        let oi = (start + i as isize) as f64;
        let mut num = 1.0;
        let mut den = 1.0;
        for m in 0..q {
            if m == i {
                continue;
            }
            let om = (start + m as isize) as f64;
            num *= theta - om;
            den *= oi - om;
        }
        *w = num / den;
    }
}

pub fn shift_line_lagrange(
    line: &[f64],
    shift: f64,
    q: usize,
    spacing: f64,
) -> Result<Vec<f64>, InterpError> {
    let mut out = vec![0.0; line.len()];
    let mut weights = vec![0.0; q.max(2)];
    shift_line_lagrange_into(line, &mut out, shift, q, spacing, &mut weights)?;
    Ok(out)
}

fn shift_line_lagrange_into(
    line: &[f64],
    out: &mut [f64],
    shift: f64,
    q: usize,
    spacing: f64,
    weights: &mut Vec<f64>,
) -> Result<(), InterpError> {
    let n = line.len();
    if q < 2 {
        return Err(InterpError::StencilSize(q));
    }
    if !shift.is_finite() {
        return Err(InterpError::NonFiniteShift(shift));
    }
    if shift.abs() >= spacing {
        return Err(InterpError::Cfl {
            shift: shift.abs(),
            spacing,
        });
    }
    if n < q {
        return Err(InterpError::Stencil { q, n });
    }
    if shift == 0.0 {
        out.copy_from_slice(line);
        return Ok(());
    }
    let theta = -shift / spacing;
    let start = stencil_start(q, theta);
    weights.resize(q, 0.0);
    fill_lagrange_weights(start, theta, weights);
    let offset = start.rem_euclid(n as isize) as usize;
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        let mut idx = (j + offset) % n;
        for &w in weights.iter() {
            acc += w * line[idx];
            idx += 1;
            if idx == n {
                idx = 0;
            }
        }
        *o = acc;
    }
    Ok(())
}

/// Direct evaluation of the periodic trigonometric interpolant at `x`
/// (nodes at `j * spacing`).
pub fn trig_interp_point(line: &[f64], x: f64, spacing: f64) -> f64 {
    let n = line.len();
    let period = n as f64 * spacing;
    let even = n % 2 == 0;
    let mut acc = 0.0;
    for (j, &fj) in line.iter().enumerate() {
        let mut theta = 2.0 * PI * (x - j as f64 * spacing) / period;
        theta -= 2.0 * PI * (theta / (2.0 * PI)).round();
        let kernel = if theta.abs() < 1e-300 {
            1.0
        } else {
            let half = 0.5 * theta;
            let ratio = (n as f64 * half).sin() / (n as f64 * half.sin());
            if even {
                ratio * half.cos()
            } else {
                ratio
            }
        };
        acc += kernel * fj;
    }
    acc
}

pub fn shift_line_trig(line: &[f64], shift: f64, spacing: f64) -> Vec<f64> {
    let mut shifter = TrigShifter::new(line.len());
    let mut out = vec![0.0; line.len()];
    shifter.shift(line, &mut out, shift, spacing);
    out
}

/// Spectral shifter for lines of a fixed length; holds FFT plans and scratch
/// space so it can be reused across many pencils.
pub struct TrigShifter {
    n: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
    input: Vec<f64>,
    spectrum: Vec<Complex64>,
    scratch_fwd: Vec<Complex64>,
    scratch_inv: Vec<Complex64>,
    pair_fwd: Arc<dyn Fft<f64>>,
    pair_inv: Arc<dyn Fft<f64>>,
    packed: Vec<Complex64>,
    scratch_pair: Vec<Complex64>,
}

/// `exp(-i k dphi)` for successive k by recurrence, re-anchored now and then.
struct Phase {
    dphi: f64,
    step: Complex64,
    value: Complex64,
    k: usize,
}

impl Phase {
    fn new(dphi: f64) -> Self {
        let (s, c) = dphi.sin_cos();
        Self { dphi, step: Complex64::new(c, -s), value: Complex64::new(1.0, 0.0), k: 0 }
    }

    fn next(&mut self) -> Complex64 {
        self.k += 1;
        if self.k % 64 == 0 {
            let (s, c) = (self.k as f64 * self.dphi).sin_cos();
            self.value = Complex64::new(c, -s);
        } else {
            self.value *= self.step;
        }
        self.value
    }
}

impl TrigShifter {
    pub fn new(n: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        Self::with_planner(n, &mut planner)
    }

    pub fn with_planner(n: usize, planner: &mut RealFftPlanner<f64>) -> Self {
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let spectrum = forward.make_output_vec();
        let scratch_fwd = forward.make_scratch_vec();
        let scratch_inv = inverse.make_scratch_vec();
        let mut complex = FftPlanner::<f64>::new();
        let pair_fwd = complex.plan_fft_forward(n);
        let pair_inv = complex.plan_fft_inverse(n);
        let scratch_len = pair_fwd.get_inplace_scratch_len().max(pair_inv.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            input: vec![0.0; n],
            spectrum,
            scratch_fwd,
            scratch_inv,
            pair_fwd,
            pair_inv,
            packed: vec![Complex64::new(0.0, 0.0); n],
            scratch_pair: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `out[j] = T(x_j - shift)`. The even-length Nyquist mode is carried as
    /// a cosine, which keeps the result identical to the direct formula.
    pub fn shift(&mut self, line: &[f64], out: &mut [f64], shift: f64, spacing: f64) {
        let n = self.n;
        debug_assert_eq!(line.len(), n);
        debug_assert_eq!(out.len(), n);
        if shift == 0.0 || n == 1 {
            out.copy_from_slice(line);
            return;
        }
        self.input.copy_from_slice(line);
        self.forward
            .process_with_scratch(&mut self.input, &mut self.spectrum, &mut self.scratch_fwd)
            .expect("forward real FFT with matching buffers");

        let dphi = 2.0 * PI * shift / (n as f64 * spacing);
        let mut phase = Phase::new(dphi);
        let scale = 1.0 / n as f64;
        let last = self.spectrum.len() - 1;
        self.spectrum[0] = Complex64::new(self.spectrum[0].re * scale, 0.0);
        for k in 1..self.spectrum.len() {
            let p = phase.next();
            if n % 2 == 0 && k == last {
                self.spectrum[k] = Complex64::new(self.spectrum[k].re * p.re * scale, 0.0);
            } else {
                self.spectrum[k] *= p * scale;
            }
        }
        self.inverse
            .process_with_scratch(&mut self.spectrum, out, &mut self.scratch_inv)
            .expect("inverse real FFT with matching buffers");
    }

    /// Two independent shifts through one complex transform: `a + ib` is
    /// transformed, split into the two Hermitian spectra, phased and
    /// recombined. Same result as two calls to [`shift`](Self::shift).
    pub fn shift_pair(&mut self, lines: [&[f64]; 2], outs: [&mut [f64]; 2], shifts: [f64; 2], spacing: f64) {
        let n = self.n;
        let [a, b] = lines;
        let [out_a, out_b] = outs;
        for (z, (&x, &y)) in self.packed.iter_mut().zip(a.iter().zip(b)) {
            *z = Complex64::new(x, y);
        }
        self.pair_fwd.process_with_scratch(&mut self.packed, &mut self.scratch_pair);
        let per_mode = 2.0 * PI / (n as f64 * spacing);
        let mut pa = Phase::new(shifts[0] * per_mode);
        let mut pb = Phase::new(shifts[1] * per_mode);
        let z = &mut self.packed;
        for k in 1..n.div_ceil(2) {
            let (u, v) = (z[k], z[n - k].conj());
            let sa = (u + v) * 0.5 * pa.next();
            // B = (u - v) / 2i
            let diff = (u - v) * 0.5;
            let sb = Complex64::new(diff.im, -diff.re) * pb.next();
            let ib = Complex64::new(-sb.im, sb.re);
            let ib_conj = Complex64::new(sb.im, sb.re);
            z[k] = sa + ib;
            z[n - k] = sa.conj() + ib_conj;
        }
        if n % 2 == 0 {
            let k = n / 2;
            let (ca, cb) = (pa.next().re, pb.next().re);
            z[k] = Complex64::new(z[k].re * ca, z[k].im * cb);
        }
        self.pair_inv.process_with_scratch(&mut self.packed, &mut self.scratch_pair);
        let scale = 1.0 / n as f64;
        for ((z, x), y) in self.packed.iter().zip(out_a.iter_mut()).zip(out_b.iter_mut()) {
            *x = z.re * scale;
            *y = z.im * scale;
        }
    }
}

/// Per-thread line shifter for either interpolation kernel.
pub struct LineShifter {
    method: InterpMethod,
    spacing: f64,
    trig: Option<TrigShifter>,
    weights: Vec<f64>,
}

impl LineShifter {
    pub fn new(method: InterpMethod, n: usize, spacing: f64) -> Self {
        let trig = match method {
            InterpMethod::Trig if n > 0 => Some(TrigShifter::new(n)),
            _ => None,
        };
        Self {
            method,
            spacing,
            trig,
            weights: Vec::new(),
        }
    }

    pub fn method(&self) -> InterpMethod {
        self.method
    }

    pub fn shift(&mut self, line: &[f64], out: &mut [f64], shift: f64) -> Result<(), InterpError> {
        if !shift.is_finite() {
            return Err(InterpError::NonFiniteShift(shift));
        }
        match self.method {
            InterpMethod::Lagrange { q } => {
                shift_line_lagrange_into(line, out, shift, q, self.spacing, &mut self.weights)
            }
            InterpMethod::Trig => {
                let spacing = self.spacing;
                self.trig
                    .as_mut()
                    .expect("trig shifter allocated for trig method")
                    .shift(line, out, shift, spacing);
                Ok(())
            }
        }
    }

    /// Shifts two lines at once; trig lines share one complex transform.
    pub fn shift_pair(&mut self, lines: [&[f64]; 2], outs: [&mut [f64]; 2], shifts: [f64; 2]) -> Result<(), InterpError> {
        if let Some(&bad) = shifts.iter().find(|s| !s.is_finite()) {
            return Err(InterpError::NonFiniteShift(bad));
        }
        match (&mut self.trig, self.method) {
            (Some(trig), InterpMethod::Trig) if trig.n > 1 => {
                trig.shift_pair(lines, outs, shifts, self.spacing);
                Ok(())
            }
            _ => {
                let [a, b] = lines;
                let [out_a, out_b] = outs;
                self.shift(a, out_a, shifts[0])?;
                self.shift(b, out_b, shifts[1])
            }
        }
    }
}
