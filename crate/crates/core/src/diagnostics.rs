//! Error norms, convergence orders, space-time spectra and growth rates.

use std::f64::consts::PI;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::grid::{DistributionFunction, PhaseSpaceGrid};

#[derive(Debug, Error)]
pub enum DiagError {
    #[error("reference perturbation has zero norm")]
    ZeroDenominator,
    #[error("convergence order needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("error sample {index} is not positive: {value}")]
    NonPositiveError { index: usize, value: f64 },
    #[error("step sizes must be positive and distinct")]
    BadStepSizes,
    #[error("times are not strictly increasing at sample {0}")]
    NotIncreasing(usize),
    #[error("times are not uniformly spaced at sample {0}")]
    NonUniform(usize),
    #[error("sample {index} has {got} values, expected {expected}")]
    ShapeMismatch { index: usize, got: usize, expected: usize },
    #[error("mode {0} is out of range")]
    ModeOutOfRange(usize),
    #[error("fit window [{0}, {1}] holds fewer than two samples")]
    EmptyWindow(f64, f64),
    #[error("mode amplitude underflows at t = {0}")]
    Underflow(f64),
    #[error("spatial axis index {0} is not 0, 1 or 2")]
    BadAxis(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// `‖f - ref‖ / ‖ref - background‖` in the discrete `L2` norm.
///
/// Both closures receive the grid coordinates `(x, v)` of each node.
pub fn l2_relative_error<R, B>(f: &DistributionFunction, reference: R, background: B) -> Result<f64, DiagError>
where
    R: Fn(&[f64; 3], &[f64; 3]) -> f64 + Sync,
    B: Fn(&[f64; 3], &[f64; 3]) -> f64 + Sync,
{
    let grid = f.grid();
    let nv = grid.velocity_len();
    let velocity: Vec<[f64; 3]> = (0..nv).map(|w| grid.velocity_node(w)).collect();
    let (num, den) = f
        .values()
        .par_chunks(nv)
        .enumerate()
        .map(|(s, block)| {
            let x = grid.spatial_node(s);
            let mut acc = (0.0, 0.0);
            for (value, v) in block.iter().zip(&velocity) {
                let r = reference(&x, v);
                acc.0 += (value - r).powi(2);
                acc.1 += (r - background(&x, v)).powi(2);
            }
            acc
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    if den == 0.0 {
        return Err(DiagError::ZeroDenominator);
    }
    Ok((num / den).sqrt())
}

/// Same norm ratio on precomputed arrays.
pub fn l2_relative_error_values(values: &[f64], reference: &[f64], background: &[f64]) -> Result<f64, DiagError> {
    let num: f64 = values.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = reference.iter().zip(background).map(|(a, b)| (a - b).powi(2)).sum();
    if den == 0.0 {
        return Err(DiagError::ZeroDenominator);
    }
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Samples sorted by decreasing `h`.
    pub samples: Vec<(f64, f64)>,
    /// Slope between the largest and smallest step.
    pub two_point: f64,
    pub least_squares: f64,
    /// Slope between each neighbouring pair, aligned with `samples[1..]`.
    pub pairwise: Vec<f64>,
}

fn slope(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1.ln() - b.1.ln()) / (a.0.ln() - b.0.ln())
}

pub fn convergence_order(errors: &[(f64, f64)]) -> Result<ConvergenceReport, DiagError> {
    if errors.len() < 2 {
        return Err(DiagError::TooFewSamples(errors.len()));
    }
    for (index, &(h, e)) in errors.iter().enumerate() {
        if !(e > 0.0) {
            return Err(DiagError::NonPositiveError { index, value: e });
        }
        if !(h > 0.0) {
            return Err(DiagError::BadStepSizes);
        }
    }
    let mut samples = errors.to_vec();
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));
    if samples.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(DiagError::BadStepSizes);
    }
    let two_point = slope(samples[0], *samples.last().unwrap());
    let pairwise = samples.windows(2).map(|w| slope(w[0], w[1])).collect();

    let n = samples.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(h, e) in &samples {
        let (x, y) = (h.ln(), e.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let least_squares = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(ConvergenceReport { samples, two_point, least_squares, pairwise })
}

/// Samples of a spatial field at strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self, DiagError> {
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(DiagError::NotIncreasing(i + 1));
        }
        if let Some(first) = values.first() {
            let expected = first.len();
            if let Some((index, v)) = values.iter().enumerate().find(|(_, v)| v.len() != expected) {
                return Err(DiagError::ShapeMismatch { index, got: v.len(), expected });
            }
        }
        if times.len() != values.len() {
            return Err(DiagError::ShapeMismatch { index: 0, got: values.len(), expected: times.len() });
        }
        Ok(Self { times, values })
    }

    /// Uniform step, or the first sample that breaks uniformity.
    pub fn uniform_step(&self) -> Result<f64, DiagError> {
        if self.times.len() < 2 {
            return Err(DiagError::TooFewSamples(self.times.len()));
        }
        let dt = (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64;
        for (i, w) in self.times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
                return Err(DiagError::NonUniform(i + 1));
            }
        }
        Ok(dt)
    }
}

/// Shape of the spatial arrays in a [`TimeSeries`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialLayout {
    pub shape: [usize; 3],
    pub lengths: [f64; 3],
}

impl SpatialLayout {
    pub fn of(grid: &PhaseSpaceGrid) -> Self {
        Self { shape: grid.spatial_shape(), lengths: grid.spatial_lengths() }
    }

    fn len(&self) -> usize {
        self.shape.iter().product()
    }

    /// Averages a row-major spatial array over all axes except `axis`.
    fn line(&self, values: &[f64], axis: usize) -> Vec<f64> {
        let n = self.shape[axis];
        let mut out = vec![0.0; n];
        let [_, ny, nz] = self.shape;
        for (s, v) in values.iter().enumerate() {
            let idx = [s / (ny * nz), (s / nz) % ny, s % nz];
            out[idx[axis]] += v;
        }
        let others = (self.len() / n) as f64;
        out.iter_mut().for_each(|v| *v /= others);
        out
    }
}

/// Signed FFT bin index for position `i` of an `n`-point transform.
pub fn signed_bin(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumGrid {
    /// Physical wavenumbers `2πm/L`, ascending in signed `m`.
    pub ks: Vec<f64>,
    /// Physical frequencies `2πq/T`, ascending in signed `q`.
    pub omegas: Vec<f64>,
    /// `magnitude[i * omegas.len() + j]` belongs to `(ks[i], omegas[j])`.
    pub magnitude: Vec<f64>,
}

impl SpectrumGrid {
    pub fn at(&self, ik: usize, iw: usize) -> f64 {
        self.magnitude[ik * self.omegas.len() + iw]
    }

    pub fn k_index(&self, k: f64) -> Option<usize> {
        let dk = if self.ks.len() > 1 { self.ks[1] - self.ks[0] } else { 1.0 };
        self.ks.iter().position(|&q| (q - k).abs() < 0.25 * dk.abs())
    }

    pub fn total_power(&self) -> f64 {
        self.magnitude.iter().map(|m| m * m).sum()
    }
}

/// Reorders FFT output so signed bins ascend.
fn sorted_bins(n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by_key(|&i| signed_bin(i, n));
    idx
}

/// Space-time spectrum `|n̂(k, ω)|` along spatial `axis` (0, 1, 2).
///
/// Uses `e^{-ikx}` in space and `e^{+iωt}` in time, so `cos(k₁x - ω₁t)`
/// peaks at `(k₁, ω₁)`. The temporal mean is removed per point and the
/// result is scaled by `1/(N_x N_t)`; without the window the total power
/// equals the mean square of the input.
pub fn dispersion_spectrum(
    series: &TimeSeries,
    layout: SpatialLayout,
    axis: usize,
    hann: bool,
) -> Result<SpectrumGrid, DiagError> {
    if axis > 2 {
        return Err(DiagError::BadAxis(axis));
    }
    let dt = series.uniform_step()?;
    for (index, v) in series.values.iter().enumerate() {
        if v.len() != layout.len() {
            return Err(DiagError::ShapeMismatch { index, got: v.len(), expected: layout.len() });
        }
    }
    let nx = layout.shape[axis];
    let nt = series.times.len();
    let mut data: Vec<Vec<Complex64>> = series
        .values
        .iter()
        .map(|v| layout.line(v, axis).into_iter().map(|r| Complex64::new(r, 0.0)).collect())
        .collect();
    for i in 0..nx {
        let mean = data.iter().map(|row| row[i].re).sum::<f64>() / nt as f64;
        for row in data.iter_mut() {
            row[i].re -= mean;
        }
    }
    if hann {
        for (j, row) in data.iter_mut().enumerate() {
            let w = 0.5 * (1.0 - (2.0 * PI * j as f64 / nt as f64).cos());
            row.iter_mut().for_each(|c| *c *= w);
        }
    }
    let mut planner = FftPlanner::new();
    let fx = planner.plan_fft_forward(nx);
    for row in data.iter_mut() {
        fx.process(row);
    }
    let ft = planner.plan_fft_inverse(nt);
    let mut column = vec![Complex64::new(0.0, 0.0); nt];
    let mut spectrum = vec![vec![0.0; nt]; nx];
    let scale = 1.0 / (nx * nt) as f64;
    for (i, out) in spectrum.iter_mut().enumerate() {
        for (j, c) in column.iter_mut().enumerate() {
            *c = data[j][i];
        }
        ft.process(&mut column);
        for (o, c) in out.iter_mut().zip(&column) {
            *o = c.norm() * scale;
        }
    }
    let kx = sorted_bins(nx);
    let kt = sorted_bins(nt);
    let length = layout.lengths[axis];
    let period = dt * nt as f64;
    let ks = kx.iter().map(|&i| 2.0 * PI * signed_bin(i, nx) as f64 / length).collect();
    let omegas = kt.iter().map(|&j| 2.0 * PI * signed_bin(j, nt) as f64 / period).collect();
    let mut magnitude = Vec::with_capacity(nx * nt);
    for &i in &kx {
        for &j in &kt {
            magnitude.push(spectrum[i][j]);
        }
    }
    Ok(SpectrumGrid { ks, omegas, magnitude })
}

/// `|n̂_m(t)|` of spatial mode `m` along `axis` at every sample.
pub fn mode_amplitudes(series: &TimeSeries, layout: SpatialLayout, axis: usize, m: usize) -> Result<Vec<f64>, DiagError> {
    if axis > 2 {
        return Err(DiagError::BadAxis(axis));
    }
    let nx = layout.shape[axis];
    if m >= nx {
        return Err(DiagError::ModeOutOfRange(m));
    }
    Ok(series
        .values
        .iter()
        .map(|v| {
            let line = layout.line(v, axis);
            let c: Complex64 = line
                .iter()
                .enumerate()
                .map(|(j, &r)| Complex64::from_polar(r, -2.0 * PI * (m * j) as f64 / nx as f64))
                .sum();
            c.norm() / nx as f64
        })
        .collect())
}

/// Least-squares slope of `log a(t)` over samples with `t` in `window`.
pub fn growth_rate(times: &[f64], amplitudes: &[f64], window: (f64, f64)) -> Result<f64, DiagError> {
    let mut pts = Vec::new();
    for (&t, &a) in times.iter().zip(amplitudes) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(a > f64::MIN_POSITIVE) || !a.is_finite() {
            return Err(DiagError::Underflow(t));
        }
        pts.push((t, a.ln()));
    }
    if pts.len() < 2 {
        return Err(DiagError::EmptyWindow(window.0, window.1));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Ok(sxy / sxx)
}

pub fn mode_growth_rate(
    series: &TimeSeries,
    layout: SpatialLayout,
    axis: usize,
    k_index: usize,
    window: (f64, f64),
) -> Result<f64, DiagError> {
    let amps = mode_amplitudes(series, layout, axis, k_index)?;
    growth_rate(&series.times, &amps, window)
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Writes `header` and `rows` to a sibling temporary file, then renames it
/// over `path` so readers never see a partial table.
pub fn write_csv_atomic<I, S>(path: &Path, header: &str, rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = io::BufWriter::new(fs::File::create(&tmp)?);
        writeln!(w, "{header}")?;
        for row in rows {
            writeln!(w, "{}", row.as_ref())?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, path)
}

pub fn write_spectrum_csv(path: &Path, spectrum: &SpectrumGrid) -> io::Result<()> {
    let rows = spectrum.ks.iter().enumerate().flat_map(|(i, k)| {
        spectrum
            .omegas
            .iter()
            .enumerate()
            .map(move |(j, w)| format!("{},{},{}", fmt_f64(*k), fmt_f64(*w), fmt_f64(spectrum.at(i, j))))
    });
    write_csv_atomic(path, "k,omega,magnitude", rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample, Axis, AxisSpec};
    use proptest::prelude::*;

    fn layout_1d(n: usize, length: f64) -> SpatialLayout {
        SpatialLayout { shape: [1, n, 1], lengths: [1.0, length, 1.0] }
    }

    #[test]
    fn l2_scaling() {
        let grid = make_grid([
            AxisSpec::new(Axis::X, 8, 0.0, 1.0),
            AxisSpec::degenerate(Axis::Y),
            AxisSpec::degenerate(Axis::Z),
            AxisSpec::new(Axis::Vx, 8, -2.0, 4.0),
            AxisSpec::degenerate(Axis::Vy),
            AxisSpec::degenerate(Axis::Vz),
        ])
        .unwrap();
        let r = |x: &[f64; 3], v: &[f64; 3]| 1.0 + 0.2 * (6.0 * x[0]).sin() * (-v[0] * v[0]).exp();
        let bg = |_: &[f64; 3], _: &[f64; 3]| 1.0;
        let f = sample(&grid, r).unwrap();
        assert_eq!(l2_relative_error(&f, r, bg).unwrap(), 0.0);
        for c in [0.5, -2.0, 1e-3] {
            let g = sample(&grid, |x, v| r(x, v) + c * (r(x, v) - bg(x, v))).unwrap();
            let e = l2_relative_error(&g, r, bg).unwrap();
            assert!((e - f64::abs(c)).abs() < 1e-12, "{e} vs {c}");
        }
        assert!(matches!(l2_relative_error(&f, r, r), Err(DiagError::ZeroDenominator)));
    }

    #[test]
    fn orders_of_power_laws() {
        let hs = [0.2, 0.1, 0.05, 0.025];
        for p in [2.0, 3.0, 4.0] {
            let errs: Vec<_> = hs.iter().map(|&h| (h, 0.7 * f64::powf(h, p))).collect();
            let r = convergence_order(&errs).unwrap();
            assert!((r.two_point - p).abs() < 1e-12);
            assert!((r.least_squares - p).abs() < 1e-12);
            assert!(r.pairwise.iter().all(|m| (m - p).abs() < 1e-12));
        }
        assert!(convergence_order(&[(0.1, 1.0)]).is_err());
        assert!(convergence_order(&[(0.1, 1.0), (0.05, 0.0)]).is_err());
    }

    #[test]
    fn spectrum_of_travelling_wave() {
        let (nx, nt) = (16, 64);
        let length = 4.0 * PI;
        let dt = 0.25;
        let k1 = 2.0 * 2.0 * PI / length;
        let w1 = 5.0 * 2.0 * PI / (nt as f64 * dt);
        let times: Vec<f64> = (0..nt).map(|j| j as f64 * dt).collect();
        let values = times
            .iter()
            .map(|&t| (0..nx).map(|i| (k1 * i as f64 * length / nx as f64 - w1 * t).cos()).collect())
            .collect();
        let series = TimeSeries::new(times, values).unwrap();
        let dw = 2.0 * PI / (nt as f64 * dt);
        for hann in [false, true] {
            let s = dispersion_spectrum(&series, layout_1d(nx, length), 1, hann).unwrap();
            // real input: |X(k, w)| = |X(-k, -w)|, so search k > 0 only
            let (mut peak, mut at) = (0.0, (0, 0));
            for i in (0..s.ks.len()).filter(|&i| s.ks[i] > 0.0) {
                for j in 0..s.omegas.len() {
                    if s.at(i, j) > peak {
                        peak = s.at(i, j);
                        at = (i, j);
                    }
                }
            }
            assert!((s.ks[at.0] - k1).abs() < 1e-12);
            assert!((s.omegas[at.1] - w1).abs() < 1e-12);
            for i in 0..s.ks.len() {
                for j in 0..s.omegas.len() {
                    let (k, w) = (s.ks[i].abs(), s.omegas[j] * s.ks[i].signum());
                    let on_peak = (k - k1).abs() < 1e-9 && (w - w1).abs() < 1e-9;
                    if on_peak {
                        continue;
                    }
                    let lobe = (k - k1).abs() < 1e-9 && ((w - w1).abs() - dw).abs() < 1e-9;
                    if hann && lobe {
                        // the Hann main lobe puts the neighbouring bins at -6 dB
                        assert!(s.at(i, j) <= 0.51 * peak);
                        continue;
                    }
                    assert!(s.at(i, j) <= 0.1 * peak, "({i},{j}) {}", s.at(i, j));
                }
            }
        }
    }

    #[test]
    fn constant_signal_has_empty_spectrum() {
        let times: Vec<f64> = (0..10).map(|j| j as f64 * 0.1).collect();
        let series = TimeSeries::new(times, vec![vec![3.0; 8]; 10]).unwrap();
        let s = dispersion_spectrum(&series, layout_1d(8, 1.0), 1, true).unwrap();
        assert!(s.magnitude.iter().all(|&m| m.abs() < 1e-15));
    }

    #[test]
    fn time_reversal_mirrors_frequency() {
        let (nx, nt) = (8, 32);
        let times: Vec<f64> = (0..nt).map(|j| j as f64 * 0.3).collect();
        let values: Vec<Vec<f64>> = (0..nt)
            .map(|j| (0..nx).map(|i| ((i * 7 + j * 3) % 11) as f64 * 0.1 + (i as f64 * j as f64).sin()).collect())
            .collect();
        let mut reversed = values.clone();
        // t -> -t on the periodic sample grid maps index j to (nt - j) mod nt
        for j in 0..nt {
            reversed[j] = values[(nt - j) % nt].clone();
        }
        let a = dispersion_spectrum(&TimeSeries::new(times.clone(), values).unwrap(), layout_1d(nx, 1.0), 1, false).unwrap();
        let b = dispersion_spectrum(&TimeSeries::new(times, reversed).unwrap(), layout_1d(nx, 1.0), 1, false).unwrap();
        for i in 0..nx {
            for j in 0..nt {
                let w = a.omegas[j];
                if let Some(jm) = b.omegas.iter().position(|&x| (x + w).abs() < 1e-9) {
                    assert!((a.at(i, j) - b.at(i, jm)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn non_uniform_times_rejected() {
        let series = TimeSeries::new(vec![0.0, 0.1, 0.3], vec![vec![1.0]; 3]).unwrap();
        assert!(matches!(
            dispersion_spectrum(&series, SpatialLayout { shape: [1, 1, 1], lengths: [1.0; 3] }, 0, false),
            Err(DiagError::NonUniform(1))
        ));
        assert!(TimeSeries::new(vec![0.0, 0.0], vec![vec![1.0]; 2]).is_err());
    }

    #[test]
    fn growth_rates() {
        let times: Vec<f64> = (0..200).map(|j| j as f64 * 0.5).collect();
        let amps: Vec<f64> = times.iter().map(|t| 1e-6 * (0.05 * t).exp()).collect();
        let g = growth_rate(&times, &amps, (0.0, 100.0)).unwrap();
        assert!((g - 0.05).abs() < 1e-6);
        let g1 = growth_rate(&times, &amps, (5.0, 40.0)).unwrap();
        let g2 = growth_rate(&times, &amps, (50.0, 90.0)).unwrap();
        assert!((g1 - g2).abs() <= 1e-8);
        let decay: Vec<f64> = times.iter().map(|t| (-0.02 * t).exp()).collect();
        assert!(growth_rate(&times, &decay, (0.0, 50.0)).unwrap() < 0.0);
        let zero = vec![0.0; times.len()];
        assert!(matches!(growth_rate(&times, &zero, (0.0, 50.0)), Err(DiagError::Underflow(_))));
    }

    #[test]
    fn mode_growth_from_field_series() {
        let n = 16;
        let length = 2.0 * PI;
        let times: Vec<f64> = (0..50).map(|j| j as f64 * 0.2).collect();
        let values = times
            .iter()
            .map(|&t| (0..n).map(|i| 1.0 + 1e-4 * (0.1 * t).exp() * (3.0 * i as f64 * length / n as f64 + t).cos()).collect())
            .collect();
        let series = TimeSeries::new(times, values).unwrap();
        let g = mode_growth_rate(&series, layout_1d(n, length), 1, 3, (0.0, 10.0)).unwrap();
        assert!((g - 0.1).abs() < 1e-9);
    }

    #[test]
    fn csv_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv_atomic(&path, "a,b", ["1.0,2.0", "3.0,4.0"]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a,b\n1.0,2.0\n3.0,4.0\n");
        assert!(!path.with_extension("csv.tmp").exists());
    }

    proptest! {
        #[test]
        fn parseval_without_window(seed in 0u64..1000) {
            let (nx, nt) = (8, 12);
            let times: Vec<f64> = (0..nt).map(|j| j as f64 * 0.5).collect();
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let values: Vec<Vec<f64>> = (0..nt).map(|_| (0..nx).map(|_| next()).collect()).collect();
            let mut centered = values.clone();
            for i in 0..nx {
                let mean = values.iter().map(|r| r[i]).sum::<f64>() / nt as f64;
                centered.iter_mut().for_each(|r| r[i] -= mean);
            }
            let power = centered.iter().flatten().map(|v| v * v).sum::<f64>() / (nx * nt) as f64;
            let s = dispersion_spectrum(&TimeSeries::new(times, values).unwrap(), layout_1d(nx, 1.0), 1, false).unwrap();
            prop_assert!((s.total_power() - power).abs() <= 1e-10 * power);
        }

        #[test]
        fn order_invariant_under_scaling(c in 1e-6f64..1e6, p in 0.5f64..5.0) {
            let errs: Vec<_> = [0.2, 0.1, 0.05].iter().map(|&h| (h, f64::powf(h, p) * (1.0 + h))).collect();
            let scaled: Vec<_> = errs.iter().map(|&(h, e)| (h, c * e)).collect();
            let a = convergence_order(&errs).unwrap();
            let b = convergence_order(&scaled).unwrap();
            prop_assert!((a.two_point - b.two_point).abs() < 1e-9);
            prop_assert!((a.least_squares - b.least_squares).abs() < 1e-9);
        }
    }
}
