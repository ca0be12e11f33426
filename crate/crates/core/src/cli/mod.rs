//! Command drivers: single runs, time-step convergence studies and
//! dispersion spectra from density series.

pub mod config;

pub use config::{parse_config, parse_config_str, steps_for, ConfigError, OutputConfig, RunConfig};

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::cases::{
    analytic_const_fields, analytic_rotation, fundamental_wavevector, maxwellian_ic, nibw_ic, plane_wave_ic,
    unit_maxwellian, CaseKind, NibwModes,
};
use crate::diagnostics::{
    convergence_order, dispersion_spectrum, fmt_f64, l2_relative_error_values, write_csv_atomic, write_spectrum_csv,
    ConvergenceReport, DiagError, SpatialLayout, SpectrumGrid, TimeSeries,
};
use crate::fields::{density, FieldModel, FieldSolver};
use crate::grid::{Axis, DistributionFunction, PhaseSpaceGrid};
use crate::propagator::{GradientSource, Propagator};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("input: {0}")]
    Input(String),
    #[error("numerical abort at step {step} (t = {t}): {reason}")]
    Numerical { step: usize, t: f64, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    /// 2 for bad input, 3 for a numerical abort, 1 for output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Sizes the global rayon pool from `VLR_THREADS` when it is set.
pub fn init_threads() -> Result<Option<usize>, CliError> {
    let Ok(text) = std::env::var("VLR_THREADS") else {
        return Ok(None);
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("VLR_THREADS must be a positive integer, got `{text}`")))?;
    // a pool that already exists (tests, repeated calls) keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

/// One row of `series.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    /// Relative `L2` error against the closed form, for analytic cases.
    pub l2_error: Option<f64>,
    pub field_energy: f64,
}

impl SeriesRow {
    fn csv(&self) -> String {
        let err = self.l2_error.map(fmt_f64).unwrap_or_default();
        format!("{},{},{},{}", fmt_f64(self.t), fmt_f64(self.mass), err, fmt_f64(self.field_energy))
    }
}

const SERIES_HEADER: &str = "t,mass,l2_error,field_energy";

/// A configured case advanced step by step.
pub struct Simulation {
    config: RunConfig,
    grid: PhaseSpaceGrid,
    f: DistributionFunction,
    propagator: Propagator,
    observer: FieldSolver,
    k0: [f64; 3],
    step: usize,
    n_steps: usize,
}

fn field_model(config: &RunConfig) -> FieldModel {
    match config.case.kind {
        CaseKind::RotationOnly => FieldModel::Constant([0.0; 3]),
        CaseKind::ConstFields => FieldModel::Constant(config.case.e0),
        CaseKind::NibwStable | CaseKind::NibwUnstable => FieldModel::QuasiNeutral,
    }
}

/// Samples `value(x, v)` in parallel over spatial blocks.
fn sample_par<F>(grid: &PhaseSpaceGrid, value: F) -> Result<Vec<f64>, String>
where
    F: Fn(&[f64; 3], &[f64; 3]) -> Result<f64, String> + Sync,
{
    let nv = grid.velocity_len();
    let velocity: Vec<[f64; 3]> = (0..nv).map(|w| grid.velocity_node(w)).collect();
    let mut out = vec![0.0; grid.total()];
    out.par_chunks_mut(nv).enumerate().try_for_each(|(s, block)| {
        let x = grid.spatial_node(s);
        for (o, v) in block.iter_mut().zip(&velocity) {
            let y = value(&x, v)?;
            if !y.is_finite() {
                return Err(format!("non-finite initial value at x = {x:?}, v = {v:?}"));
            }
            *o = y;
        }
        Ok(())
    })?;
    Ok(out)
}

fn nibw_modes(config: &RunConfig, grid: &PhaseSpaceGrid) -> Result<NibwModes, CliError> {
    let c = &config.case;
    NibwModes::new(c.alpha, c.m_max, c.p_max, grid.axis(Axis::Y).length)
        .map_err(|e| CliError::Input(format!("nIBW modes: {e}")))
}

/// Initial distribution for the configured case.
pub fn initial_condition(config: &RunConfig) -> Result<DistributionFunction, CliError> {
    let grid = config.grid()?;
    let eps = config.case.epsilon;
    let values = match config.case.kind {
        CaseKind::RotationOnly => sample_par(&grid, |_, v| Ok(maxwellian_ic(v))),
        CaseKind::ConstFields => {
            let k0 = fundamental_wavevector(&grid);
            sample_par(&grid, |x, v| Ok(plane_wave_ic(x, &k0, eps) * maxwellian_ic(v)))
        }
        CaseKind::NibwStable | CaseKind::NibwUnstable => {
            let modes = nibw_modes(config, &grid)?;
            let dims = grid.velocity_dims();
            sample_par(&grid, |x, v| nibw_ic(x, v, &modes, dims).map_err(|e| e.to_string()))
        }
    }
    .map_err(CliError::Input)?;
    Ok(DistributionFunction::from_values(&grid, values))
}

impl Simulation {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        config.validate()?;
        let f = initial_condition(config)?;
        let grid = f.grid().clone();
        let source = match config.case.kind {
            CaseKind::NibwUnstable => {
                let dims = grid.velocity_dims();
                let nodes: Vec<[f64; 3]> = (0..grid.velocity_len()).map(|w| grid.velocity_node(w)).collect();
                let background = nodes.iter().map(|v| unit_maxwellian(v, dims)).collect();
                Some(GradientSource { params: config.case.gradients(), background, nodes })
            }
            _ => None,
        };
        let model = field_model(config);
        let propagator = Propagator::new(&f, config.scheme, model, source);
        Ok(Self {
            config: config.clone(),
            observer: FieldSolver::new(&grid, model),
            k0: fundamental_wavevector(&grid),
            n_steps: config.n_steps()?,
            grid,
            f,
            propagator,
            step: 0,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn f(&self) -> &DistributionFunction {
        &self.f
    }

    pub fn into_f(self) -> DistributionFunction {
        self.f
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.scheme.h
    }

    pub fn done(&self) -> bool {
        self.step >= self.n_steps
    }

    /// Advances at most `steps` steps, stopping at `t_final`, then checks
    /// that every value is still finite.
    pub fn advance(&mut self, steps: usize) -> Result<(), CliError> {
        let steps = steps.min(self.n_steps - self.step);
        if steps == 0 {
            return Ok(());
        }
        let t0 = self.time();
        let start = self.step;
        self.propagator.advance(&mut self.f, t0, steps).map_err(|e| CliError::Numerical {
            step: start + e.step(),
            t: (start + e.step()) as f64 * self.config.scheme.h,
            reason: e.to_string(),
        })?;
        self.step += steps;
        if let Some(i) = self.f.values().iter().position(|v| !v.is_finite()) {
            let idx = self.grid.multi_index(i);
            return Err(CliError::Numerical {
                step: self.step,
                t: self.time(),
                reason: format!("non-finite value {} at cell {idx:?}", self.f.values()[i]),
            });
        }
        Ok(())
    }

    /// Closed-form solution and its unperturbed background on the grid at
    /// the current time, for the analytic cases.
    pub fn analytic(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let t = self.time();
        let scheme = &self.config.scheme;
        let (frame, omega) = (scheme.frame, scheme.omega_c);
        let case = &self.config.case;
        let k0 = self.k0;
        let eval = |eps: f64| {
            sample_par(&self.grid, |x, v| {
                Ok(match case.kind {
                    CaseKind::RotationOnly => analytic_rotation(v, t, frame, omega),
                    _ => analytic_const_fields(x, v, t, frame, &case.e0, omega, &k0, eps),
                })
            })
            .ok()
        };
        match case.kind {
            CaseKind::RotationOnly => Some((eval(0.0)?, vec![0.0; self.grid.total()])),
            CaseKind::ConstFields => Some((eval(case.epsilon)?, eval(0.0)?)),
            _ => None,
        }
    }

    pub fn observe(&self) -> SeriesRow {
        let fields = self.observer.solve(&self.f);
        let l2_error = self
            .analytic()
            .and_then(|(r, b)| l2_relative_error_values(self.f.values(), &r, &b).ok());
        SeriesRow {
            step: self.step,
            t: self.time(),
            mass: self.f.mass(),
            l2_error,
            field_energy: fields.energy(self.grid.spatial_weight()),
        }
    }

    pub fn density(&self) -> Vec<f64> {
        density(&self.f)
    }
}

/// Result of [`run`].
#[derive(Debug)]
pub struct RunSummary {
    pub rows: Vec<SeriesRow>,
    pub f: DistributionFunction,
    pub directory: PathBuf,
}

fn write_density(path: &Path, grid: &PhaseSpaceGrid, t: f64, n: &[f64]) -> io::Result<()> {
    let [_, ny, nz] = grid.spatial_shape();
    let rows = n.iter().enumerate().map(|(s, value)| {
        let x = grid.spatial_node(s);
        format!(
            "{},{},{},{},{},{},{},{}",
            fmt_f64(t),
            s / (ny * nz),
            (s / nz) % ny,
            s % nz,
            fmt_f64(x[0]),
            fmt_f64(x[1]),
            fmt_f64(x[2]),
            fmt_f64(*value)
        )
    });
    write_csv_atomic(path, "t,ix,iy,iz,x,y,z,n", rows)
}

fn write_density_grid(path: &Path, grid: &PhaseSpaceGrid) -> io::Result<()> {
    let rows = Axis::SPATIAL.iter().map(|&a| {
        let spec = grid.axis(a);
        format!("{},{},{},{}", a.label(), spec.n_points, fmt_f64(spec.min), fmt_f64(spec.length))
    });
    write_csv_atomic(path, "axis,n,min,length", rows)
}

/// Runs the configured case to `t_final`, writing `series.csv` and the
/// requested snapshots into the output directory. A partial `series.csv`
/// is still written when the run aborts.
pub fn run(config: &RunConfig) -> Result<RunSummary, CliError> {
    let mut sim = Simulation::new(config)?;
    let dir = config.output.directory.clone();
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let grid = sim.grid().clone();
    if config.output.density {
        let path = dir.join("density_grid.csv");
        write_density_grid(&path, &grid).map_err(io_err(&path))?;
    }
    let series_path = dir.join("series.csv");
    let mut rows = Vec::new();
    let record = |sim: &Simulation, rows: &mut Vec<SeriesRow>| -> Result<(), CliError> {
        rows.push(sim.observe());
        let tag = format!("{:06}", sim.step());
        if config.output.density {
            let path = dir.join(format!("n_{tag}.csv"));
            write_density(&path, &grid, sim.time(), &sim.density()).map_err(io_err(&path))?;
        }
        if config.output.snapshots {
            let path = dir.join(format!("f_{tag}.bin"));
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            sim.f()
                .write_snapshot(io::BufWriter::new(file))
                .map_err(|e| CliError::Io { path: path.clone(), source: io::Error::other(e.to_string()) })?;
        }
        Ok(())
    };
    let outcome = (|| -> Result<(), CliError> {
        record(&sim, &mut rows)?;
        while !sim.done() {
            sim.advance(config.output.cadence)?;
            record(&sim, &mut rows)?;
        }
        Ok(())
    })();
    write_csv_atomic(&series_path, SERIES_HEADER, rows.iter().map(SeriesRow::csv)).map_err(io_err(&series_path))?;
    outcome?;
    Ok(RunSummary { rows, f: sim.into_f(), directory: dir })
}

/// Advances a copy of `config` with step `h` to `t_final` and returns `f`.
pub fn final_state(config: &RunConfig, h: f64) -> Result<DistributionFunction, CliError> {
    let mut cfg = config.clone();
    cfg.scheme.h = h;
    let mut sim = Simulation::new(&cfg)?;
    let n = sim.n_steps();
    sim.advance(n)?;
    Ok(sim.into_f())
}

/// Background against which convergence errors are normalized.
fn convergence_background(config: &RunConfig, grid: &PhaseSpaceGrid) -> Result<Vec<f64>, CliError> {
    match config.case.kind {
        CaseKind::RotationOnly => Ok(vec![0.0; grid.total()]),
        CaseKind::ConstFields => {
            let mut cfg = config.clone();
            cfg.case.epsilon = 0.0;
            let mut sim = Simulation::new(&cfg)?;
            sim.step = sim.n_steps;
            Ok(sim.analytic().map(|(r, _)| r).unwrap_or_default())
        }
        CaseKind::NibwStable | CaseKind::NibwUnstable => {
            let dims = grid.velocity_dims();
            sample_par(grid, |_, v| Ok(unit_maxwellian(v, dims))).map_err(CliError::Input)
        }
    }
}

/// Study result. `fit` is an error when no order can be defined, e.g. for
/// a single step size; the samples are still reported.
#[derive(Debug)]
pub struct StudyReport {
    /// `(h, error)` sorted by decreasing `h`.
    pub samples: Vec<(f64, f64)>,
    pub fit: Result<ConvergenceReport, DiagError>,
}

/// Errors of runs with each `h` against a run with `h_ref`, all to
/// `t_final`, written to `convergence.csv` and `convergence_summary.csv`.
pub fn convergence_study(config: &RunConfig, hs: &[f64], h_ref: f64) -> Result<StudyReport, CliError> {
    if hs.is_empty() {
        return Err(CliError::Input("need at least one step size".into()));
    }
    for &h in hs.iter().chain([&h_ref]) {
        if !(h > 0.0) {
            return Err(CliError::Input(format!("step sizes must be positive, got {h}")));
        }
        steps_for(config.t_final, h)?;
    }
    if let Some(&h) = hs.iter().find(|&&h| h <= h_ref) {
        return Err(CliError::Input(format!("reference step {h_ref} must be smaller than every h, got {h}")));
    }
    let reference = final_state(config, h_ref)?;
    let background = convergence_background(config, reference.grid())?;
    let mut samples = Vec::new();
    for &h in hs {
        let f = final_state(config, h)?;
        let err = l2_relative_error_values(f.values(), reference.values(), &background)
            .map_err(|e| CliError::Input(format!("h = {h}: {e}")))?;
        samples.push((h, err));
    }
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));
    let fit = convergence_order(&samples);

    let dir = &config.output.directory;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rows = samples.iter().enumerate().map(|(i, &(h, e))| {
        let order = match &fit {
            Ok(r) if i > 0 => fmt_f64(r.pairwise[i - 1]),
            _ => String::new(),
        };
        format!("{},{},{}", fmt_f64(h), fmt_f64(e), order)
    });
    let path = dir.join("convergence.csv");
    write_csv_atomic(&path, "h,error,order", rows).map_err(io_err(&path))?;
    let path = dir.join("convergence_summary.csv");
    let mut summary = vec![format!("h_ref,{}", fmt_f64(h_ref))];
    match &fit {
        Ok(r) => {
            summary.push(format!("two_point_order,{}", fmt_f64(r.two_point)));
            summary.push(format!("least_squares_order,{}", fmt_f64(r.least_squares)));
        }
        Err(e) => {
            summary.push("two_point_order,".into());
            summary.push("least_squares_order,".into());
            summary.push(format!("order_undefined,\"{e}\""));
        }
    }
    write_csv_atomic(&path, "metric,value", summary).map_err(io_err(&path))?;
    Ok(StudyReport { samples, fit })
}

fn parse_cell<T: std::str::FromStr>(path: &Path, line: usize, cell: Option<&str>) -> Result<T, CliError> {
    cell.and_then(|c| c.trim().parse().ok())
        .ok_or_else(|| CliError::Input(format!("{}: line {line}: malformed row", path.display())))
}

fn read_layout(dir: &Path) -> Result<SpatialLayout, CliError> {
    let path = dir.join("density_grid.csv");
    let text = fs::read_to_string(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut layout = SpatialLayout { shape: [1; 3], lengths: [1.0; 3] };
    for (i, line) in text.lines().enumerate().skip(1) {
        let mut cells = line.split(',');
        let label = cells.next().unwrap_or("");
        let axis = Axis::from_label(label)
            .filter(|a| Axis::SPATIAL.contains(a))
            .ok_or_else(|| CliError::Input(format!("{}: line {}: unknown axis `{label}`", path.display(), i + 1)))?;
        let n: usize = parse_cell(&path, i + 1, cells.next())?;
        let _min: f64 = parse_cell(&path, i + 1, cells.next())?;
        let length: f64 = parse_cell(&path, i + 1, cells.next())?;
        layout.shape[axis.index()] = n;
        layout.lengths[axis.index()] = length;
    }
    Ok(layout)
}

/// Reads `density_grid.csv` and every `n_*.csv` in `dir`, in file-name
/// order, into a time series.
pub fn read_density_series(dir: &Path) -> Result<(SpatialLayout, TimeSeries), CliError> {
    let layout = read_layout(dir)?;
    let [nx, ny, nz] = layout.shape;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("n_") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    let mut times = Vec::new();
    let mut values = Vec::new();
    for path in &files {
        let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut field = vec![f64::NAN; nx * ny * nz];
        let mut t = None;
        for (i, line) in text.lines().enumerate().skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 8 {
                return Err(CliError::Input(format!("{}: line {}: expected 8 columns", path.display(), i + 1)));
            }
            t = Some(parse_cell::<f64>(path, i + 1, Some(cells[0]))?);
            let ix: usize = parse_cell(path, i + 1, Some(cells[1]))?;
            let iy: usize = parse_cell(path, i + 1, Some(cells[2]))?;
            let iz: usize = parse_cell(path, i + 1, Some(cells[3]))?;
            if ix >= nx || iy >= ny || iz >= nz {
                return Err(CliError::Input(format!("{}: line {}: index out of range", path.display(), i + 1)));
            }
            field[(ix * ny + iy) * nz + iz] = parse_cell(path, i + 1, Some(cells[7]))?;
        }
        if field.iter().any(|v| v.is_nan()) {
            return Err(CliError::Input(format!("{}: missing grid points", path.display())));
        }
        let t = t.ok_or_else(|| CliError::Input(format!("{}: no rows", path.display())))?;
        times.push(t);
        values.push(field);
    }
    let series = TimeSeries::new(times, values).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    Ok((layout, series))
}

/// Dispersion spectrum of the density series in `dir` along `axis`,
/// written to `dir/spectrum.csv`.
pub fn spectrum_command(dir: &Path, axis: Axis, hann: bool) -> Result<SpectrumGrid, CliError> {
    if !Axis::SPATIAL.contains(&axis) {
        return Err(CliError::Input(format!("spectrum axis must be spatial, got {axis}")));
    }
    let (layout, series) = read_density_series(dir)?;
    let spectrum = dispersion_spectrum(&series, layout, axis.index(), hann)
        .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let path = dir.join("spectrum.csv");
    write_spectrum_csv(&path, &spectrum).map_err(io_err(&path))?;
    Ok(spectrum)
}
