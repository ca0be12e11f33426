//! Phase-space grid, distribution storage and pencil access.
//!
//! The grid always carries six axes in the fixed order `x, y, z, vx, vy, vz`.
//! Values are stored row-major over that order, so `vz` is the
//! fastest-varying index and `x` the slowest. An axis with a single point is
//! degenerate: its coordinate is `min` and advection stages along it are
//! skipped.

use std::fmt;
use std::io::{self, Read, Write};

use thiserror::Error;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"VLR1";

#[derive(Debug, Error)]
pub enum GridError {
    #[error("axis {axis}: {reason}")]
    InvalidAxis { axis: Axis, reason: String },
    #[error("axes must be given in the order x, y, z, vx, vy, vz (position {position} holds {found})")]
    AxisOrder { position: usize, found: Axis },
    #[error("grid size overflows usize")]
    SizeOverflow,
    #[error("non-finite initial value {value} at node {index} (x = {x:?}, v = {v:?})")]
    NonFinite {
        index: usize,
        x: [f64; 3],
        v: [f64; 3],
        value: f64,
    },
    #[error("axis {0} is degenerate and has no pencils")]
    DegenerateAxis(Axis),
    #[error("multi-index {index:?} is out of range for the grid")]
    IndexOutOfRange { index: [usize; 6] },
    #[error("pencil length {got} does not match axis length {expected}")]
    PencilLength { expected: usize, got: usize },
    #[error("snapshot i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a VLR1 snapshot")]
    BadMagic,
    #[error("unknown axis kind tag {0} in snapshot header")]
    BadKind(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisKind {
    Spatial,
    Velocity,
}

impl AxisKind {
    fn tag(self) -> u32 {
        match self {
            AxisKind::Spatial => 0,
            AxisKind::Velocity => 1,
        }
    }

    fn from_tag(tag: u32) -> Result<Self, GridError> {
        match tag {
            0 => Ok(AxisKind::Spatial),
            1 => Ok(AxisKind::Velocity),
            other => Err(GridError::BadKind(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
    Vx,
    Vy,
    Vz,
}

impl Axis {
    pub const ALL: [Axis; 6] = [Axis::X, Axis::Y, Axis::Z, Axis::Vx, Axis::Vy, Axis::Vz];
    pub const SPATIAL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
    pub const VELOCITY: [Axis; 3] = [Axis::Vx, Axis::Vy, Axis::Vz];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Component index within its 3-vector (x/vx → 0, y/vy → 1, z/vz → 2).
    pub fn component(self) -> usize {
        self.index() % 3
    }

    pub fn kind(self) -> AxisKind {
        if self.index() < 3 {
            AxisKind::Spatial
        } else {
            AxisKind::Velocity
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
            Axis::Vx => "vx",
            Axis::Vy => "vy",
            Axis::Vz => "vz",
        }
    }

    pub fn from_label(label: &str) -> Option<Axis> {
        Axis::ALL.into_iter().find(|a| a.label() == label)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One periodic axis: `n_points` nodes at `min + j * length / n_points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub axis: Axis,
    pub n_points: usize,
    pub min: f64,
    pub length: f64,
}

impl AxisSpec {
    pub fn new(axis: Axis, n_points: usize, min: f64, length: f64) -> Self {
        Self {
            axis,
            n_points,
            min,
            length,
        }
    }

    /// A single-node axis sitting at the origin.
    pub fn degenerate(axis: Axis) -> Self {
        Self::new(axis, 1, 0.0, 1.0)
    }

    pub fn kind(&self) -> AxisKind {
        self.axis.kind()
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n_points as f64
    }

    pub fn is_degenerate(&self) -> bool {
        self.n_points == 1
    }

    pub fn coord(&self, j: usize) -> f64 {
        self.min + j as f64 * self.spacing()
    }

    /// Quadrature weight of the axis: its spacing, or 1 for a degenerate axis.
    pub fn weight(&self) -> f64 {
        if self.is_degenerate() {
            1.0
        } else {
            self.spacing()
        }
    }

    fn validate(&self) -> Result<(), GridError> {
        let fail = |reason: &str| GridError::InvalidAxis {
            axis: self.axis,
            reason: reason.to_string(),
        };
        if self.n_points == 0 {
            return Err(fail("n_points must be at least 1"));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(fail(&format!("length must be positive, got {}", self.length)));
        }
        if !self.min.is_finite() {
            return Err(fail(&format!("min must be finite, got {}", self.min)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    axes: [AxisSpec; 6],
    strides: [usize; 6],
    total: usize,
}

/// Validates six axis specs and derives strides and the total cell count.
pub fn make_grid(spec: [AxisSpec; 6]) -> Result<PhaseSpaceGrid, GridError> {
    for (position, (axis_spec, expected)) in spec.iter().zip(Axis::ALL).enumerate() {
        if axis_spec.axis != expected {
            return Err(GridError::AxisOrder {
                position,
                found: axis_spec.axis,
            });
        }
        axis_spec.validate()?;
    }
    let mut strides = [1usize; 6];
    let mut total = 1usize;
    for k in (0..6).rev() {
        strides[k] = total;
        total = total
            .checked_mul(spec[k].n_points)
            .ok_or(GridError::SizeOverflow)?;
    }
    Ok(PhaseSpaceGrid {
        axes: spec,
        strides,
        total,
    })
}

impl PhaseSpaceGrid {
    pub fn axes(&self) -> &[AxisSpec; 6] {
        &self.axes
    }

    pub fn axis(&self, axis: Axis) -> &AxisSpec {
        &self.axes[axis.index()]
    }

    pub fn n(&self, axis: Axis) -> usize {
        self.axes[axis.index()].n_points
    }

    pub fn spacing(&self, axis: Axis) -> f64 {
        self.axes[axis.index()].spacing()
    }

    pub fn coord(&self, axis: Axis, j: usize) -> f64 {
        self.axes[axis.index()].coord(j)
    }

    pub fn is_degenerate(&self, axis: Axis) -> bool {
        self.axes[axis.index()].is_degenerate()
    }

    pub fn stride(&self, axis: Axis) -> usize {
        self.strides[axis.index()]
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn spatial_shape(&self) -> [usize; 3] {
        [self.n(Axis::X), self.n(Axis::Y), self.n(Axis::Z)]
    }

    pub fn spatial_lengths(&self) -> [f64; 3] {
        Axis::SPATIAL.map(|a| self.axis(a).length)
    }

    /// Number of spatial nodes.
    pub fn spatial_len(&self) -> usize {
        self.spatial_shape().iter().product()
    }

    /// Number of velocity nodes per spatial node.
    pub fn velocity_len(&self) -> usize {
        Axis::VELOCITY.iter().map(|&a| self.n(a)).product()
    }

    /// Number of non-degenerate velocity axes.
    pub fn velocity_dims(&self) -> usize {
        Axis::VELOCITY
            .iter()
            .filter(|&&a| !self.is_degenerate(a))
            .count()
    }

    pub fn spatial_weight(&self) -> f64 {
        Axis::SPATIAL.iter().map(|&a| self.axis(a).weight()).product()
    }

    pub fn velocity_weight(&self) -> f64 {
        Axis::VELOCITY.iter().map(|&a| self.axis(a).weight()).product()
    }

    /// Phase-space cell volume used by discrete integrals.
    pub fn cell_volume(&self) -> f64 {
        self.spatial_weight() * self.velocity_weight()
    }

    pub fn linear_index(&self, index: &[usize; 6]) -> usize {
        index
            .iter()
            .zip(self.strides.iter())
            .map(|(i, s)| i * s)
            .sum()
    }

    pub fn multi_index(&self, mut linear: usize) -> [usize; 6] {
        let mut out = [0usize; 6];
        for k in 0..6 {
            out[k] = linear / self.strides[k];
            linear %= self.strides[k];
        }
        out
    }

    pub fn check_index(&self, index: &[usize; 6]) -> Result<(), GridError> {
        if index
            .iter()
            .zip(self.axes.iter())
            .any(|(&i, a)| i >= a.n_points)
        {
            return Err(GridError::IndexOutOfRange { index: *index });
        }
        Ok(())
    }

    /// Physical coordinates `(x, v)` of the node with the given multi-index.
    pub fn node(&self, index: &[usize; 6]) -> ([f64; 3], [f64; 3]) {
        let mut x = [0.0; 3];
        let mut v = [0.0; 3];
        for (k, &axis) in Axis::ALL.iter().enumerate() {
            let c = self.coord(axis, index[k]);
            if k < 3 {
                x[k] = c;
            } else {
                v[k - 3] = c;
            }
        }
        (x, v)
    }

    /// Spatial coordinates of the spatial node with linear spatial index `s`.
    pub fn spatial_node(&self, s: usize) -> [f64; 3] {
        let [_, ny, nz] = self.spatial_shape();
        let idx = [s / (ny * nz), (s / nz) % ny, s % nz];
        [
            self.coord(Axis::X, idx[0]),
            self.coord(Axis::Y, idx[1]),
            self.coord(Axis::Z, idx[2]),
        ]
    }

    /// Velocity coordinates of the velocity node with linear velocity index `w`.
    pub fn velocity_node(&self, w: usize) -> [f64; 3] {
        let (ny, nz) = (self.n(Axis::Vy), self.n(Axis::Vz));
        let idx = [w / (ny * nz), (w / nz) % ny, w % nz];
        [
            self.coord(Axis::Vx, idx[0]),
            self.coord(Axis::Vy, idx[1]),
            self.coord(Axis::Vz, idx[2]),
        ]
    }

    /// Enumerates the base multi-indices of every pencil along `axis`; the
    /// entry for `axis` itself is always 0.
    pub fn pencil_bases(&self, axis: Axis) -> Result<Vec<[usize; 6]>, GridError> {
        if self.is_degenerate(axis) {
            return Err(GridError::DegenerateAxis(axis));
        }
        let count = self.total / self.n(axis);
        let k = axis.index();
        let mut out = Vec::with_capacity(count);
        let mut idx = [0usize; 6];
        'outer: loop {
            out.push(idx);
            for d in (0..6).rev() {
                if d == k {
                    continue;
                }
                idx[d] += 1;
                if idx[d] < self.axes[d].n_points {
                    continue 'outer;
                }
                idx[d] = 0;
            }
            break;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferTag {
    Front,
    Back,
}

/// Double-buffered distribution function over a [`PhaseSpaceGrid`].
///
/// Sweeps read from the front buffer, write every cell of the back buffer
/// once, then call [`DistributionFunction::swap_buffers`].
#[derive(Debug, Clone)]
pub struct DistributionFunction {
    grid: PhaseSpaceGrid,
    front: Vec<f64>,
    back: Vec<f64>,
    buffer_tag: BufferTag,
}

impl DistributionFunction {
    pub fn zeros(grid: &PhaseSpaceGrid) -> Self {
        Self::from_values(grid, vec![0.0; grid.total()])
    }

    pub fn from_values(grid: &PhaseSpaceGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.total(), "value count must match grid");
        Self {
            grid: grid.clone(),
            back: vec![0.0; values.len()],
            front: values,
            buffer_tag: BufferTag::Front,
        }
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.front
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.front
    }

    pub fn into_values(self) -> Vec<f64> {
        self.front
    }

    /// Which of the two physical allocations currently serves as the front
    /// buffer.
    pub fn buffer_tag(&self) -> BufferTag {
        self.buffer_tag
    }

    pub(crate) fn buffers_mut(&mut self) -> (&[f64], &mut [f64]) {
        (&self.front, &mut self.back)
    }

    pub fn swap_buffers(&mut self) {
        std::mem::swap(&mut self.front, &mut self.back);
        self.buffer_tag = match self.buffer_tag {
            BufferTag::Front => BufferTag::Back,
            BufferTag::Back => BufferTag::Front,
        };
    }

    /// Discrete mass `Σ f · ΠΔ`.
    pub fn mass(&self) -> f64 {
        self.front.iter().sum::<f64>() * self.grid.cell_volume()
    }

    fn pencil_origin(&self, axis: Axis, base: &[usize; 6]) -> Result<usize, GridError> {
        if self.grid.is_degenerate(axis) {
            return Err(GridError::DegenerateAxis(axis));
        }
        let mut idx = *base;
        idx[axis.index()] = 0;
        self.grid.check_index(&idx)?;
        Ok(self.grid.linear_index(&idx))
    }

    /// Reads the front-buffer line along `axis` through `base` (the `axis`
    /// entry of `base` is ignored).
    pub fn pencil(&self, axis: Axis, base: &[usize; 6]) -> Result<Vec<f64>, GridError> {
        let origin = self.pencil_origin(axis, base)?;
        let stride = self.grid.stride(axis);
        Ok((0..self.grid.n(axis))
            .map(|j| self.front[origin + j * stride])
            .collect())
    }

    /// Writes a line into the back buffer along `axis` through `base`.
    pub fn write_pencil(
        &mut self,
        axis: Axis,
        base: &[usize; 6],
        line: &[f64],
    ) -> Result<(), GridError> {
        let origin = self.pencil_origin(axis, base)?;
        let n = self.grid.n(axis);
        if line.len() != n {
            return Err(GridError::PencilLength {
                expected: n,
                got: line.len(),
            });
        }
        let stride = self.grid.stride(axis);
        for (j, &value) in line.iter().enumerate() {
            self.back[origin + j * stride] = value;
        }
        Ok(())
    }

    /// Writes the snapshot: magic, six `{u32 kind, u32 n, f64 min, f64 length}`
    /// records, then all values as little-endian f64 in storage order.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<(), GridError> {
        w.write_all(SNAPSHOT_MAGIC)?;
        for axis in self.grid.axes() {
            w.write_all(&axis.kind().tag().to_le_bytes())?;
            w.write_all(&(axis.n_points as u32).to_le_bytes())?;
            w.write_all(&axis.min.to_le_bytes())?;
            w.write_all(&axis.length.to_le_bytes())?;
        }
        for value in &self.front {
            w.write_all(&value.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self, GridError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(GridError::BadMagic);
        }
        let mut u32buf = [0u8; 4];
        let mut f64buf = [0u8; 8];
        let mut specs = Axis::ALL.map(AxisSpec::degenerate);
        for (spec, axis) in specs.iter_mut().zip(Axis::ALL) {
            r.read_exact(&mut u32buf)?;
            let kind = AxisKind::from_tag(u32::from_le_bytes(u32buf))?;
            if kind != axis.kind() {
                return Err(GridError::AxisOrder {
                    position: axis.index(),
                    found: axis,
                });
            }
            r.read_exact(&mut u32buf)?;
            let n = u32::from_le_bytes(u32buf) as usize;
            r.read_exact(&mut f64buf)?;
            let min = f64::from_le_bytes(f64buf);
            r.read_exact(&mut f64buf)?;
            let length = f64::from_le_bytes(f64buf);
            *spec = AxisSpec::new(axis, n, min, length);
        }
        let grid = make_grid(specs)?;
        let mut values = vec![0.0; grid.total()];
        for value in values.iter_mut() {
            r.read_exact(&mut f64buf)?;
            *value = f64::from_le_bytes(f64buf);
        }
        Ok(Self::from_values(&grid, values))
    }
}

/// Evaluates `init(x, v)` at every node; the result sits in the front buffer.
pub fn sample<F>(grid: &PhaseSpaceGrid, init: F) -> Result<DistributionFunction, GridError>
where
    F: Fn(&[f64; 3], &[f64; 3]) -> f64,
{
    let velocities: Vec<[f64; 3]> = (0..grid.velocity_len())
        .map(|w| grid.velocity_node(w))
        .collect();
    let mut values = Vec::with_capacity(grid.total());
    for s in 0..grid.spatial_len() {
        let x = grid.spatial_node(s);
        for v in &velocities {
            let value = init(&x, v);
            if !value.is_finite() {
                return Err(GridError::NonFinite {
                    index: values.len(),
                    x,
                    v: *v,
                    value,
                });
            }
            values.push(value);
        }
    }
    Ok(DistributionFunction::from_values(grid, values))
}
