//! One-dimensional advection sweeps over all pencils of an axis.

use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{Axis, DistributionFunction};
use crate::interpolation::{InterpError, InterpMethod, LineShifter};

/// Adjacent pencils gathered together so strided axes read whole rows.
const TILE: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("axis {0} is degenerate and has no pencils")]
    Degenerate(Axis),
    #[error("pencil at {base:?} along {axis}: {source}")]
    Interp {
        axis: Axis,
        base: [usize; 6],
        #[source]
        source: InterpError,
    },
}

/// Raw view of the back buffer shared across workers. Each work item writes
/// a disjoint set of indices, so no two threads touch the same element.
#[derive(Clone, Copy)]
struct SharedOut {
    ptr: *mut f64,
    len: usize,
}

unsafe impl Send for SharedOut {}
unsafe impl Sync for SharedOut {}

impl SharedOut {
    /// # Safety
    /// `start + src.len() <= len` and no other thread writes this range.
    unsafe fn write(&self, start: usize, src: &[f64]) {
        debug_assert!(start + src.len() <= self.len);
        std::ptr::copy_nonoverlapping(src.as_ptr(), self.ptr.add(start), src.len());
    }
}

struct Worker {
    shifter: LineShifter,
    lines: Vec<f64>,
    outs: Vec<f64>,
    shifts: Vec<f64>,
    row: Vec<f64>,
}

impl Worker {
    /// Shifts the first `width` gathered lines into `outs`, in pairs.
    fn shift_lines(&mut self, n: usize, width: usize) -> Result<(), (usize, InterpError)> {
        let paired = self.shifter.method() == InterpMethod::Trig;
        let mut t = 0;
        while t < width {
            let line = &self.lines[t * n..(t + 1) * n];
            let out = &mut self.outs[t * n..(t + 1) * n];
            if paired && t + 1 < width && self.shifts[t] != 0.0 && self.shifts[t + 1] != 0.0 {
                let (a, b) = self.lines[t * n..(t + 2) * n].split_at(n);
                let (oa, ob) = self.outs[t * n..(t + 2) * n].split_at_mut(n);
                let shifts = [self.shifts[t], self.shifts[t + 1]];
                self.shifter.shift_pair([a, b], [oa, ob], shifts).map_err(|e| {
                    // only a non-finite shift fails here; name that pencil
                    (t + usize::from(shifts[0].is_finite()), e)
                })?;
                t += 2;
                continue;
            }
            if self.shifts[t] == 0.0 {
                out.copy_from_slice(line);
            } else {
                self.shifter.shift(line, out, self.shifts[t]).map_err(|e| (t, e))?;
            }
            t += 1;
        }
        Ok(())
    }
}

/// Shifts every pencil along `axis` by `shift_of_pencil(base)`, where
/// `base` is the linear index of the pencil's first cell, then swaps the
/// buffers. `out[j] = f(x_j - shift)` on each pencil.
pub fn advect_axis<F>(
    f: &mut DistributionFunction,
    axis: Axis,
    shift_of_pencil: F,
    interp: InterpMethod,
) -> Result<(), SweepError>
where
    F: Fn(usize) -> f64 + Sync,
{
    let grid = f.grid().clone();
    if grid.is_degenerate(axis) {
        return Err(SweepError::Degenerate(axis));
    }
    let n = grid.n(axis);
    let stride = grid.stride(axis);
    let spacing = grid.spacing(axis);
    let block = n * stride;
    let blocks = grid.total() / block;
    // contiguous pencils are grouped TILE blocks at a time; strided ones
    // TILE neighbours within a block
    let tiles_per_block = if stride == 1 { 1 } else { stride.div_ceil(TILE) };
    let items = if stride == 1 { blocks.div_ceil(TILE) } else { blocks * tiles_per_block };

    let (front, back) = f.buffers_mut();
    let out = SharedOut { ptr: back.as_mut_ptr(), len: back.len() };

    (0..items).into_par_iter().try_for_each_init(
        || Worker {
            shifter: LineShifter::new(interp, n, spacing),
            lines: vec![0.0; n * TILE],
            outs: vec![0.0; n * TILE],
            shifts: vec![0.0; TILE],
            row: vec![0.0; TILE],
        },
        |w, item| {
            let (origin, width, pencil_step) = if stride == 1 {
                let b0 = item * TILE;
                (b0 * n, TILE.min(blocks - b0), n)
            } else {
                let b = item / tiles_per_block;
                let j0 = (item % tiles_per_block) * TILE;
                (b * block + j0, TILE.min(stride - j0), 1)
            };
            for t in 0..width {
                w.shifts[t] = shift_of_pencil(origin + t * pencil_step);
            }
            if stride == 1 {
                w.lines[..width * n].copy_from_slice(&front[origin..origin + width * n]);
            } else {
                for k in 0..n {
                    let row = &front[origin + k * stride..origin + k * stride + width];
                    for (t, &v) in row.iter().enumerate() {
                        w.lines[t * n + k] = v;
                    }
                }
            }
            w.shift_lines(n, width).map_err(|(t, source)| SweepError::Interp {
                axis,
                base: grid.multi_index(origin + t * pencil_step),
                source,
            })?;
            // SAFETY: the cells of distinct items never overlap and stay
            // inside the back buffer.
            if stride == 1 {
                unsafe { out.write(origin, &w.outs[..width * n]) };
            } else {
                for k in 0..n {
                    for t in 0..width {
                        w.row[t] = w.outs[t * n + k];
                    }
                    unsafe { out.write(origin + k * stride, &w.row[..width]) };
                }
            }
            Ok(())
        },
    )?;
    f.swap_buffers();
    Ok(())
}
