//! Integer-order Bessel functions `J_p` and `I_p` for real arguments.
//!
//! Small arguments use the ascending series; larger ones use Miller's
//! downward recurrence normalized by the generating-function identities
//! `J_0 + 2 Σ J_2k = 1` and `I_0 + 2 Σ I_k = e^x`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BesselError {
    #[error("I_{order}({x}) overflows f64")]
    Overflow { order: u32, x: f64 },
    #[error("non-finite Bessel argument {0}")]
    NonFinite(f64),
}

const SERIES_LIMIT_J: f64 = 4.0;
const SERIES_LIMIT_I: f64 = 2.0;
const RESCALE: f64 = 1e250;

fn ascending_series(p: u32, x: f64, alternating: bool) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=p {
        term *= half / k as f64;
    }
    let q = half * half;
    let mut sum = term;
    let sign = if alternating { -1.0 } else { 1.0 };
    for k in 1..200 {
        term *= sign * q / (k as f64 * (k + p) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn miller_start(p: u32, x: f64) -> u32 {
    let m = (p as f64).max(x.abs());
    let start = (m + 20.0 + (40.0 * m).sqrt()) as u32;
    start + (start % 2)
}

/// `J_p(x)` for integer `p ≥ 0`.
pub fn bessel_j(p: u32, x: f64) -> Result<f64, BesselError> {
    if !x.is_finite() {
        return Err(BesselError::NonFinite(x));
    }
    if x == 0.0 {
        return Ok(if p == 0 { 1.0 } else { 0.0 });
    }
    // J_p(-x) = (-1)^p J_p(x)
    let parity = if x < 0.0 && p % 2 == 1 { -1.0 } else { 1.0 };
    let ax = x.abs();
    if ax <= SERIES_LIMIT_J {
        return Ok(parity * ascending_series(p, ax, true));
    }
    let start = miller_start(p, ax);
    let two_over_x = 2.0 / ax;
    let (mut next, mut current) = (0.0_f64, 1e-300_f64);
    let mut norm = 0.0;
    let mut value = 0.0;
    for k in (1..=start).rev() {
        // current = J_k, next = J_{k+1}; produce J_{k-1}
        let prev = k as f64 * two_over_x * current - next;
        next = current;
        current = prev;
        let order = k - 1;
        if order == p {
            value = current;
        }
        if order % 2 == 0 {
            norm += if order == 0 { current } else { 2.0 * current };
        }
        if current.abs() > RESCALE {
            current /= RESCALE;
            next /= RESCALE;
            norm /= RESCALE;
            value /= RESCALE;
        }
    }
    Ok(parity * value / norm)
}

/// Exponentially scaled `e^{-|x|} I_p(x)`, finite for every finite `x`.
pub fn bessel_i_scaled(p: u32, x: f64) -> Result<f64, BesselError> {
    if !x.is_finite() {
        return Err(BesselError::NonFinite(x));
    }
    if x == 0.0 {
        return Ok(if p == 0 { 1.0 } else { 0.0 });
    }
    let parity = if x < 0.0 && p % 2 == 1 { -1.0 } else { 1.0 };
    let ax = x.abs();
    if ax <= SERIES_LIMIT_I {
        return Ok(parity * ascending_series(p, ax, false) * (-ax).exp());
    }
    let start = miller_start(p, ax);
    let two_over_x = 2.0 / ax;
    let (mut next, mut current) = (0.0_f64, 1e-300_f64);
    let mut norm = 0.0;
    let mut value = 0.0;
    for k in (1..=start).rev() {
        let prev = k as f64 * two_over_x * current + next;
        next = current;
        current = prev;
        let order = k - 1;
        if order == p {
            value = current;
        }
        norm += if order == 0 { current } else { 2.0 * current };
        if current > RESCALE {
            current /= RESCALE;
            next /= RESCALE;
            norm /= RESCALE;
            value /= RESCALE;
        }
    }
    Ok(parity * value / norm)
}

/// `I_p(x)`; errors once the result leaves the f64 range.
pub fn bessel_i(p: u32, x: f64) -> Result<f64, BesselError> {
    let scaled = bessel_i_scaled(p, x)?;
    let value = scaled * x.abs().exp();
    if !value.is_finite() {
        return Err(BesselError::Overflow { order: p, x });
    }
    Ok(value)
}
