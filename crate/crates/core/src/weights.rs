//! Fiber-volume weights `α_j(v)` on the upper half-plane and the
//! u-dependent weights `ω_j(u + iv) = e^{(j+1)u} α_j(v)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Result, WormError};

/// Slack allowed when `e^{-v}` exceeds 1 through rounding.
const ARCCOS_CLAMP_TOL: f64 = 1e-12;

/// `arccos(e^{-v})`, the half-width of the fiber of the unwound domain at height `v`.
pub fn fiber_half_width(v: f64) -> f64 {
    let x = (-v).exp();
    let x = if x > 1.0 && x <= 1.0 + ARCCOS_CLAMP_TOL {
        1.0
    } else {
        x
    };
    x.acos()
}

/// `α_j(v)`; requires `v > 0`.
pub fn alpha(j: i64, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(WormError::domain(format!("weight needs v > 0, got {v}")));
    }
    let a = fiber_half_width(v);
    if j == -1 {
        return Ok(2.0 * PI * a);
    }
    let k = (j + 1) as f64;
    Ok(2.0 * PI / k * (k * a).sinh())
}

/// Supremum of `α_j` over `v > 0`: `(2π/(j+1)) sinh((j+1)π/2)`, or `π²` for `j = -1`.
pub fn alpha_sup(j: i64) -> f64 {
    if j == -1 {
        return PI * PI;
    }
    let k = (j + 1) as f64;
    2.0 * PI / k * (k * PI / 2.0).sinh()
}

/// `ω_j(w1)` for `Im w1 > 0`.
pub fn omega(j: i64, w1: Complex64) -> Result<f64> {
    if !(w1.im > 0.0) {
        return Err(WormError::domain(format!(
            "weight needs Im w1 > 0, got {w1}"
        )));
    }
    let a = alpha(j, w1.im)?;
    if j == -1 {
        return Ok(a);
    }
    Ok(((j + 1) as f64 * w1.re).exp() * a)
}
