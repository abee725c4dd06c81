//! Complex log-Gamma and the spectral symbol of the weights `α_j`.
//!
//! The symbol is the Laplace transform of `α_j`,
//! `α̂_j(ξ) = ∫₀^∞ e^{-2vξ} α_j(v) dv = (π/ξ) ∫₀^{π/2} (cos s)^{2ξ} cosh((j+1)s) ds`,
//! which has the closed form `π² Γ(2ξ) / (2^{2ξ} |Γ(ξ+1+iη)|²)` with `η = (j+1)/2`.
//! Everything is kept in log space because the linear-space quotient
//! overflows near ξ ≈ 90.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::error::{Result, WormError};
use crate::quadrature::{integrate_adaptive_with, QuadConfig};

const LANCZOS_G: f64 = 7.0;

#[rustfmt::skip]
const LANCZOS_COEF: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

/// `ln √(2π)`
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this modulus the Lanczos sum is used, above it the Stirling series.
const STIRLING_MIN_MODULUS: f64 = 15.0;

/// Principal-branch-continuous `log Γ(z)` for `Re z > 0`.
///
/// Lanczos (g = 7, 9 terms) for `Re z >= 1/2` and `|z| < 15`; below
/// `Re z = 1/2` one step of `log Γ(z) = log Γ(z+1) − log z`. For `|z| >= 15`
/// the Stirling series is used instead: the leading Lanczos coefficient
/// differs from 1 by 1.9e-13, which is the limiting error for large `|z|`.
pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    if !(z.re > 0.0) || !z.im.is_finite() {
        return Err(WormError::domain(format!(
            "log_gamma requires Re z > 0, got {z}"
        )));
    }
    if z.re < 0.5 {
        return Ok(log_gamma_half_plane(z + 1.0) - z.ln());
    }
    Ok(log_gamma_half_plane(z))
}

fn log_gamma_half_plane(z: Complex64) -> Complex64 {
    if z.norm() >= STIRLING_MIN_MODULUS {
        stirling(z)
    } else {
        lanczos(z)
    }
}

fn lanczos(z: Complex64) -> Complex64 {
    let zm = z - 1.0;
    let mut x = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (k, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        x += c / (zm + k as f64);
    }
    // log Γ = ln√(2π) + (z − 1/2)(ln t − 1) − g + ln x with t = z + g − 1/2
    assemble(zm + 0.5, zm + LANCZOS_G + 0.5, -LANCZOS_G, x.ln())
}

fn stirling(z: Complex64) -> Complex64 {
    let w = 1.0 / z;
    let w2 = w * w;
    let series = w
        * (1.0 / 12.0
            + w2 * (-1.0 / 360.0
                + w2 * (1.0 / 1260.0
                    + w2 * (-1.0 / 1680.0 + w2 * (1.0 / 1188.0 + w2 * (-691.0 / 360360.0))))));
    // (z − 1/2) ln z − z = (z − 1/2)(ln z − 1) − 1/2
    assemble(z - 0.5, z, -0.5, series)
}

/// `ln√(2π) + h (ln t − 1) + c + tail`.
///
/// The result is of order `|h| ln|t|` (about 860 at z = 200) so ln|t| is
/// carried as a double-double and the products are accumulated with
/// error-free transforms.
fn assemble(h: Complex64, t: Complex64, c: f64, tail: Complex64) -> Complex64 {
    let (sq_hi, sq_lo) = {
        let (a, ea) = two_prod(t.re, t.re);
        let (b, eb) = two_prod(t.im, t.im);
        let (s, es) = two_sum(a, b);
        (s, es + ea + eb)
    };
    let ln_hi = 0.5 * sq_hi.ln();
    let back = (2.0 * ln_hi).exp();
    let ln_lo = 0.5 * ((sq_hi - back) + sq_lo) / back;
    let lm1 = ln_hi - 1.0;
    let theta = t.im.atan2(t.re);

    let mut re = DoubleDouble::default();
    re.add(LN_SQRT_2PI);
    re.add(c);
    re.add(tail.re);
    re.add_prod(h.re, lm1);
    re.add(h.re * ln_lo);
    re.add_prod(-h.im, theta);

    let mut im = DoubleDouble::default();
    im.add(tail.im);
    im.add_prod(h.re, theta);
    im.add_prod(h.im, lm1);
    im.add(h.im * ln_lo);

    Complex64::new(re.value(), im.value())
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[derive(Default)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn add(&mut self, v: f64) {
        let (s, e) = two_sum(self.hi, v);
        self.hi = s;
        self.lo += e;
    }

    fn add_prod(&mut self, a: f64, b: f64) {
        let (p, e) = two_prod(a, b);
        self.add(p);
        self.lo += e;
    }

    fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// Real `log Γ(x)` for `x > 0`.
pub fn log_gamma_real(x: f64) -> Result<f64> {
    log_gamma(Complex64::new(x, 0.0)).map(|v| v.re)
}

/// Value of the spectral symbol `α̂_j` at frequency `ξ`, stored as its logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSymbol {
    pub j: i64,
    /// `(j+1)/2`
    pub eta: f64,
    pub xi: f64,
    /// `ln α̂_j(ξ)`
    pub log_value: f64,
}

impl SpectralSymbol {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    /// `ln β_η(ξ)` where `β_η = 1 / (2π α̂_j)`.
    pub fn log_beta(&self) -> f64 {
        -(2.0 * PI).ln() - self.log_value
    }

    pub fn beta(&self) -> f64 {
        self.log_beta().exp()
    }
}

/// `α̂_j(ξ)` from the Gamma closed form, evaluated in log space.
pub fn alpha_hat(j: i64, xi: f64) -> Result<SpectralSymbol> {
    Ok(SpectralSymbol {
        j,
        eta: (j + 1) as f64 / 2.0,
        xi,
        log_value: log_alpha_hat(j, xi)?,
    })
}

/// `ln α̂_j(ξ)`. Depends on `j` only through `|j+1|`, so `j` and `−2−j`
/// give bit-identical results.
pub fn log_alpha_hat(j: i64, xi: f64) -> Result<f64> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(WormError::domain(format!(
            "spectral symbol needs a finite ξ > 0, got {xi}"
        )));
    }
    let eta = (j + 1).unsigned_abs() as f64 / 2.0;
    let lg2 = log_gamma_real(2.0 * xi)?;
    let lg = log_gamma(Complex64::new(xi + 1.0, eta))?;
    Ok(2.0 * PI.ln() + lg2 - 2.0 * xi * LN_2 - 2.0 * lg.re)
}

/// `ln cosh x` without overflow.
pub(crate) fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// `α̂_j(ξ)` by quadrature of `(π/ξ) ∫₀^{π/2} (cos s)^{2ξ} cosh((j+1)s) ds`.
///
/// The integral is rewritten with `s = π/2 − u²`, which removes the
/// `(π/2 − s)^{2ξ}` endpoint behaviour.
pub fn alpha_hat_oracle(j: i64, xi: f64, tol: f64) -> Result<f64> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(WormError::domain(format!(
            "spectral symbol needs a finite ξ > 0, got {xi}"
        )));
    }
    if !(tol > 0.0) {
        return Err(WormError::domain("tolerance must be positive"));
    }
    let k = (j + 1) as f64;
    // Scale out the largest value of the cosh factor to keep the integrand O(1).
    let log_scale = ln_cosh(k * PI / 2.0);
    let integrand = |u: f64| {
        let t = u * u;
        if t == 0.0 {
            return 0.0;
        }
        let log_f = 2.0 * xi * t.sin().ln() + ln_cosh(k * (PI / 2.0 - t)) - log_scale;
        2.0 * u * log_f.exp()
    };
    let cfg = QuadConfig::new(tol * 0.1).with_tol_abs(0.0);
    let upper = (PI / 2.0).sqrt();
    let res = integrate_adaptive_with(integrand, 0.0, upper, &[0.25 * upper, 0.5 * upper], &cfg)?;
    Ok(PI / xi * res.value * log_scale.exp())
}
