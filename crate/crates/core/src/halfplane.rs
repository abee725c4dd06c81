//! Weighted Bergman kernels `K_j` of the upper half-plane with weight `α_j`.
//!
//! Every kernel depends on the pair `(z, w)` only through the separation
//! `λ = −i(z − w̄)`. Three representations are available:
//!
//! * integral: `(1/2π) ∫₀^∞ e^{−λξ} / α̂_j(ξ) dξ`, good for `Re λ` away from 0;
//! * Fourier: `∫_ℝ e^{−i(j+1)s} φ_λ(s) ds`, valid on the closed half-plane off the diagonal;
//! * asymptotic: the expansion in powers of `1/(z − w̄)` with coefficients `ψ_n(j+1)`.

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Result, WormError};
use crate::quadrature::{envelope_cutoff, integrate_adaptive_with, QuadConfig};
use crate::specfun::{ln_cosh, log_alpha_hat};

/// Smallest `|λ|` accepted by [`Separation::new`].
pub const LAMBDA_MIN: f64 = 1e-6;
/// Smallest `Re λ` accepted by the integral representation.
pub const INTEGRAL_RE_MIN: f64 = 1e-3;
/// Automatic dispatch uses the integral representation from this `Re λ` on.
pub const INTEGRAL_DISPATCH_RE: f64 = 0.2;
/// Safety factor applied to the first dropped term of the asymptotic expansion.
pub const ASYMPTOTIC_SAFETY: f64 = 4.0;

/// Truncation of the integral representation: this many nats below the peak.
const ENVELOPE_DROP: f64 = 40.0;

const INV_2PI3: f64 = 1.0 / (2.0 * PI * PI * PI);

/// `λ = −i(z − w̄)` for a pair of points of the closed upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separation {
    lambda: Complex64,
}

impl Separation {
    /// Validates `Re λ ≥ 0` and `|λ| ≥ LAMBDA_MIN`.
    pub fn new(lambda: Complex64) -> Result<Self> {
        if !(lambda.re.is_finite() && lambda.im.is_finite()) {
            return Err(WormError::domain(format!("separation {lambda} is not finite")));
        }
        if lambda.re < 0.0 {
            return Err(WormError::domain(format!(
                "separation must have Re λ >= 0, got {lambda}"
            )));
        }
        if lambda.norm() < LAMBDA_MIN {
            return Err(WormError::Diagonal);
        }
        Ok(Separation { lambda })
    }

    pub fn from_real(lambda: f64) -> Result<Self> {
        Self::new(Complex64::new(lambda, 0.0))
    }

    /// Separation of `z` and `w`, both in the closed upper half-plane.
    pub fn from_points(z: Complex64, w: Complex64) -> Result<Self> {
        if z.im < 0.0 || w.im < 0.0 {
            return Err(WormError::domain(format!(
                "points must satisfy Im >= 0, got z = {z}, w = {w}"
            )));
        }
        Self::new(Complex64::new(0.0, -1.0) * (z - w.conj()))
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn re(&self) -> f64 {
        self.lambda.re
    }

    pub fn modulus(&self) -> f64 {
        self.lambda.norm()
    }

    /// True when both points were interior, i.e. `Re λ > 0`.
    pub fn is_interior(&self) -> bool {
        self.lambda.re > 0.0
    }

    /// `z − w̄ = iλ`
    pub fn z_minus_wbar(&self) -> Complex64 {
        Complex64::new(0.0, 1.0) * self.lambda
    }
}

/// Exponential decay rate of `|K_j|` in `|j+1|`:
/// `max{arccos(e^{−Re λ/2}), min{|Im λ|/2, π/2}}`.
pub fn b_lambda(sep: &Separation) -> f64 {
    let lam = sep.lambda();
    let a = (-lam.re / 2.0).exp().min(1.0).acos();
    a.max((lam.im.abs() / 2.0).min(PI / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Integral,
    Fourier,
    Asymptotic,
}

impl Representation {
    pub fn name(&self) -> &'static str {
        match self {
            Representation::Integral => "integral",
            Representation::Fourier => "fourier",
            Representation::Asymptotic => "asymptotic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelDiagnostics {
    /// Quadrature nodes and the truncation point of the integration range.
    Quadrature { nodes: usize, cutoff: f64 },
    /// Number of terms `N` of the expansion.
    Expansion { order: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelResult {
    pub value: Complex64,
    pub err_est: f64,
    pub representation: Representation,
    pub diagnostics: KernelDiagnostics,
}

impl KernelResult {
    fn scaled(mut self, factor: Complex64) -> Self {
        self.value *= factor;
        self.err_est *= factor.norm();
        self
    }
}

/// `log cosh s` for complex `s` with `|Im s| < π/2`, written so that it
/// does not overflow for large `|Re s|`.
fn log_cosh_c(s: Complex64) -> Complex64 {
    let s = if s.re < 0.0 { -s } else { s };
    let e = (-2.0 * s).exp();
    s + (1.0 + e).ln() - LN_2
}

/// `sech² s` for complex `s` with `|Im s| < π/2`.
fn sech2_c(s: Complex64) -> Complex64 {
    let s = if s.re < 0.0 { -s } else { s };
    let e = (-2.0 * s).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

fn phi_complex(lambda: Complex64, s: Complex64) -> Complex64 {
    let d = 2.0 * log_cosh_c(s) + lambda;
    let inv = 1.0 / d;
    let inv2 = inv * inv;
    INV_2PI3 * sech2_c(s) * (inv2 + 4.0 * inv2 * inv)
}

/// `φ_λ(s) = (1/2π³) sech²(s) [(2 log cosh s + λ)^{−2} + 4 (2 log cosh s + λ)^{−3}]`.
pub fn phi_lambda(sep: &Separation, s: f64) -> Result<Complex64> {
    let d = 2.0 * ln_cosh(s) + sep.lambda();
    if d.norm() == 0.0 {
        return Err(WormError::Pole(s));
    }
    Ok(phi_complex(sep.lambda(), Complex64::new(s, 0.0)))
}

/// `K_j(z, w)` from the integral representation.
pub fn kernel_j_integral(j: i64, z: Complex64, w: Complex64, tol: f64) -> Result<KernelResult> {
    kernel_j_integral_lambda(j, &Separation::from_points(z, w)?, tol)
}

/// [`kernel_j_integral`] for a given separation.
pub fn kernel_j_integral_lambda(j: i64, sep: &Separation, tol: f64) -> Result<KernelResult> {
    check_tol(tol)?;
    let lam = sep.lambda();
    if lam.re < INTEGRAL_RE_MIN {
        return Err(WormError::SeparationTooSmall {
            re: lam.re,
            min: INTEGRAL_RE_MIN,
        });
    }
    let envelope = |xi: f64| -lam.re * xi - log_alpha_hat(j, xi).unwrap_or(f64::NAN);
    let (peak, cut) = envelope_cutoff(envelope, ENVELOPE_DROP, 1e-4, 1e13)?;
    let integrand = |xi: f64| {
        if xi <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let log_mag = -log_alpha_hat(j, xi).unwrap_or(f64::NAN);
        (-lam * xi + log_mag).exp()
    };
    let mut bps: Vec<f64> = [1.0 / 64.0, 1.0 / 16.0, 0.25, 1.0, 4.0]
        .iter()
        .map(|f| f * peak)
        .chain([0.125, 0.25, 0.5].iter().map(|f| f * cut))
        .collect();
    bps.retain(|&b| b > 0.0 && b < cut);
    let cfg = QuadConfig::new(0.5 * tol).with_tol_abs(0.0);
    let res = integrate_adaptive_with(integrand, 0.0, cut, &bps, &cfg)?;
    let tail = envelope(cut).exp() / lam.re;
    Ok(KernelResult {
        value: res.value / (2.0 * PI),
        err_est: (res.err_est + tail) / (2.0 * PI),
        representation: Representation::Integral,
        diagnostics: KernelDiagnostics::Quadrature {
            nodes: res.nodes_used,
            cutoff: cut,
        },
    })
}

/// `K_j(z, w)` from the Fourier representation; `z`, `w` may lie on the real axis
/// as long as `λ ≠ 0`.
pub fn kernel_j_fourier(j: i64, z: Complex64, w: Complex64, tol: f64) -> Result<KernelResult> {
    kernel_j_fourier_lambda(j, &Separation::from_points(z, w)?, tol)
}

/// [`kernel_j_fourier`] for a given separation.
///
/// For `|j+1| b_λ > 2` the contour is moved to `Im s = −σ` with
/// `σ = sign(j+1)·0.75·b_λ`, inside the strip where `φ_λ` is holomorphic, so
/// the exponentially small result is not obtained by cancellation.
pub fn kernel_j_fourier_lambda(j: i64, sep: &Separation, tol: f64) -> Result<KernelResult> {
    check_tol(tol)?;
    let lam = sep.lambda();
    let k = (j + 1) as f64;
    let b = b_lambda(sep);
    let sigma = if k.abs() * b > 2.0 { k.signum() * 0.75 * b } else { 0.0 };
    let g = |x: f64| {
        let s = Complex64::new(x, -sigma);
        (Complex64::new(0.0, -k) * s).exp() * phi_complex(lam, s)
    };
    let h = |x: f64| g(x) + g(-x);

    let r = lam.norm().sqrt();
    let mut bps: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|f| f * r)
        .chain([0.5, 1.0, 2.0, 4.0, 8.0])
        .collect();
    let cfg = QuadConfig::new(0.5 * tol).with_tol_abs(0.0);

    let mut upper = 20.0;
    bps.retain(|&p| p < upper);
    let first = integrate_adaptive_with(h, 0.0, upper, &bps, &cfg)?;
    let mut value = first.value;
    let mut err = first.err_est;
    let mut nodes = first.nodes_used;
    let damping = (-k * sigma).exp();
    let tail_bound = |x: f64| {
        let m = (2.0 * x - 2.0 * LN_2 - 0.01 + lam.re).max(1.0);
        4.04 * INV_2PI3 * 2.0 * damping * (-2.0 * x).exp() * (1.0 / (m * m) + 4.0 / (m * m * m))
    };
    while tail_bound(upper) > 1e-2 * tol * value.norm() && upper < 350.0 {
        let ext = integrate_adaptive_with(h, upper, 2.0 * upper, &[], &cfg.with_tol_abs(1e-3 * tol * value.norm()))?;
        value += ext.value;
        err += ext.err_est;
        nodes += ext.nodes_used;
        upper *= 2.0;
    }
    Ok(KernelResult {
        value,
        err_est: err + tail_bound(upper),
        representation: Representation::Fourier,
        diagnostics: KernelDiagnostics::Quadrature {
            nodes,
            cutoff: upper,
        },
    })
}

/// `K_j(z, w)` using the integral representation for `Re λ ≥ 0.2` and the
/// Fourier representation otherwise.
pub fn kernel_j(j: i64, z: Complex64, w: Complex64, tol: f64) -> Result<KernelResult> {
    kernel_j_lambda(j, &Separation::from_points(z, w)?, tol)
}

/// [`kernel_j`] for a given separation.
pub fn kernel_j_lambda(j: i64, sep: &Separation, tol: f64) -> Result<KernelResult> {
    if sep.re() >= INTEGRAL_DISPATCH_RE {
        kernel_j_integral_lambda(j, sep, tol)
    } else {
        kernel_j_fourier_lambda(j, sep, tol)
    }
}

/// `I_m(ξ) = ∫_ℝ e^{−iξs} (2 log cosh s)^m sech² s ds` (real, since the integrand is even).
pub fn log_cosh_moment(m: u32, xi: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let mf = m as f64;
    let upper = 40.0 + 3.0 * mf;
    let f = |s: f64| {
        let sech = 2.0 / (s.exp() + (-s).exp());
        let base = 2.0 * ln_cosh(s);
        let pow = if m == 0 { 1.0 } else { base.powi(m as i32) };
        2.0 * (xi * s).cos() * pow * sech * sech
    };
    let bps = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    let cfg = QuadConfig::new(tol).with_tol_abs(1e-300);
    Ok(integrate_adaptive_with(f, 0.0, upper, &bps, &cfg)?.value)
}

/// `ψ_n(ξ) = ((−i)^n (n−1) / 2π³) [I_{n−2}(ξ) − 2(n−2) I_{n−3}(ξ)]` evaluated
/// from the moments for every `n ≥ 2`, including `n = 2`.
pub fn psi_n_quadrature(n: u32, xi: f64) -> Result<Complex64> {
    if n < 2 {
        return Err(WormError::domain(format!("ψ_n needs n >= 2, got {n}")));
    }
    let tol = 1e-13;
    let mut bracket = log_cosh_moment(n - 2, xi, tol)?;
    if n >= 3 {
        bracket -= 2.0 * (n - 2) as f64 * log_cosh_moment(n - 3, xi, tol)?;
    }
    let phase = match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    };
    Ok(phase * ((n - 1) as f64 * INV_2PI3 * bracket))
}

/// `−(1/π³) (ξπ/2) / sinh(ξπ/2)`, with value `−1/π³` at `ξ = 0`.
pub fn psi_2(xi: f64) -> f64 {
    let x = xi * PI / 2.0;
    let ratio = if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else if x.abs() > 700.0 {
        0.0
    } else {
        x / x.sinh()
    };
    -ratio / (PI * PI * PI)
}

type PsiCache = Mutex<HashMap<(u32, u64), Complex64>>;

fn psi_cache() -> &'static PsiCache {
    static CACHE: OnceLock<PsiCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `ψ_n(ξ)`: closed form for `n = 2`, memoized moment quadrature for `n ≥ 3`.
pub fn psi_n(n: u32, xi: f64) -> Result<Complex64> {
    if n < 2 {
        return Err(WormError::domain(format!("ψ_n needs n >= 2, got {n}")));
    }
    if n == 2 {
        return Ok(Complex64::new(psi_2(xi), 0.0));
    }
    // ψ_n is even in ξ up to the real-valued moments, so key on |ξ|.
    let key = (n, xi.abs().to_bits());
    if let Some(v) = psi_cache().lock().unwrap().get(&key) {
        return Ok(*v);
    }
    let v = psi_n_quadrature(n, xi.abs())?;
    psi_cache().lock().unwrap().insert(key, v);
    Ok(v)
}

/// Partial sum `Σ_{n=2}^{N−1} ψ_n(j+1) / (z − w̄)^n` with error estimate
/// `κ |ψ_N(j+1)| / |z − w̄|^N`.
pub fn kernel_j_asymptotic(j: i64, z: Complex64, w: Complex64, order: usize) -> Result<KernelResult> {
    kernel_j_asymptotic_lambda(j, &Separation::from_points(z, w)?, order, ASYMPTOTIC_SAFETY)
}

/// [`kernel_j_asymptotic`] for a given separation and safety factor `κ`.
pub fn kernel_j_asymptotic_lambda(j: i64, sep: &Separation, order: usize, kappa: f64) -> Result<KernelResult> {
    if !(3..=8).contains(&order) {
        return Err(WormError::domain(format!(
            "expansion order must be in 3..=8, got {order}"
        )));
    }
    let k = (j + 1) as f64;
    let zw = sep.z_minus_wbar();
    let mut value = Complex64::new(0.0, 0.0);
    let mut pow = zw * zw;
    for n in 2..order {
        value += psi_n(n as u32, k)? / pow;
        pow *= zw;
    }
    let err_est = kappa * psi_n(order as u32, k)?.norm() / pow.norm();
    Ok(KernelResult {
        value,
        err_est,
        representation: Representation::Asymptotic,
        diagnostics: KernelDiagnostics::Expansion { order },
    })
}

/// Normalized kernel `f_j(λ) = (z − w̄)² K_j = −λ² K_j`, using [`kernel_j_lambda`].
pub fn f_j(j: i64, sep: &Separation, tol: f64) -> Result<KernelResult> {
    let lam = sep.lambda();
    Ok(kernel_j_lambda(j, sep, tol)?.scaled(-lam * lam))
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(WormError::domain(format!("tolerance must be positive, got {tol}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sep(re: f64, im: f64) -> Separation {
        Separation::new(c(re, im)).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn separation_validation() {
        assert!(matches!(Separation::new(c(0.0, 0.0)), Err(WormError::Diagonal)));
        assert!(matches!(Separation::new(c(1e-7, 0.0)), Err(WormError::Diagonal)));
        assert!(Separation::new(c(-0.1, 1.0)).is_err());
        let s = Separation::from_points(c(0.3, 1.0), c(-0.2, 0.5)).unwrap();
        assert!((s.re() - 1.5).abs() < 1e-15);
        assert!(s.is_interior());
        assert!(!Separation::from_points(c(0.3, 0.0), c(-0.2, 0.0)).unwrap().is_interior());
    }

    #[test]
    fn b_lambda_examples() {
        assert!((b_lambda(&sep(4f64.ln(), 0.0)) - PI / 3.0).abs() < 1e-14);
        assert_eq!(b_lambda(&sep(0.0, 10.0)), PI / 2.0);
        let b = b_lambda(&sep(0.1, 0.4));
        assert!((b - (-0.05f64).exp().acos()).abs() < 1e-15);
        assert!((b - 0.313599).abs() < 1e-6);
    }

    #[test]
    fn phi_examples() {
        let s1 = sep(1.0, 0.0);
        let v = phi_lambda(&s1, 0.0).unwrap();
        assert!((v.re - 5.0 * INV_2PI3).abs() < 1e-16);
        assert!((v.re - 0.0806288).abs() < 1e-7);
        for lam in [sep(0.3, 2.0), sep(2.0, -1.0), sep(0.0, 0.7)] {
            for s in [0.1, 1.3, 7.0] {
                assert_eq!(phi_lambda(&lam, s).unwrap(), phi_lambda(&lam, -s).unwrap());
            }
        }
        let s2 = sep(2.0, 0.0);
        let d = 2.0 * ln_cosh(5.0) + 2.0;
        let bound = 4.0 * (-10.0f64).exp() * INV_2PI3 * (1.0 / (d * d) + 4.0 / (d * d * d));
        assert!(phi_lambda(&s2, 5.0).unwrap().norm() <= bound);
    }

    #[test]
    fn integral_reference_values() {
        // 30-digit reference values.
        let cases = [
            (0, sep(2.0, 0.0), c(0.0132525320403428588, 0.0)),
            (0, sep(0.5, 1.0), c(-0.05119088040256469, -0.01960078470029756)),
            (20, sep(1.0, 0.0), c(6.23255195521746236e-8, 0.0)),
            (-30, sep(0.5, 0.3), c(6.37736939786987256e-8, 2.26489982834507308e-8)),
            (40, sep(1.0, 1.0), c(-4.54038760066254279e-18, -8.21368725468652766e-18)),
        ];
        for (j, s, want) in cases {
            let got = kernel_j_integral_lambda(j, &s, 1e-12).unwrap();
            assert!(rel(got.value, want) < 1e-10, "j={j} λ={}: {} vs {want}", s.lambda(), got.value);
            assert_eq!(got.representation, Representation::Integral);
        }
    }

    #[test]
    fn fourier_reference_values() {
        let cases = [
            (0, sep(2.0, 0.0), c(0.0132525320403428588, 0.0)),
            (20, sep(1.0, 0.0), c(6.23255195521746236e-8, 0.0)),
            (-30, sep(0.5, 0.3), c(6.37736939786987256e-8, 2.26489982834507308e-8)),
            (40, sep(1.0, 1.0), c(-4.54038760066254279e-18, -8.21368725468652766e-18)),
            (5, sep(0.05, 0.0), c(105.525794702417865, 0.0)),
            (-1, sep(0.01, 0.0), c(7605.42789132350918, 0.0)),
            (-1, sep(0.0, 0.5), c(-0.316814313981203554, 0.290844828708352675)),
            (2, sep(0.0, 3.0), c(0.000233188260780620964, 0.00102231272420623516)),
        ];
        for (j, s, want) in cases {
            let got = kernel_j_fourier_lambda(j, &s, 1e-12).unwrap();
            assert!(rel(got.value, want) < 1e-9, "j={j} λ={}: {} vs {want}", s.lambda(), got.value);
        }
    }

    #[test]
    fn integral_rejects_small_separation() {
        let err = kernel_j_integral_lambda(0, &sep(1e-4, 1.0), 1e-8).unwrap_err();
        assert!(matches!(err, WormError::SeparationTooSmall { .. }));
    }

    #[test]
    fn fourier_rejects_diagonal() {
        assert!(matches!(
            kernel_j_fourier(0, c(1.0, 0.0), c(1.0, 0.0), 1e-8),
            Err(WormError::Diagonal)
        ));
    }

    #[test]
    fn dispatch_selects_representation() {
        assert_eq!(kernel_j_lambda(0, &sep(0.2, 0.0), 1e-8).unwrap().representation, Representation::Integral);
        assert_eq!(kernel_j_lambda(0, &sep(0.19, 0.0), 1e-8).unwrap().representation, Representation::Fourier);
        assert_eq!(kernel_j_lambda(0, &sep(0.0, 1.0), 1e-8).unwrap().representation, Representation::Fourier);
    }

    #[test]
    fn representations_agree() {
        for j in -4..=3 {
            for (re, im) in [(0.2, 0.0), (0.5, 1.0), (1.0, 5.0), (2.0, -1.0), (5.0, 0.0)] {
                let s = sep(re, im);
                let a = kernel_j_integral_lambda(j, &s, 1e-10).unwrap().value;
                let b = kernel_j_fourier_lambda(j, &s, 1e-10).unwrap().value;
                assert!(rel(a, b) < 1e-8, "j={j} λ={}: {a} vs {b}", s.lambda());
            }
        }
    }

    #[test]
    fn index_symmetry_all_representations() {
        for j in [0, 2, 7] {
            let s = sep(0.7, 0.4);
            let a = kernel_j_integral_lambda(j, &s, 1e-10).unwrap().value;
            let b = kernel_j_integral_lambda(-2 - j, &s, 1e-10).unwrap().value;
            assert_eq!(a, b);
            let a = kernel_j_fourier_lambda(j, &s, 1e-10).unwrap().value;
            let b = kernel_j_fourier_lambda(-2 - j, &s, 1e-10).unwrap().value;
            assert!(rel(a, b) < 1e-9);
            let a = kernel_j_asymptotic_lambda(j, &sep(30.0, 0.0), 5, 1.0).unwrap().value;
            let b = kernel_j_asymptotic_lambda(-2 - j, &sep(30.0, 0.0), 5, 1.0).unwrap().value;
            assert!(rel(a, b) < 1e-12);
        }
    }

    #[test]
    fn psi_examples() {
        let p = psi_n(2, 0.0).unwrap();
        assert!((p.re + 1.0 / PI.powi(3)).abs() < 1e-16);
        assert!((p.re + 0.0322515).abs() < 1e-7);
        let p = psi_n(2, 2.0).unwrap();
        assert!((p.re + 1.0 / (PI * PI * PI.sinh())).abs() < 1e-16);
        assert!((p.re + 0.0087733).abs() < 1e-7);
        let p3 = psi_n(3, 0.0).unwrap();
        let expected = (4.0 * (1.0 - LN_2) - 4.0) / PI.powi(3);
        assert!(p3.re.abs() < 1e-15);
        assert!((p3.im - expected).abs() < 1e-12, "{p3}");
        assert!((p3.im + 0.0894202).abs() < 1e-7);
        assert!(psi_n(1, 0.0).is_err());
    }

    #[test]
    fn moment_at_zero() {
        assert!((log_cosh_moment(0, 0.0, 1e-13).unwrap() - 2.0).abs() < 1e-13);
        assert!((log_cosh_moment(1, 0.0, 1e-13).unwrap() - 4.0 * (1.0 - LN_2)).abs() < 1e-12);
    }

    #[test]
    fn psi_2_closed_form_matches_quadrature() {
        for xi in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let q = psi_n_quadrature(2, xi).unwrap();
            let cf = psi_2(xi);
            assert!(((q.re - cf) / cf).abs() < 1e-10, "ξ={xi}: {} vs {cf}", q.re);
        }
    }

    #[test]
    fn psi_cache_is_transparent() {
        let first = psi_n(5, 1.25).unwrap();
        let again = psi_n(5, 1.25).unwrap();
        let direct = psi_n_quadrature(5, 1.25).unwrap();
        assert_eq!(first, again);
        assert_eq!(first, direct);
    }

    #[test]
    fn asymptotic_single_term() {
        let s = sep(3.0, 2.0);
        let r = kernel_j_asymptotic_lambda(1, &s, 3, 1.0).unwrap();
        let zw = s.z_minus_wbar();
        assert_eq!(r.value, psi_n(2, 2.0).unwrap() / (zw * zw));
        assert!(kernel_j_asymptotic_lambda(1, &s, 2, 1.0).is_err());
        assert!(kernel_j_asymptotic_lambda(1, &s, 9, 1.0).is_err());
    }

    #[test]
    fn large_separation_sign() {
        // K_{−1}(λ=100) is positive: −ψ₂(0)/λ² = +1/(π³ λ²) to leading order.
        let k = kernel_j_integral_lambda(-1, &sep(100.0, 0.0), 1e-10).unwrap().value;
        let lead = 1.0 / (PI.powi(3) * 1e4);
        assert!(k.re > 0.0);
        assert!((k.re - lead).abs() / lead < 0.05);
        let a = kernel_j_asymptotic_lambda(-1, &sep(100.0, 0.0), 3, 1.0).unwrap().value;
        assert!((a.re - lead).abs() < 1e-20);
    }

    #[test]
    fn small_separation_normalized() {
        let mut vals = Vec::new();
        for lam in [1e-2, 1e-3, 1e-4, 1e-5] {
            let f = f_j(-1, &Separation::from_real(lam).unwrap(), 1e-10).unwrap().value;
            vals.push(lam.sqrt() * f.re);
        }
        assert!(vals.iter().all(|v| *v < 0.0));
        assert!((vals[2] + 0.0759915).abs() < 1e-5, "{vals:?}");
    }

    #[test]
    fn bounded_near_diagonal() {
        let mut prev = 0.0;
        for lam in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let k = kernel_j_fourier_lambda(-1, &Separation::from_real(lam).unwrap(), 1e-10).unwrap().value;
            let scaled = lam.powf(2.5) * k.norm();
            assert!(scaled < 1.0);
            assert!(scaled >= prev * 0.5);
            prev = scaled;
        }
    }

    #[test]
    fn root_decay_bound_for_complex_separation() {
        let s = sep(1.0, 1.0);
        let b = b_lambda(&s);
        for k in [20i64, 40, 60] {
            for j in [k - 1, -k - 1] {
                let v = kernel_j_lambda(j, &s, 1e-10).unwrap().value.norm();
                assert!(v.powf(1.0 / k as f64) <= (-0.9 * b).exp(), "j={j}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn hermitian_symmetry(j in -4i64..4, zr in -3.0f64..3.0, zi in 0.1f64..2.0, wr in -3.0f64..3.0, wi in 0.1f64..2.0) {
            let z = c(zr, zi);
            let w = c(wr, wi);
            let a = kernel_j(j, z, w, 1e-11).unwrap().value;
            let b = kernel_j(j, w, z, 1e-11).unwrap().value.conj();
            prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1e-300));
        }

        #[test]
        fn translation_invariance(j in -4i64..4, t in -10.0f64..10.0, zi in 0.1f64..2.0, wi in 0.1f64..2.0) {
            let z = c(0.3, zi);
            let w = c(-0.4, wi);
            let a = kernel_j(j, z, w, 1e-11).unwrap().value;
            let b = kernel_j(j, z + t, w + t, 1e-11).unwrap().value;
            prop_assert!((a - b).norm() <= 1e-10 * a.norm());
        }
    }
}
