//! Executable checks of the function-space statements: the reproducing
//! property of the half-plane kernels, the norm classification of the
//! `F_{η,c,j,m}` family and the divergence probes behind `K(·, w) ∉ L^p, W^s`.

use std::f64::consts::{FRAC_PI_4, LN_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, WormError};
use crate::geometry::{frame, WormPoint};
use crate::halfplane::{b_lambda, kernel_j_fourier_lambda, kernel_j_lambda, Separation};
use crate::quadrature::{integrate_2d, integrate_adaptive_with, Mode2d, QuadConfig, Rect};
use crate::specfun::log_gamma_real;
use crate::weights::alpha;
use crate::worm_kernel::kernel_w;

/// Test functions with known closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleFunction {
    /// The zero function on the half-plane.
    Zero,
    /// `(ζ + ia)^{−b}` on the upper half-plane.
    Rational { a: f64, b: u32 },
    /// `F_{η,c,j,m}(z) = E_η(z) z2^j / (L(z) − c)^m` on the worm.
    FFamily { eta: Complex64, c: f64, j: i64, m: f64 },
}

impl SampleFunction {
    pub fn rational(a: f64, b: u32) -> Result<Self> {
        if !(a > 0.0) || b < 2 {
            return Err(WormError::domain(format!("rational sample needs a > 0, b ≥ 2; got a={a}, b={b}")));
        }
        Ok(SampleFunction::Rational { a, b })
    }

    pub fn f_family(eta: Complex64, c: f64, j: i64, m: f64) -> Result<Self> {
        if !(c > LN_2) {
            return Err(WormError::domain(format!("F family needs c > log 2, got {c}")));
        }
        Ok(SampleFunction::FFamily { eta, c, j, m })
    }

    /// Value at a point of the upper half-plane.
    pub fn eval_halfplane(&self, zeta: Complex64) -> Result<Complex64> {
        match *self {
            SampleFunction::Zero => Ok(Complex64::new(0.0, 0.0)),
            SampleFunction::Rational { a, b } => Ok((zeta + Complex64::new(0.0, a)).powi(-(b as i32))),
            SampleFunction::FFamily { .. } => Err(WormError::domain("F family lives on the worm")),
        }
    }

    /// Value at a point of the worm.
    pub fn eval_worm(&self, z: &WormPoint) -> Result<Complex64> {
        match *self {
            SampleFunction::FFamily { eta, c, j, m } => {
                let f = frame(z)?;
                Ok(f.e(eta) * z.z2.powi(j as i32) / (f.l - c).powf(m))
            }
            _ => Err(WormError::domain("half-plane sample evaluated on the worm")),
        }
    }

    /// Profile `ĝ` with `f(ζ) = (1/2π) ∫_0^∞ ĝ(ξ) e^{iζξ} dξ`; for the rational
    /// kind `ĝ(ξ) = 2π (−i)^b ξ^{b−1} e^{−aξ} / Γ(b)`.
    pub fn spectral_profile(&self, xi: f64) -> Result<Complex64> {
        match *self {
            SampleFunction::Zero => Ok(Complex64::new(0.0, 0.0)),
            SampleFunction::Rational { a, b } => {
                if xi <= 0.0 {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let bf = b as f64;
                let mag = 2.0 * PI * ((bf - 1.0) * xi.ln() - a * xi - log_gamma_real(bf)?).exp();
                Ok(mag * Complex64::new(0.0, -1.0).powi(b as i32))
            }
            SampleFunction::FFamily { .. } => Err(WormError::domain("no spectral profile for the F family")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReproducingReport {
    pub integral: Complex64,
    pub expected: Complex64,
    /// Relative error, or absolute error when `f(w) = 0`.
    pub error: f64,
    pub err_est: f64,
    pub nodes: usize,
}

/// `⟨f, K_j(·, w)⟩_{α_j}` computed by 2D quadrature and compared with `f(w)`.
///
/// The half-plane is mapped onto `(−1, 1) × (0, 1)` by
/// `x = Re w + h t/(1 − t²)`, `v = h τ/(1 − τ)` with `h = Im w + a`.
pub fn reproducing_error(j: i64, f: &SampleFunction, w: Complex64, budget: usize) -> Result<ReproducingReport> {
    reproducing_error_with(j, f, w, budget, Mode2d::Tensor { tol: 1e-6 })
}

/// [`reproducing_error`] with an explicit 2D integration mode.
pub fn reproducing_error_with(
    j: i64,
    f: &SampleFunction,
    w: Complex64,
    budget: usize,
    mode: Mode2d,
) -> Result<ReproducingReport> {
    if !(w.im > 0.0) {
        return Err(WormError::domain(format!("w must be interior, got {w}")));
    }
    let expected = f.eval_halfplane(w)?;
    let scale = match *f {
        SampleFunction::Rational { a, .. } => w.im + a,
        _ => w.im + 1.0,
    };
    let (integral, err_est, nodes) = if matches!(f, SampleFunction::Zero) {
        (Complex64::new(0.0, 0.0), 0.0, 0)
    } else {
        let integrand = |t: f64, tau: f64| -> Complex64 {
            let d = 1.0 - t * t;
            if d <= 0.0 || tau <= 0.0 || tau >= 1.0 {
                return Complex64::new(0.0, 0.0);
            }
            let x = w.re + scale * t / d;
            let v = scale * tau / (1.0 - tau);
            let jac = scale * (1.0 + t * t) / (d * d) * scale / ((1.0 - tau) * (1.0 - tau));
            let zeta = Complex64::new(x, v);
            let (Ok(fz), Ok(sep), Ok(weight)) = (f.eval_halfplane(zeta), Separation::from_points(zeta, w), alpha(j, v)) else {
                return Complex64::new(f64::NAN, 0.0);
            };
            match kernel_j_fourier_lambda(j, &sep, 1e-8) {
                Ok(k) => fz * k.value.conj() * weight * jac,
                Err(_) => Complex64::new(f64::NAN, 0.0),
            }
        };
        let region = Rect { x0: -1.0, x1: 1.0, y0: 0.0, y1: 1.0 };
        let r = integrate_2d(integrand, &region, budget, mode)?;
        if !r.value.re.is_finite() || !r.value.im.is_finite() {
            return Err(WormError::Nonconvergence {
                partial: f64::NAN,
                err_est: f64::INFINITY,
                nodes: r.nodes_used,
            });
        }
        (r.value, r.err_est, r.nodes_used)
    };
    let abs = (integral - expected).norm();
    let error = if expected.norm() > 0.0 { abs / expected.norm() } else { abs };
    Ok(ReproducingReport {
        integral,
        expected,
        error,
        err_est,
        nodes,
    })
}

/// One entry of a cutoff or `δ` ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderEntry {
    /// Cutoff `R` for norm ladders, lower endpoint `δ` for probes.
    pub cutoff: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormOutcome {
    Finite {
        value: f64,
        err_est: f64,
        partials: Vec<LadderEntry>,
    },
    Divergent {
        partials: Vec<LadderEntry>,
    },
}

impl NormOutcome {
    pub fn is_finite(&self) -> bool {
        matches!(self, NormOutcome::Finite { .. })
    }

    pub fn partials(&self) -> &[LadderEntry] {
        match self {
            NormOutcome::Finite { partials, .. } | NormOutcome::Divergent { partials } => partials,
        }
    }
}

/// Ladder exponents: the cutoffs are `R_k = e^{2^k}`.
const NORM_LADDER_STEPS: u32 = 6;
const PLATEAU_TOL: f64 = 1e-3;
const GROWTH_STEP: f64 = 1.2;
const GROWTH_TOTAL: f64 = 10.0;
/// Exponents beyond this are treated as overflow of the partial integral.
const EXP_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy)]
struct NormParams {
    ks: f64,
    kt: f64,
    k: f64,
    c: f64,
    m: f64,
    mu: f64,
    tol: f64,
}

fn geometric_breaks(lo: f64, hi: f64, anchor: f64, width: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut d = width.max(1e-3);
    while d < (hi - lo) {
        for p in [anchor - d, anchor + d] {
            if p > lo && p < hi {
                out.push(p);
            }
        }
        d *= 2.0;
    }
    out.sort_by(f64::total_cmp);
    out
}

/// `∫∫ e^{−kθ} e^{κ_t t} / [(s−c)² + t²]^m dt dθ` over `|θ| < arccos(e^s/2)`, `|t − θ| < μ`.
fn strip_section(p: &NormParams, s: f64) -> Result<f64> {
    let half = (0.5 * s.exp()).min(1.0).acos();
    if half <= 0.0 {
        return Ok(0.0);
    }
    let d2 = (s - p.c) * (s - p.c);
    let cfg = QuadConfig::new(0.1 * p.tol).with_tol_abs(0.0);
    let inner = |theta: f64| -> f64 {
        let g = |t: f64| (p.kt * t).exp() / (d2 + t * t).powf(p.m);
        integrate_adaptive_with(g, theta - p.mu, theta + p.mu, &[], &cfg)
            .map(|r| (-p.k * theta).exp() * r.value)
            .unwrap_or(f64::NAN)
    };
    let r = integrate_adaptive_with(inner, -half, half, &[], &cfg)?;
    Ok(r.value)
}

/// `∫_{|θ| < A} e^{−kθ} dθ`.
fn angular_factor(k: f64, half: f64) -> f64 {
    if k == 0.0 {
        2.0 * half
    } else {
        2.0 * (k * half).sinh() / k
    }
}

fn full_section(p: &NormParams, s: f64, cutoff: f64) -> Result<f64> {
    let half = (0.5 * s.exp()).min(1.0).acos();
    if half <= 0.0 {
        return Ok(0.0);
    }
    let w = (s - p.c).abs();
    let d2 = w * w;
    let g = |t: f64| (p.kt * t).exp() / (d2 + t * t).powf(p.m);
    let bps = geometric_breaks(-cutoff, cutoff, 0.0, w);
    let cfg = QuadConfig::new(0.1 * p.tol).with_tol_abs(0.0);
    let r = integrate_adaptive_with(g, -cutoff, cutoff, &bps, &cfg)?;
    Ok(angular_factor(p.k, half) * r.value)
}

fn s_integral<F: Fn(f64) -> Result<f64> + Sync>(p: &NormParams, lo: f64, hi: f64, section: F) -> Result<f64> {
    if p.ks < 0.0 && p.ks * lo > EXP_LIMIT {
        return Ok(f64::INFINITY);
    }
    let failed = std::sync::Mutex::new(None);
    let g = |s: f64| match section(s) {
        Ok(v) => (p.ks * s).exp() * v,
        Err(e) => {
            failed.lock().unwrap().get_or_insert(e);
            0.0
        }
    };
    let bps = geometric_breaks(lo, hi, 0.0, 1.0);
    let cfg = QuadConfig::new(p.tol).with_tol_abs(0.0).with_budget(2_000_000);
    let r = integrate_adaptive_with(g, lo, hi, &bps, &cfg);
    if let Some(e) = failed.into_inner().unwrap() {
        return Err(e);
    }
    let v = PI * r?.value;
    Ok(if v.is_finite() { v } else { f64::INFINITY })
}

/// `‖F_{η,c,j,m}‖²` on `𝒲_μ` (`mu = ∞` for the full worm), from the reduced integral
/// `π ∫_{−π/2}^{π/2} ∫_{θ−μ}^{θ+μ} ∫_{−∞}^{log(2cos θ)} e^{2(a+1)s} e^{t(j+1−2b)} e^{−θ(j+1)} / [(s−c)² + t²]^m ds dt dθ`,
/// `η = a + ib`, evaluated over the cutoffs `s ≥ −R_k` (and `|t| ≤ R_k` when `μ = ∞`).
pub fn sample_norm(eta: Complex64, c: f64, j: i64, m: f64, mu: f64, tol: f64) -> Result<NormOutcome> {
    if !(c > LN_2) {
        return Err(WormError::domain(format!("c must exceed log 2, got {c}")));
    }
    if !(mu > 0.0) {
        return Err(WormError::domain(format!("μ must be positive, got {mu}")));
    }
    if !(tol > 0.0) || !m.is_finite() {
        return Err(WormError::domain("tolerance must be positive and m finite"));
    }
    let k = (j + 1) as f64;
    let p = NormParams {
        ks: 2.0 * (eta.re + 1.0),
        kt: k - 2.0 * eta.im,
        k,
        c,
        m,
        mu,
        tol,
    };
    let cutoffs: Vec<f64> = (0..=NORM_LADDER_STEPS).map(|i| 2f64.powi(i as i32).exp()).collect();

    let values: Vec<f64> = if mu.is_finite() {
        let pieces: Vec<Result<f64>> = (0..cutoffs.len())
            .into_par_iter()
            .map(|i| {
                let hi = if i == 0 { LN_2 } else { -cutoffs[i - 1] };
                s_integral(&p, -cutoffs[i], hi, |s| strip_section(&p, s))
            })
            .collect();
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(pieces.len());
        for piece in pieces {
            acc += piece?;
            out.push(acc);
        }
        out
    } else {
        let parts: Vec<Result<f64>> = cutoffs
            .par_iter()
            .map(|&r| {
                if p.kt != 0.0 && p.kt.abs() * r > EXP_LIMIT {
                    return Ok(f64::INFINITY);
                }
                s_integral(&p, -r, LN_2, |s| full_section(&p, s, r))
            })
            .collect();
        parts.into_iter().collect::<Result<_>>()?
    };

    let mut partials: Vec<LadderEntry> = Vec::new();
    for (&cutoff, &value) in cutoffs.iter().zip(&values) {
        partials.push(LadderEntry { cutoff, value });
        if !value.is_finite() {
            break;
        }
    }
    classify(partials)
}

fn classify(partials: Vec<LadderEntry>) -> Result<NormOutcome> {
    let v: Vec<f64> = partials.iter().map(|e| e.value).collect();
    let n = v.len();
    let growing = n >= 3
        && v[0] > 0.0
        && v.windows(2).skip(1).all(|w| w[1] > GROWTH_STEP * w[0])
        && v[n - 1] > GROWTH_TOTAL * v[0];
    if growing {
        return Ok(NormOutcome::Divergent { partials });
    }
    if n >= 3 && v[n - 1].is_finite() && v[n - 2] > 0.0 && (v[n - 1] / v[n - 2] - 1.0).abs() < PLATEAU_TOL {
        return Ok(NormOutcome::Finite {
            value: v[n - 1],
            err_est: (v[n - 1] - v[n - 2]).abs(),
            partials,
        });
    }
    Err(WormError::Inconclusive(format!(
        "neither plateau nor growth over the cutoff ladder: {v:?}"
    )))
}

/// Integral probed by [`divergence_probe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeKind {
    /// `∫ r^{1−p} [(log(r/2) + c1)² + c2]^{−p} dr`, `p > 2`.
    Lp(f64),
    /// The same integral at `p = 2`, which converges.
    L2,
    /// `∫∫ |r − 2cos t|^{−s} r^{−1−s} [(log(r/2) + c1)² + c2]^{−2} dr dt`, `0 < s < 1/2`.
    Sobolev(f64),
}

/// Constants of the probe integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    /// Truncation parameter of `𝒲_μ`; enters through `c2 = (π + 2μ)²`.
    pub mu: f64,
    /// Upper endpoint of the radial integral.
    pub epsilon: f64,
    /// Angular range of the Sobolev probe.
    pub angle: (f64, f64),
    pub tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            mu: 1.0,
            epsilon: 0.5,
            angle: (-FRAC_PI_4, FRAC_PI_4),
            tol: 1e-10,
        }
    }
}

/// Partial integrals over `[δ, ε]` for each `δ` of a decreasing ladder, with
/// `c1 = log(|w1|/2)` and `c2 = (π + 2μ)²`.
pub fn divergence_probe(kind: ProbeKind, w: &WormPoint, ladder: &[f64], cfg: &ProbeConfig) -> Result<Vec<LadderEntry>> {
    match kind {
        ProbeKind::Lp(p) if !(p > 2.0) => return Err(WormError::domain(format!("Lp probe needs p > 2, got {p}"))),
        ProbeKind::Sobolev(s) if !(s > 0.0 && s < 0.5) => {
            return Err(WormError::domain(format!("Sobolev probe needs 0 < s < 1/2, got {s}")))
        }
        _ => {}
    }
    if ladder.is_empty()
        || ladder.iter().any(|&d| !(d > 0.0))
        || ladder.windows(2).any(|w| w[1] >= w[0])
        || ladder[0] >= cfg.epsilon
    {
        return Err(WormError::domain("ladder must be positive, strictly decreasing and below ε"));
    }
    let c1 = (w.z1.norm() / 2.0).ln();
    let c2 = (PI + 2.0 * cfg.mu).powi(2);
    let bracket = move |u: f64| (u - LN_2 + c1).powi(2) + c2;
    let (a0, a1) = cfg.angle;
    let qcfg = QuadConfig::new(cfg.tol).with_tol_abs(0.0);

    // Integrand in u = log r, including the Jacobian r.
    let radial = |u: f64| -> f64 {
        match kind {
            ProbeKind::Lp(p) => ((2.0 - p) * u).exp() / bracket(u).powf(p),
            ProbeKind::L2 => 1.0 / bracket(u).powi(2),
            ProbeKind::Sobolev(s) => {
                let r = u.exp();
                let ang = integrate_adaptive_with(|t: f64| (r - 2.0 * t.cos()).abs().powf(-s), a0, a1, &[], &qcfg)
                    .map(|q| q.value)
                    .unwrap_or(f64::NAN);
                (-s * u).exp() / bracket(u).powi(2) * ang
            }
        }
    };

    let mut edges = vec![cfg.epsilon.ln()];
    edges.extend(ladder.iter().map(|d| d.ln()));
    let pieces: Vec<Result<f64>> = edges
        .windows(2)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|e| {
            let bps: Vec<f64> = ((e[1].ceil() as i64)..=(e[0].floor() as i64))
                .map(|x| x as f64)
                .filter(|&x| x > e[1] && x < e[0])
                .collect();
            integrate_adaptive_with(radial, e[1], e[0], &bps, &qcfg).map(|r| r.value)
        })
        .collect();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(ladder.len());
    for (&delta, piece) in ladder.iter().zip(pieces) {
        acc += piece?;
        out.push(LadderEntry { cutoff: delta, value: acc });
    }
    Ok(out)
}

/// Parses a decade ladder `hi:lo` such as `1e-2:1e-8` into `hi, hi/10, …, lo`.
pub fn decade_ladder(hi: f64, lo: f64) -> Result<Vec<f64>> {
    if !(hi > 0.0 && lo > 0.0 && lo < hi) {
        return Err(WormError::domain(format!("ladder needs 0 < lo < hi, got {hi}:{lo}")));
    }
    let (eh, el) = (hi.log10(), lo.log10());
    let n = (eh - el).round() as i32;
    Ok((0..=n).map(|i| 10f64.powf(eh - i as f64)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub b_lambda: f64,
    /// Least-squares slope of `log|K_j|` against `|j+1|` for `j + 1 > 0`.
    pub rate_plus: f64,
    /// The same for `j + 1 < 0`.
    pub rate_minus: f64,
    /// `|K_j|^{1/|j+1|}` at the largest `|j+1|` used.
    pub root_at_max: f64,
    /// Samples `(|j+1|, log|K_j|)` of the positive direction.
    pub samples: Vec<(f64, f64)>,
}

/// Magnitudes below this end the fit.
const UNDERFLOW_GUARD: f64 = 1e-280;

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn fit_direction(sep: &Separation, k_lo: u32, k_hi: u32, sign: i64) -> Result<Vec<(f64, f64)>> {
    let vals: Vec<Result<(f64, f64)>> = (k_lo..=k_hi)
        .into_par_iter()
        .map(|k| {
            let j = sign * k as i64 - 1;
            let v = kernel_j_lambda(j, sep, 1e-8)?.value.norm();
            Ok((k as f64, v))
        })
        .collect();
    let mut out = Vec::new();
    for v in vals {
        let (k, m) = v?;
        if m < UNDERFLOW_GUARD {
            break;
        }
        out.push((k, m.ln()));
    }
    if out.len() < 2 {
        return Err(WormError::Inconclusive("fewer than two usable terms in the decay fit".into()));
    }
    Ok(out)
}

/// Fitted decay rate of `log|K_j(λ)|` over `k_lo ≤ |j+1| ≤ k_hi`, both directions.
pub fn decay_fit(sep: &Separation, k_lo: u32, k_hi: u32) -> Result<DecayFit> {
    if k_lo == 0 || k_hi <= k_lo {
        return Err(WormError::domain("decay fit needs 0 < k_lo < k_hi"));
    }
    let plus = fit_direction(sep, k_lo, k_hi, 1)?;
    let minus = fit_direction(sep, k_lo, k_hi, -1)?;
    let &(k_last, l_last) = plus.last().unwrap();
    Ok(DecayFit {
        b_lambda: b_lambda(sep),
        rate_plus: slope(&plus),
        rate_minus: slope(&minus),
        root_at_max: (l_last / k_last).exp(),
        samples: plus,
    })
}

/// [`decay_fit`] over `|j+1| ∈ [j_max/2, j_max]` for the pair `(z1, w1)`.
pub fn decay_estimate(z1: Complex64, w1: Complex64, j_max: u32) -> Result<DecayFit> {
    let sep = Separation::from_points(z1, w1)?;
    decay_fit(&sep, (j_max / 2).max(1), j_max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramReport {
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub trace: f64,
}

/// Spectrum of the Gram matrix `[K_𝒲(z_i, z_k)]`.
pub fn gram_spectrum(points: &[WormPoint], tol: f64) -> Result<GramReport> {
    let n = points.len();
    if n == 0 {
        return Err(WormError::domain("empty point set"));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |k| (i, k))).collect();
    let vals: Vec<Result<Complex64>> = pairs
        .par_iter()
        .map(|&(i, k)| kernel_w(&points[i], &points[k], tol).map(|r| r.value))
        .collect();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for (&(i, k), v) in pairs.iter().zip(vals) {
        let v = v?;
        if i == k {
            m[(i, i)] = Complex64::new(v.re, 0.0);
        } else {
            m[(i, k)] = v;
            m[(k, i)] = v.conj();
        }
    }
    let trace = (0..n).map(|i| m[(i, i)].re).sum();
    let mut eigenvalues: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(GramReport {
        min_eigenvalue: eigenvalues[0],
        eigenvalues,
        trace,
    })
}
