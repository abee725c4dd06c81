//! Bergman kernels of `𝒰` and `𝒲` as Fourier series in the rotation index,
//!
//! `K_𝒰(z, w) = (z2 w̄2)^{−1} Σ_j K_j(z1, w1) ζ^{j+1}`, `ζ = e^{−(z1 + w̄1)/2} z2 w̄2`,
//!
//! and the boundary profile `g` that governs the normalized kernels near infinity
//! (for `𝒰`) and near the critical annulus (for `𝒲`).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, WormError};
use crate::geometry::{frame, in_unwound, in_worm, UPoint, WormPoint};
use crate::halfplane::{b_lambda, kernel_j_lambda, Separation};

/// Hard limit on the number of terms per direction.
pub const TERM_CAP: usize = 400;
/// Number of trailing terms used for the empirical ratio.
pub const RATIO_WINDOW: usize = 3;
/// Terms evaluated concurrently per batch.
const BATCH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Relative tolerance on the series value.
    pub tol: f64,
    pub term_cap: usize,
    pub ratio_window: usize,
}

impl TruncationPolicy {
    pub fn new(tol: f64) -> Self {
        TruncationPolicy {
            tol,
            term_cap: TERM_CAP,
            ratio_window: RATIO_WINDOW,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesDiagnostics {
    pub j_min: i64,
    pub j_max: i64,
    /// Bound on the discarded terms, both directions together.
    pub tail_bound: f64,
    /// Number of component kernels evaluated.
    pub terms: usize,
}

impl SeriesDiagnostics {
    /// Largest `|j+1|` reached in either direction.
    pub fn half_width(&self) -> usize {
        (self.j_max + 1).max(-(self.j_min + 1)).max(0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesResult {
    pub value: Complex64,
    pub err_est: f64,
    pub diagnostics: SeriesDiagnostics,
}

/// Separation, `log ζ` and prefactor of one series.
#[derive(Debug, Clone, Copy)]
struct SeriesData {
    sep: Separation,
    log_zeta: Complex64,
    prefactor: Complex64,
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(WormError::domain(format!("tolerance must be positive, got {tol}")))
    }
}

fn principal_ln(z: Complex64) -> Result<Complex64> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(WormError::domain("second coordinate must be nonzero"));
    }
    Ok(z.ln())
}

fn u_series(z: &UPoint, w: &UPoint) -> Result<SeriesData> {
    for p in [z, w] {
        if !in_unwound(p) {
            return Err(WormError::Membership(format!(
                "({}, {}) is not in the unwound domain",
                p.w1, p.w2
            )));
        }
    }
    let sep = Separation::from_points(z.w1, w.w1)?;
    let log_zeta = -0.5 * (z.w1 + w.w1.conj()) + principal_ln(z.w2)? + principal_ln(w.w2)?.conj();
    Ok(SeriesData {
        sep,
        log_zeta,
        prefactor: 1.0 / (z.w2 * w.w2.conj()),
    })
}

fn w_series(z: &WormPoint, w: &WormPoint) -> Result<SeriesData> {
    for p in [z, w] {
        if !in_worm(p) {
            return Err(WormError::Membership(format!(
                "({}, {}) is not in the worm domain",
                p.z1, p.z2
            )));
        }
    }
    let (fz, fw) = (frame(z)?, frame(w)?);
    let sep = Separation::from_points(fz.ell, fw.ell)?;
    let half_i = Complex64::new(0.0, 0.5);
    let log_zeta = half_i * fz.l + principal_ln(z.z2)? + (half_i * fw.l + principal_ln(w.z2)?).conj();
    Ok(SeriesData {
        sep,
        log_zeta,
        prefactor: 1.0 / (z.z1 * w.z1.conj() * z.z2 * w.z2.conj()),
    })
}

/// Per-direction state of the summation.
struct Direction {
    sign: f64,
    sum: Complex64,
    mags: Vec<f64>,
    done: bool,
    tail: f64,
}

impl Direction {
    fn new(sign: f64) -> Self {
        Direction {
            sign,
            sum: Complex64::new(0.0, 0.0),
            mags: Vec::new(),
            done: false,
            tail: f64::INFINITY,
        }
    }

    /// Geometric ratio estimate: the larger of the empirical ratio over the
    /// trailing window and the theoretical rate.
    fn ratio(&self, window: usize, theoretical: f64) -> f64 {
        let n = self.mags.len();
        let last = &self.mags[n - window - 1..];
        let empirical = if last[0] > 0.0 && last[window] > 0.0 {
            (last[window] / last[0]).powf(1.0 / window as f64)
        } else {
            0.0
        };
        empirical.max(theoretical)
    }
}

/// Floor on the relative accuracy requested from a single component kernel.
const TERM_TOL_FLOOR: f64 = 1e-14;

fn sum_series(data: &SeriesData, policy: &TruncationPolicy) -> Result<SeriesResult> {
    check_tol(policy.tol)?;
    // Cancellation between terms can amplify the component errors, so the
    // component tolerance is tightened until their total fits the budget.
    let mut term_tol = 0.1 * policy.tol;
    loop {
        let r = sum_series_at(data, policy, term_tol)?;
        let quad = r.err_est - r.diagnostics.tail_bound;
        let budget = 0.5 * policy.tol * r.value.norm();
        if quad <= budget || term_tol <= TERM_TOL_FLOOR {
            return Ok(r);
        }
        term_tol = (term_tol * budget / quad * 0.5).max(TERM_TOL_FLOOR);
    }
}

fn sum_series_at(data: &SeriesData, policy: &TruncationPolicy, term_tol: f64) -> Result<SeriesResult> {
    let b = b_lambda(&data.sep);
    let ln_mod = data.log_zeta.re;
    let theory = [(-b + ln_mod).exp(), (-b - ln_mod).exp()];

    let k0 = kernel_j_lambda(-1, &data.sep, term_tol)?;
    let center = k0.value;
    let mut quad_err = k0.err_est;
    let mut dirs = [Direction::new(1.0), Direction::new(-1.0)];
    let mut terms = 1;
    let mut k_done = 0usize;

    while !(dirs[0].done && dirs[1].done) {
        if k_done >= policy.term_cap {
            let ratio = dirs
                .iter()
                .filter(|d| !d.done && d.mags.len() > policy.ratio_window)
                .map(|d| d.ratio(policy.ratio_window, 0.0))
                .fold(0.0, f64::max);
            return Err(WormError::NearSingularSet {
                terms: policy.term_cap,
                ratio,
            });
        }
        let ks: Vec<usize> = (k_done + 1..=(k_done + BATCH).min(policy.term_cap)).collect();
        // K_{k−1} = K_{−k−1}, so one evaluation serves both directions.
        let batch: Vec<Result<_>> = ks
            .par_iter()
            .map(|&k| kernel_j_lambda(k as i64 - 1, &data.sep, term_tol))
            .collect();
        for (&k, kr) in ks.iter().zip(batch) {
            let kr = kr?;
            terms += 1;
            k_done = k;
            for (d, th) in dirs.iter_mut().zip(theory) {
                if d.done {
                    continue;
                }
                let t = kr.value * (d.sign * k as f64 * data.log_zeta).exp();
                d.sum += t;
                d.mags.push(t.norm());
                quad_err += kr.err_est * (d.sign * k as f64 * data.log_zeta.re).exp();
                if d.mags.len() > policy.ratio_window {
                    let r = d.ratio(policy.ratio_window, th);
                    if r < 1.0 {
                        // The window maximum guards against a single term sitting in a
                        // dip of the oscillating magnitudes.
                        let n = d.mags.len();
                        let last = d.mags[n - policy.ratio_window - 1..].iter().fold(0.0f64, |m, &x| m.max(x));
                        d.tail = last * r / (1.0 - r);
                    }
                }
            }
            // Convergence is judged against the current total.
            let total = center + dirs[0].sum + dirs[1].sum;
            for d in dirs.iter_mut() {
                if !d.done && d.tail.is_finite() && d.tail <= 0.25 * policy.tol * total.norm() {
                    d.done = true;
                }
            }
            if dirs[0].done && dirs[1].done {
                break;
            }
        }
    }

    let sum = center + dirs[0].sum + dirs[1].sum;
    let tail = dirs[0].tail + dirs[1].tail;
    let value = data.prefactor * sum;
    let scale = data.prefactor.norm();
    Ok(SeriesResult {
        value,
        err_est: scale * (tail + quad_err),
        diagnostics: SeriesDiagnostics {
            j_min: -(dirs[1].mags.len() as i64) - 1,
            j_max: dirs[0].mags.len() as i64 - 1,
            tail_bound: scale * tail,
            terms,
        },
    })
}

fn sum_fixed_window(data: &SeriesData, k_max: usize, tol: f64) -> Result<Complex64> {
    check_tol(tol)?;
    let vals: Vec<Result<Complex64>> = (0..=k_max)
        .into_par_iter()
        .map(|k| {
            let kv = kernel_j_lambda(k as i64 - 1, &data.sep, tol)?.value;
            if k == 0 {
                return Ok(kv);
            }
            let kf = k as f64;
            Ok(kv * ((kf * data.log_zeta).exp() + (-kf * data.log_zeta).exp()))
        })
        .collect();
    let mut sum = Complex64::new(0.0, 0.0);
    for v in vals {
        sum += v?;
    }
    Ok(data.prefactor * sum)
}

/// `K_𝒰(z, w)` with an a-posteriori truncation bound.
pub fn kernel_u(z: &UPoint, w: &UPoint, tol: f64) -> Result<SeriesResult> {
    sum_series(&u_series(z, w)?, &TruncationPolicy::new(tol))
}

/// [`kernel_u`] with an explicit truncation policy.
pub fn kernel_u_with(z: &UPoint, w: &UPoint, policy: &TruncationPolicy) -> Result<SeriesResult> {
    sum_series(&u_series(z, w)?, policy)
}

/// `K_𝒰(z, w)` summed over the fixed window `|j+1| ≤ k_max`.
pub fn kernel_u_window(z: &UPoint, w: &UPoint, k_max: usize, tol: f64) -> Result<Complex64> {
    sum_fixed_window(&u_series(z, w)?, k_max, tol)
}

/// `K_𝒲(z, w)` with an a-posteriori truncation bound.
pub fn kernel_w(z: &WormPoint, w: &WormPoint, tol: f64) -> Result<SeriesResult> {
    sum_series(&w_series(z, w)?, &TruncationPolicy::new(tol))
}

/// [`kernel_w`] with an explicit truncation policy.
pub fn kernel_w_with(z: &WormPoint, w: &WormPoint, policy: &TruncationPolicy) -> Result<SeriesResult> {
    sum_series(&w_series(z, w)?, policy)
}

/// `K_𝒲(z, w)` summed over the fixed window `|j+1| ≤ k_max`.
pub fn kernel_w_window(z: &WormPoint, w: &WormPoint, k_max: usize, tol: f64) -> Result<Complex64> {
    sum_fixed_window(&w_series(z, w)?, k_max, tol)
}

/// `K_𝒲` on `𝒲_{π/2} × 𝒲_{π/2}` in the form that uses the principal
/// logarithm of `z1` directly: arguments `−i log(z1/2)` and factors `z1^{i/2}`.
pub fn kernel_w_half_pi(z: &WormPoint, w: &WormPoint, tol: f64) -> Result<SeriesResult> {
    for p in [z, w] {
        if !in_worm(p) || p.rotation().abs() >= PI / 2.0 {
            return Err(WormError::Membership(format!(
                "({}, {}) is not in the worm truncated at π/2",
                p.z1, p.z2
            )));
        }
    }
    let minus_i = Complex64::new(0.0, -1.0);
    let half_i = Complex64::new(0.0, 0.5);
    let (lz, lw) = (principal_ln(z.z1)?, principal_ln(w.z1)?);
    let a = minus_i * (lz - std::f64::consts::LN_2);
    let b = minus_i * (lw - std::f64::consts::LN_2);
    let data = SeriesData {
        sep: Separation::from_points(a, b)?,
        log_zeta: half_i * lz + principal_ln(z.z2)? + (half_i * lw + principal_ln(w.z2)?).conj(),
        prefactor: 1.0 / (z.z1 * w.z1.conj() * z.z2 * w.z2.conj()),
    };
    sum_series(&data, &TruncationPolicy::new(tol))
}

/// `G(z, w) = z2 w̄2 (z1 − w̄1)² K_𝒰(z, w)`.
pub fn normalized_kernel_u(z: &UPoint, w: &UPoint, tol: f64) -> Result<SeriesResult> {
    let k = kernel_u(z, w, tol)?;
    let d = z.w1 - w.w1.conj();
    Ok(scale(k, z.w2 * w.w2.conj() * d * d))
}

/// `H(z, w) = z1 w̄1 z2 w̄2 (ℓ(z) − conj ℓ(w))² K_𝒲(z, w)`.
pub fn normalized_kernel_w(z: &WormPoint, w: &WormPoint, tol: f64) -> Result<SeriesResult> {
    let k = kernel_w(z, w, tol)?;
    let d = frame(z)?.ell - frame(w)?.ell.conj();
    Ok(scale(k, z.z1 * w.z1.conj() * z.z2 * w.z2.conj() * d * d))
}

fn scale(mut r: SeriesResult, f: Complex64) -> SeriesResult {
    let m = f.norm();
    r.value *= f;
    r.err_est *= m;
    r.diagnostics.tail_bound *= m;
    r
}

/// `ζ` of the `𝒰` series, `e^{−(z1 + w̄1)/2} z2 w̄2`.
pub fn rotation_factor_u(z: &UPoint, w: &UPoint) -> Complex64 {
    (-0.5 * (z.w1 + w.w1.conj())).exp() * z.w2 * w.w2.conj()
}

/// `ζ` of the `𝒲` series, `E_{i/2}(z) z2 conj(E_{i/2}(w) w2)`.
pub fn rotation_factor_w(z: &WormPoint, w: &WormPoint) -> Result<Complex64> {
    let half_i = Complex64::new(0.0, 0.5);
    Ok(frame(z)?.e(half_i) * z.z2 * (frame(w)?.e(half_i) * w.z2).conj())
}

/// Result of a boundary-profile evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileResult {
    pub value: Complex64,
    pub err_est: f64,
    /// Highest power of ζ (series route) or number of pole pairs (split route).
    pub terms: usize,
}

/// Largest number of terms the series route may use before reporting that
/// `ζ` is too close to the edge of the annulus.
const PROFILE_TERM_CAP: usize = 1_000_000;

fn profile_rho(zeta: Complex64) -> Result<f64> {
    let m = zeta.norm();
    if !(m > 0.0) || !m.is_finite() {
        return Err(WormError::AnnulusMargin { modulus: m });
    }
    let rho = m.max(1.0 / m);
    if rho.ln() >= PI / 2.0 {
        return Err(WormError::AnnulusMargin { modulus: m });
    }
    Ok(rho)
}

/// `g(ζ) = (1/π³) Σ_{k∈ℤ} (kπ/2)/sinh(kπ/2) ζ^k` on `e^{−π/2} < |ζ| < e^{π/2}`,
/// summed directly with a geometric tail bound.
pub fn g_boundary(zeta: Complex64, tol: f64) -> Result<ProfileResult> {
    check_tol(tol)?;
    let rho = profile_rho(zeta)?;
    let q = rho * (-PI / 2.0).exp();
    // c_k ≤ kπ e^{−kπ/2} / (1 − e^{−π}), so each direction's tail after n terms
    // is at most C Σ_{k>n} k q^k.
    let c = PI / (1.0 - (-PI).exp());
    let tail = |n: f64| 2.0 * c * q.powf(n + 1.0) * ((n + 1.0) - n * q) / ((1.0 - q) * (1.0 - q));
    let inv = 1.0 / zeta;
    let mut sum = Complex64::new(1.0, 0.0);
    let mut zp = Complex64::new(1.0, 0.0);
    let mut zm = Complex64::new(1.0, 0.0);
    let mut k = 0usize;
    loop {
        k += 1;
        if k > PROFILE_TERM_CAP {
            return Err(WormError::AnnulusMargin { modulus: zeta.norm() });
        }
        zp *= zeta;
        zm *= inv;
        let x = k as f64 * PI / 2.0;
        let coef = x / x.sinh();
        sum += coef * (zp + zm);
        let t = tail(k as f64);
        if t <= tol * sum.norm() || (coef == 0.0 && t == 0.0) {
            let s = 1.0 / (PI * PI * PI);
            return Ok(ProfileResult {
                value: s * sum,
                err_est: s * t,
                terms: k,
            });
        }
    }
}

/// `g(ζ)` from its pole decomposition
/// `(1/π³)[1 + π Σ_{m≥0} (q_m ζ/(1 − q_m ζ)² + q_m ζ^{−1}/(1 − q_m ζ^{−1})²)]`,
/// `q_m = e^{−(m+½)π}`. The `m = 0` pair is the singular part at `|ζ| = e^{±π/2}`.
pub fn g_boundary_split(zeta: Complex64, tol: f64) -> Result<ProfileResult> {
    check_tol(tol)?;
    let rho = profile_rho(zeta)?;
    let inv = 1.0 / zeta;
    let term = |q: f64, x: Complex64| q * x / ((1.0 - q * x) * (1.0 - q * x));
    let mut sum = Complex64::new(0.0, 0.0);
    let mut m = 0usize;
    loop {
        let q = (-(m as f64 + 0.5) * PI).exp();
        sum += term(q, zeta) + term(q, inv);
        m += 1;
        let qn = (-(m as f64 + 0.5) * PI).exp();
        let x = qn * rho;
        let tail = 2.0 * x / ((1.0 - x) * (1.0 - x)) / (1.0 - (-PI).exp());
        let total = 1.0 + PI * sum;
        if PI * tail <= tol * total.norm() || m > 400 {
            let s = 1.0 / (PI * PI * PI);
            return Ok(ProfileResult {
                value: s * total,
                err_est: s * PI * tail,
                terms: m,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{map_phi, sample_u_point, sample_worm_point};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn profile_examples() {
        for z in [c(0.9, 0.0), c(1.0, 0.0), c(1.3, 0.0), Complex64::from_polar(0.4f64.exp(), 0.7)] {
            let a = g_boundary(z, 1e-14).unwrap();
            let b = g_boundary_split(z, 1e-14).unwrap();
            assert!((a.value - b.value).norm() <= 1e-12 * b.value.norm(), "{z}: {} vs {}", a.value, b.value);
            let r = g_boundary(1.0 / z, 1e-14).unwrap();
            assert!((r.value - a.value).norm() <= 1e-13 * a.value.norm());
        }
    }

    #[test]
    fn profile_reference_values() {
        let a = g_boundary(c(0.5, 0.0), 1e-15).unwrap().value;
        assert!((a.re - 0.171229698548441019).abs() < 1e-15 && a.im.abs() < 1e-16);
        let b = g_boundary(c(1.3, 0.4), 1e-15).unwrap().value;
        assert!((b - c(0.0996080144187692144, 0.0185045010284871320)).norm() < 1e-15);
    }

    #[test]
    fn profile_first_coefficient() {
        // Trapezoid rule on |ζ| = 1 is spectrally accurate for the Laurent coefficient.
        let m = 64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..m {
            let e = Complex64::from_polar(1.0, 2.0 * PI * i as f64 / m as f64);
            acc += g_boundary_split(e, 1e-15).unwrap().value / e;
        }
        let c1 = acc / m as f64;
        assert!((c1.re - 0.0220139121303957079).abs() < 1e-15 && c1.im.abs() < 1e-16);
    }

    #[test]
    fn profile_rejects_outside_annulus() {
        assert!(matches!(g_boundary(c(5.0, 0.0), 1e-10), Err(WormError::AnnulusMargin { .. })));
        assert!(matches!(g_boundary_split(c(0.0, 0.1), 1e-10), Err(WormError::AnnulusMargin { .. })));
    }

    #[test]
    fn u_kernel_hermitian_and_rotation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..4 {
            let z = sample_u_point(&mut rng, 1.0, (0.3, 2.0), 0.8);
            let w = sample_u_point(&mut rng, 1.0, (0.3, 2.0), 0.8);
            let a = kernel_u(&z, &w, 1e-10).unwrap();
            let b = kernel_u(&w, &z, 1e-10).unwrap();
            assert!((a.value - b.value.conj()).norm() <= 1e-9 * a.value.norm());
            for th in [0.3, 1.7] {
                let rot = Complex64::from_polar(1.0, th);
                let zr = UPoint::new(z.w1, rot * z.w2);
                let wr = UPoint::new(w.w1, rot * w.w2);
                let r = kernel_u(&zr, &wr, 1e-10).unwrap();
                assert!((r.value - a.value).norm() <= 1e-10 * a.value.norm());
            }
        }
    }

    #[test]
    fn transformation_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..4 {
            let z = sample_worm_point(&mut rng, 1.5, 0.8);
            let w = sample_worm_point(&mut rng, 1.5, 0.8);
            let kw = kernel_w(&z, &w, 1e-10).unwrap();
            let ku = kernel_u(&map_phi(&z).unwrap(), &map_phi(&w).unwrap(), 1e-10).unwrap();
            let lhs = kw.value * z.z1 * w.z1.conj();
            assert!((lhs - ku.value).norm() <= 1e-9 * ku.value.norm());
        }
    }

    #[test]
    fn half_pi_form_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..4 {
            let z = sample_worm_point(&mut rng, 1.5, 0.8);
            let w = sample_worm_point(&mut rng, 1.5, 0.8);
            let a = kernel_w(&z, &w, 1e-10).unwrap().value;
            let b = kernel_w_half_pi(&z, &w, 1e-10).unwrap().value;
            assert!((a - b).norm() <= 1e-9 * a.norm());
        }
        let far = WormPoint::new(Complex64::from_polar(1.0, 2.0), c(1f64.exp(), 0.0));
        assert!(kernel_w_half_pi(&far, &far, 1e-8).is_err());
    }

    #[test]
    fn diagonal_is_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..4 {
            let z = sample_worm_point(&mut rng, 2.0, 0.8);
            let k = kernel_w(&z, &z, 1e-10).unwrap().value;
            assert!(k.re > 0.0 && k.im.abs() <= 1e-9 * k.re);
        }
    }

    #[test]
    fn normalized_u_tends_to_minus_profile() {
        let mut prev = f64::INFINITY;
        for t in [10.0, 100.0, 1000.0] {
            let z = UPoint::new(c(0.2, t), c(1.3, 0.4));
            let w = UPoint::new(c(-0.1, t), c(0.9, -0.2));
            let g = normalized_kernel_u(&z, &w, 1e-10).unwrap().value;
            let p = g_boundary(rotation_factor_u(&z, &w), 1e-14).unwrap().value;
            let dev = (g + p).norm();
            assert!(dev < 0.2 / t, "t={t}: {dev}");
            assert!(dev < 0.2 * prev);
            prev = dev;
        }
    }

    #[test]
    fn window_doubling_is_stable() {
        let z = UPoint::new(c(0.3, 0.6), c(1.1, 0.2));
        let w = UPoint::new(c(-0.2, 0.9), c(0.8, -0.5));
        let tol = 1e-9;
        let r = kernel_u(&z, &w, tol).unwrap();
        let k = r.diagnostics.half_width();
        let d = kernel_u_window(&z, &w, 2 * k, 1e-11).unwrap();
        assert!((d - r.value).norm() < tol * r.value.norm());
        assert!(r.diagnostics.tail_bound <= r.err_est);
    }

    #[test]
    fn gram_matrix_is_positive_semidefinite() {
        use nalgebra::DMatrix;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<WormPoint> = (0..6).map(|_| sample_worm_point(&mut rng, 2.0, 0.8)).collect();
        let n = pts.len();
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let k = kernel_w(&pts[i], &pts[j], 1e-10).unwrap().value;
                m[(i, j)] = k;
                m[(j, i)] = k.conj();
            }
        }
        let eig = m.symmetric_eigen();
        let top = eig.eigenvalues.max();
        assert!(eig.eigenvalues.min() >= -1e-8 * top);
    }

    #[test]
    fn rejects_points_outside() {
        let out = UPoint::new(c(5.0, 0.5), c(1.0, 0.0));
        let inside = UPoint::new(c(0.0, 1.0), c(1.0, 0.0));
        assert!(matches!(kernel_u(&out, &inside, 1e-8), Err(WormError::Membership(_))));
    }
}
