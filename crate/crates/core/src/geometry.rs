//! The unbounded worm `𝒲 = {|z1 − e^{i log|z2|²}| < 1, z2 ≠ 0}`, its sharp
//! truncations `𝒲_μ`, the unwound model
//! `𝒰 = {Im w1 > 0, |Re w1 − log|w2|²| < arccos(e^{−Im w1}), w2 ≠ 0}`,
//! the frames `L`, `ℓ`, `E_η` and the biholomorphism `Φ: 𝒲 → 𝒰`.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Result, WormError};
use crate::weights::fiber_half_width;

/// Default slack for boundary predicates.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Point of ℂ² in worm coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WormPoint {
    pub z1: Complex64,
    pub z2: Complex64,
}

/// Point of ℂ² in unwound coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UPoint {
    pub w1: Complex64,
    pub w2: Complex64,
}

impl WormPoint {
    pub fn new(z1: Complex64, z2: Complex64) -> Self {
        WormPoint { z1, z2 }
    }

    /// `log|z2|²`
    pub fn rotation(&self) -> f64 {
        self.z2.norm_sqr().ln()
    }
}

impl UPoint {
    pub fn new(w1: Complex64, w2: Complex64) -> Self {
        UPoint { w1, w2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// The unbounded worm.
    W,
    /// The worm cut to `|log|z2|²| < μ`.
    Wmu(f64),
    /// The unwound model.
    U,
}

/// Strict membership of `(a, b)` in `domain`; the pair is read as `(z1, z2)`
/// for the worm domains and as `(w1, w2)` for `𝒰`.
pub fn contains(domain: Domain, a: Complex64, b: Complex64) -> bool {
    match domain {
        Domain::W => in_worm(&WormPoint::new(a, b)),
        Domain::Wmu(mu) => {
            let p = WormPoint::new(a, b);
            in_worm(&p) && p.rotation().abs() < mu
        }
        Domain::U => in_unwound(&UPoint::new(a, b)),
    }
}

pub fn in_worm(z: &WormPoint) -> bool {
    if z.z2 == Complex64::new(0.0, 0.0) || !z.z2.norm().is_finite() {
        return false;
    }
    let center = Complex64::from_polar(1.0, z.rotation());
    (z.z1 - center).norm() < 1.0
}

pub fn in_unwound(w: &UPoint) -> bool {
    if w.w2 == Complex64::new(0.0, 0.0) || !(w.w1.im > 0.0) {
        return false;
    }
    (w.w1.re - w.w2.norm_sqr().ln()).abs() < fiber_half_width(w.w1.im)
}

/// Holomorphic frame at a worm point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    /// `L(z) = log(z1 e^{−i log|z2|²}) + i log|z2|²`
    pub l: Complex64,
    /// `ℓ(z) = −i(L(z) − log 2)`
    pub ell: Complex64,
}

impl Frame {
    /// `E_η(z) = e^{η L(z)}`
    pub fn e(&self, eta: Complex64) -> Complex64 {
        (eta * self.l).exp()
    }
}

/// Frame at `z`; fails if `z1 e^{−i log|z2|²}` lies on the cut `(−∞, 0]`.
pub fn frame(z: &WormPoint) -> Result<Frame> {
    if z.z2 == Complex64::new(0.0, 0.0) {
        return Err(WormError::Branch("z2 = 0".into()));
    }
    let theta = z.rotation();
    let x = z.z1 * Complex64::from_polar(1.0, -theta);
    if x.im == 0.0 && x.re <= 0.0 {
        return Err(WormError::Branch(format!(
            "z1 e^(-i log|z2|^2) = {x} lies on the principal cut"
        )));
    }
    let l = x.ln() + Complex64::new(0.0, theta);
    Ok(Frame {
        l,
        ell: Complex64::new(0.0, -1.0) * (l - LN_2),
    })
}

/// `Φ(z) = (−i(L(z) − log 2), z2)`; requires `z ∈ 𝒲`.
pub fn map_phi(z: &WormPoint) -> Result<UPoint> {
    if !in_worm(z) {
        return Err(WormError::Membership(format!(
            "({}, {}) is not in the worm domain",
            z.z1, z.z2
        )));
    }
    Ok(UPoint::new(frame(z)?.ell, z.z2))
}

/// `Φ⁻¹(w) = (2e^{i w1}, w2)`; requires `w ∈ 𝒰`.
pub fn map_phi_inv(w: &UPoint) -> Result<WormPoint> {
    if !in_unwound(w) {
        return Err(WormError::Membership(format!(
            "({}, {}) is not in the unwound domain",
            w.w1, w.w2
        )));
    }
    Ok(WormPoint::new(2.0 * (Complex64::new(0.0, 1.0) * w.w1).exp(), w.w2))
}

/// Boundary pairs of `𝒰 × 𝒰` where the kernel does not extend: same height
/// `v`, both first coordinates on the same-side arcs `Re w1 − log|w2|² = ±arccos(e^{−v})`,
/// and `|log|z2|² − log|w2|²| ≤ 2 arccos(e^{−v})`.
pub fn in_singular_set_u(z: &UPoint, w: &UPoint, tol: f64) -> bool {
    let zero = Complex64::new(0.0, 0.0);
    if z.w2 == zero || w.w2 == zero {
        return false;
    }
    if (z.w1.im - w.w1.im).abs() > tol || z.w1.im < -tol {
        return false;
    }
    let v = (0.5 * (z.w1.im + w.w1.im)).max(0.0);
    let a = if v == 0.0 { 0.0 } else { fiber_half_width(v) };
    let tz = z.w2.norm_sqr().ln();
    let tw = w.w2.norm_sqr().ln();
    let dz = z.w1.re - tz;
    let dw = w.w1.re - tw;
    let on_arc = |d: f64, sign: f64| (d - sign * a).abs() <= tol;
    let same_arc = (on_arc(dz, 1.0) && on_arc(dw, 1.0)) || (on_arc(dz, -1.0) && on_arc(dw, -1.0));
    same_arc && (tz - tw).abs() <= 2.0 * a + tol
}

/// Boundary pairs of `𝒲 × 𝒲` where the kernel does not extend:
/// (i) `z1 = 0` or `w1 = 0`; (ii) `z2 = 0` or `w2 = 0`; (iii) for some
/// `r ∈ (0, 2]`, `z1 = r e^{i log|z2|² ± i arccos(r/2)}`,
/// `w1 = r e^{i log|w2|² ± i arccos(r/2)}` with the same sign and
/// `|log|z2|² − log|w2|²| ≤ 2 arccos(r/2)`. At `r = 2` both angles vanish
/// and the conditions are used as written.
pub fn in_singular_set_w(z: &WormPoint, w: &WormPoint, tol: f64) -> bool {
    if z.z1.norm() <= tol || w.z1.norm() <= tol {
        return true;
    }
    if z.z2.norm() <= tol || w.z2.norm() <= tol {
        return true;
    }
    let r = z.z1.norm();
    if (r - w.z1.norm()).abs() > tol || r > 2.0 + tol {
        return false;
    }
    let a = (r / 2.0).min(1.0).acos();
    let tz = z.rotation();
    let tw = w.rotation();
    let phase = |p: &WormPoint, t: f64| (p.z1 * Complex64::from_polar(1.0, -t)).arg();
    let pz = phase(z, tz);
    let pw = phase(w, tw);
    let angle_close = |x: f64, y: f64| {
        let d = (x - y).rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d) <= tol
    };
    let same_side = (angle_close(pz, a) && angle_close(pw, a)) || (angle_close(pz, -a) && angle_close(pw, -a));
    same_side && (tz - tw).abs() <= 2.0 * a + tol
}

/// Random point of `𝒲` with `|log|z2|²| < max_rotation`, at distance at
/// most `shrink` (relative to the unit radius) from the centre of its disk.
pub fn sample_worm_point<R: Rng + ?Sized>(rng: &mut R, max_rotation: f64, shrink: f64) -> WormPoint {
    let theta: f64 = rng.gen_range(-max_rotation..max_rotation);
    let r: f64 = shrink * rng.gen::<f64>().sqrt();
    let phi: f64 = rng.gen_range(-PI..PI);
    let z1 = Complex64::from_polar(1.0, theta) + Complex64::from_polar(r, phi);
    let arg2: f64 = rng.gen_range(-PI..PI);
    WormPoint::new(z1, Complex64::from_polar((theta / 2.0).exp(), arg2))
}

/// Random point of `𝒰` with `|log|w2|²| < max_rotation`, `Im w1` in
/// `heights` and `|Re w1 − log|w2|²| < shrink·arccos(e^{−Im w1})`.
pub fn sample_u_point<R: Rng + ?Sized>(rng: &mut R, max_rotation: f64, heights: (f64, f64), shrink: f64) -> UPoint {
    let v: f64 = rng.gen_range(heights.0..heights.1);
    let a = fiber_half_width(v);
    let theta: f64 = rng.gen_range(-max_rotation..max_rotation);
    let u = theta + shrink * a * rng.gen_range(-1.0..1.0);
    let arg2: f64 = rng.gen_range(-PI..PI);
    UPoint::new(Complex64::new(u, v), Complex64::from_polar((theta / 2.0).exp(), arg2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_worm_point(rng: &mut ChaCha8Rng) -> WormPoint {
        sample_worm_point(rng, 6.0, 0.999)
    }

    fn random_u_point(rng: &mut ChaCha8Rng) -> UPoint {
        sample_u_point(rng, 5.0, (0.01, 4.0), 0.999)
    }

    #[test]
    fn membership_examples() {
        assert!(contains(Domain::W, c(1.0, 0.0), c(1.0, 0.0)));
        assert!(!contains(Domain::W, c(2.5, 0.0), c(1.0, 0.0)));
        assert!(contains(Domain::U, c(0.0, 1.0), c(1.0, 0.0)));
        assert!(!contains(Domain::W, c(1.0, 0.0), c(0.0, 0.0)));
        assert!(!contains(Domain::U, c(0.0, 1.0), c(0.0, 0.0)));
        let far = WormPoint::new(Complex64::from_polar(1.0, 3.0), c(1.5f64.exp(), 0.0));
        assert!(contains(Domain::W, far.z1, far.z2));
        assert!(contains(Domain::Wmu(3.5), far.z1, far.z2));
        assert!(!contains(Domain::Wmu(2.5), far.z1, far.z2));
    }

    #[test]
    fn frame_examples() {
        let f = frame(&WormPoint::new(c(1.0, 0.0), c(1.0, 0.0))).unwrap();
        assert!(f.l.norm() < 1e-16);
        assert!((f.ell - c(0.0, LN_2)).norm() < 1e-16);
        let z = WormPoint::new(0.5 * Complex64::from_polar(1.0, 2.0), c(1f64.exp(), 0.0));
        let f = frame(&z).unwrap();
        assert!((f.l - c(0.5f64.ln(), 2.0)).norm() < 1e-14);
    }

    #[test]
    fn frame_rejects_cut() {
        let z = WormPoint::new(c(-0.5, 0.0), c(1.0, 0.0));
        assert!(matches!(frame(&z), Err(WormError::Branch(_))));
    }

    #[test]
    fn integer_powers_of_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let z = random_worm_point(&mut rng);
            let f = frame(&z).unwrap();
            for k in -2..=2 {
                let e = f.e(c(k as f64, 0.0));
                let p = z.z1.powi(k);
                assert!((e - p).norm() <= 1e-12 * p.norm().max(1.0), "k={k}: {e} vs {p}");
            }
        }
    }

    #[test]
    fn frame_exponential_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let f = frame(&random_worm_point(&mut rng)).unwrap();
            let a = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let b = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let lhs = f.e(a) * f.e(b);
            let rhs = f.e(a + b);
            assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm());
        }
    }

    #[test]
    fn phi_examples() {
        let w = map_phi(&WormPoint::new(c(1.0, 0.0), c(1.0, 0.0))).unwrap();
        assert!((w.w1 - c(0.0, LN_2)).norm() < 1e-16);
        assert_eq!(w.w2, c(1.0, 0.0));
        let z = map_phi_inv(&UPoint::new(c(0.0, LN_2), c(1.0, 0.0))).unwrap();
        assert!((z.z1 - c(1.0, 0.0)).norm() < 1e-15);
        let z = map_phi_inv(&UPoint::new(c(0.0, LN_2), c(0.0, 1.0))).unwrap();
        assert!((z.z1 - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(z.z2, c(0.0, 1.0));
        // |0 − log 25| exceeds arccos(1/2), so (i log 2, 5i) is outside the unwound domain.
        assert!(matches!(
            map_phi_inv(&UPoint::new(c(0.0, LN_2), c(0.0, 5.0))),
            Err(WormError::Membership(_))
        ));
        assert!(map_phi(&WormPoint::new(c(3.0, 0.0), c(1.0, 0.0))).is_err());
        assert!(map_phi_inv(&UPoint::new(c(0.0, -1.0), c(1.0, 0.0))).is_err());
    }

    #[test]
    fn round_trips_and_images() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let z = random_worm_point(&mut rng);
            let w = map_phi(&z).unwrap();
            assert!(in_unwound(&w));
            let back = map_phi_inv(&w).unwrap();
            worst = worst.max((back.z1 - z.z1).norm()).max((back.z2 - z.z2).norm());
            let u = random_u_point(&mut rng);
            let zw = map_phi_inv(&u).unwrap();
            assert!(in_worm(&zw));
            let uu = map_phi(&zw).unwrap();
            worst = worst.max((uu.w1 - u.w1).norm());
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn rotation_factor_inside_strip() {
        use crate::halfplane::{b_lambda, Separation};
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..500 {
            let z = random_worm_point(&mut rng);
            let w = random_worm_point(&mut rng);
            let (fz, fw) = (frame(&z).unwrap(), frame(&w).unwrap());
            let half_i = c(0.0, 0.5);
            let zeta = fz.e(half_i) * z.z2 * (fw.e(half_i) * w.z2).conj();
            let sep = Separation::from_points(fz.ell, fw.ell).unwrap();
            let b = b_lambda(&sep);
            assert!(zeta.norm().ln().abs() < b, "|ζ| = {}, b = {b}", zeta.norm());
        }
    }

    #[test]
    fn singular_set_u() {
        let v: f64 = 0.7;
        let a = fiber_half_width(v);
        let z = UPoint::new(c(a, v), c(1.0, 0.0));
        assert!(in_singular_set_u(&z, &z, BOUNDARY_TOL));
        let w = UPoint::new(c(a + 0.3, v), c(0.15f64.exp(), 0.0));
        assert!(in_singular_set_u(&z, &w, BOUNDARY_TOL));
        let opposite = UPoint::new(c(-a, v), c(1.0, 0.0));
        assert!(!in_singular_set_u(&z, &opposite, BOUNDARY_TOL));
        let higher = UPoint::new(c(fiber_half_width(0.9), 0.9), c(1.0, 0.0));
        assert!(!in_singular_set_u(&z, &higher, BOUNDARY_TOL));
        let far = UPoint::new(c(a + 3.0, v), c(1.5f64.exp(), 0.0));
        assert!(!in_singular_set_u(&z, &far, BOUNDARY_TOL));
    }

    #[test]
    fn singular_set_w() {
        let w = WormPoint::new(Complex64::from_polar(1.0, 0.0) + Complex64::from_polar(1.0, 2.0), c(1.0, 0.0));
        assert!(in_singular_set_w(&WormPoint::new(c(0.0, 0.0), c(1.0, 0.0)), &w, BOUNDARY_TOL));
        assert!(in_singular_set_w(&w, &WormPoint::new(c(1.0, 0.0), c(0.0, 0.0)), BOUNDARY_TOL));
        assert!(in_singular_set_w(&w, &w, BOUNDARY_TOL));
        let r = w.z1.norm();
        let a = (r / 2.0).acos();
        let t: f64 = 0.4 * a;
        let other = WormPoint::new(Complex64::from_polar(r, t + a), c((t / 2.0).exp(), 0.0));
        assert!(in_singular_set_w(&w, &other, BOUNDARY_TOL));
        let mirrored = WormPoint::new(Complex64::from_polar(r, t - a), c((t / 2.0).exp(), 0.0));
        assert!(!in_singular_set_w(&w, &mirrored, BOUNDARY_TOL));
        let top = WormPoint::new(c(2.0, 0.0), c(1.0, 0.0));
        assert!(in_singular_set_w(&top, &top, BOUNDARY_TOL));
        let shifted = WormPoint::new(c(2.0, 0.0), c(0.01f64.exp(), 0.0));
        assert!(!in_singular_set_w(&top, &shifted, BOUNDARY_TOL));
    }
}
