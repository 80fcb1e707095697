//! Highest-weight (sectoral) spherical harmonics rotated onto arbitrary
//! great circles.
//!
//! A beam of degree `k` on the frame `(a, b, pole)` is
//!
//! ```text
//! q(y) = c_k ((a·y) + i (b·y))^k
//! ```
//!
//! which is `c_k sin^k φ e^{ikθ}` in the frame's own polar coordinates. Its
//! modulus is `c_k cos^k w`, `w` being the angular distance from `y` to the
//! great circle orthogonal to the pole.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};
use crate::sphere::{Frame, UnitVec};

/// Values with `|q| < c_k e^{-BEAM_LOG_CUTOFF}` are returned as exact zeros.
pub const BEAM_LOG_CUTOFF: f64 = 80.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianBeam<T> {
    k: u32,
    frame: Frame<T>,
    c_k: T,
    /// `|pole·y|²` above which the value is below the cutoff.
    support: T,
}

/// `c_k` with `c_k² ∫_{S²} sin^{2k}φ dΩ = 1`, i.e. `c_k² = (2k+1)!! / (4π (2k)!!)`.
///
/// Evaluated as a compensated sum of `ln(1 + 1/(2j))`, so no factorials are
/// formed.
pub fn normalization_constant<T: Real>(k: u32) -> T {
    let mut acc = CompensatedSum::<f64>::new();
    for j in 1..=k {
        acc.add((0.5 / f64::from(j)).ln_1p());
    }
    let log_c2 = acc.value() - (4.0 * std::f64::consts::PI).ln();
    T::lit((0.5 * log_c2).exp())
}

impl<T: Real> GaussianBeam<T> {
    pub fn new(k: u32, frame: Frame<T>) -> Self {
        let support = if k == 0 {
            T::one()
        } else {
            // (k/2) ln(1 - x) = -cutoff  ⇒  x = 1 - exp(-2 cutoff / k)
            -(T::lit(-2.0 * BEAM_LOG_CUTOFF / f64::from(k))).exp_m1()
        };
        Self {
            k,
            frame,
            c_k: normalization_constant(k),
            support,
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn frame(&self) -> &Frame<T> {
        &self.frame
    }

    pub fn pole(&self) -> &UnitVec<T> {
        &self.frame.pole
    }

    pub fn c_k(&self) -> T {
        self.c_k
    }

    /// Same pole, initial phase advanced by `k·alpha`.
    pub fn phase_shifted(&self, alpha: T) -> Self {
        Self {
            frame: self.frame.rotated_in_plane(-alpha),
            ..*self
        }
    }

    /// `(a·y) + i(b·y)`; modulus is the cosine of the distance to the circle.
    #[inline]
    pub fn carrier(&self, y: &UnitVec<T>) -> Complex<T> {
        Complex::new(self.frame.a.dot(y), self.frame.b.dot(y))
    }

    #[inline]
    pub fn eval(&self, y: &UnitVec<T>) -> Complex<T> {
        if self.k == 0 {
            return Complex::new(self.c_k, T::zero());
        }
        let h = self.frame.pole.dot(y);
        if h * h > self.support {
            return Complex::new(T::zero(), T::zero());
        }
        self.carrier(y).powu(self.k) * self.c_k
    }

    /// Whether `y` lies inside the numerical support of the beam.
    #[inline]
    pub fn supports(&self, y: &UnitVec<T>) -> bool {
        let h = self.frame.pole.dot(y);
        h * h <= self.support
    }

    /// Half-width (radians) of the numerical support around the great circle.
    pub fn support_half_width(&self) -> T {
        self.support.sqrt().min(T::one()).asin()
    }
}

pub fn make_beam<T: Real>(k: u32, frame: Frame<T>) -> GaussianBeam<T> {
    GaussianBeam::new(k, frame)
}

pub fn beam_eval<T: Real>(beam: &GaussianBeam<T>, y: &UnitVec<T>) -> Complex<T> {
    beam.eval(y)
}

/// Sharp Lᵖ exponent on surfaces: `½(½ - 1/p)` for `2 ≤ p ≤ 6`,
/// `2(½ - 1/p) - ½` for `p ≥ 6`, `½` at `p = ∞`.
pub fn sigma<T: Real>(p: T) -> Result<T> {
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    if p.is_nan() || p < two {
        return Err(Error::InvalidExponent(p.as_f64()));
    }
    let inv = if p.is_infinite() { T::zero() } else { p.recip() };
    Ok(if p <= T::lit(6.0) {
        half * (half - inv)
    } else {
        two * (half - inv) - half
    })
}

/// `¼ - 1/(2p)` for `p ≥ 6` (`¼` at `p = ∞`): the growth rate kept by the
/// orthonormalized family above the critical exponent.
pub fn corollary_exponent<T: Real>(p: T) -> Result<T> {
    if p.is_nan() || p < T::lit(6.0) {
        return Err(Error::InvalidExponent(p.as_f64()));
    }
    let inv = if p.is_infinite() { T::zero() } else { p.recip() };
    Ok(T::lit(0.25) - T::lit(0.5) * inv)
}

/// Growth exponent of Gaussian-beam Lᵖ norms: `σ(p)` up to 6, the corollary
/// exponent beyond.
pub fn beam_exponent<T: Real>(p: T) -> Result<T> {
    if p > T::lit(6.0) {
        corollary_exponent(p)
    } else {
        sigma(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::canonical_frame;
    use std::f64::consts::PI;

    /// Oracle: c_k² = (2k+1)!!/(4π (2k)!!) from exact rational products.
    fn c_k_wallis(k: u32) -> f64 {
        let mut ratio = 1.0f64;
        for j in 1..=k {
            ratio *= f64::from(2 * j + 1) / f64::from(2 * j);
        }
        (ratio / (4.0 * PI)).sqrt()
    }

    #[test]
    fn normalization_examples() {
        assert!((normalization_constant::<f64>(0) - 0.282_094_791_773_878_1).abs() < 1e-15);
        assert!((normalization_constant::<f64>(0) - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        assert!((normalization_constant::<f64>(1) - (3.0 / (8.0 * PI)).sqrt()).abs() < 1e-15);
        assert!((normalization_constant::<f64>(1) - 0.345_494_149_471_335_5).abs() < 1e-15);
        for k in [2, 5, 17, 64, 300] {
            let rel = normalization_constant::<f64>(k) / c_k_wallis(k) - 1.0;
            assert!(rel.abs() < 1e-13, "k={k}: {rel}");
        }
    }

    #[test]
    fn normalization_recurrence() {
        for k in 1..400u32 {
            let r = (normalization_constant::<f64>(k) / normalization_constant::<f64>(k - 1)).powi(2);
            let expected = f64::from(2 * k + 1) / f64::from(2 * k);
            assert!((r - expected).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn normalization_survives_huge_degree() {
        let c = normalization_constant::<f64>(1_000_000);
        // c_k² ~ (2/(4π)) sqrt(k/π)
        let approx = ((1.0 / (2.0 * PI)) * (1e6 / PI).sqrt()).sqrt();
        assert!(c.is_finite());
        assert!((c / approx - 1.0).abs() < 1e-5);
    }

    #[test]
    fn constant_beam() {
        let b = make_beam::<f64>(0, Frame::north());
        for y in [UnitVec::north(), UnitVec::from_polar(1.0, 2.0)] {
            let v = b.eval(&y);
            assert!((v.re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15 && v.im == 0.0);
        }
    }

    #[test]
    fn equator_value_is_c_k_with_phase() {
        for k in [1u32, 7, 40] {
            let b = make_beam::<f64>(k, Frame::north());
            for theta in [0.0, 0.3, 2.0] {
                let v = b.eval(&UnitVec::from_polar(PI / 2.0, theta));
                let expect = Complex::from_polar(b.c_k(), f64::from(k) * theta);
                assert!((v - expect).norm() < 1e-13, "k={k} θ={theta}");
            }
        }
        let b1 = make_beam::<f64>(1, Frame::north());
        assert!((b1.eval(&UnitVec::from_polar(PI / 2.0, 0.0)).re - 0.345_494_149_471_335_5).abs() < 1e-15);
    }

    #[test]
    fn vanishes_at_pole() {
        for k in [1u32, 3, 100] {
            let f = canonical_frame(&UnitVec::new(0.1, 0.7, -0.2).unwrap());
            let b = make_beam::<f64>(k, f);
            assert!(b.eval(&f.pole).norm() < 1e-15);
        }
    }

    #[test]
    fn gaussian_transverse_profile() {
        for k in [256u32, 1024, 4096] {
            let b = make_beam::<f64>(k, Frame::north());
            let w = 1.0 / f64::from(k).sqrt();
            let ratio = b.eval(&UnitVec::from_polar(PI / 2.0 - w, 0.4)).norm() / b.c_k();
            // cos(w)^k = exp(-1/2 - 1/(12k) + ...)
            assert!((ratio - (-0.5f64).exp()).abs() < 1.0 / f64::from(k), "k={k}: {ratio}");
        }
    }

    #[test]
    fn phase_advances_by_k_pi_between_intersections() {
        for k in [3u32, 10, 51] {
            let b = make_beam::<f64>(k, Frame::north());
            let y1 = b.eval(&UnitVec::from_polar(PI / 2.0, PI / 2.0));
            let y2 = b.eval(&UnitVec::from_polar(PI / 2.0, 3.0 * PI / 2.0));
            let ratio = y2 / y1;
            let expect = Complex::from_polar(1.0, f64::from(k) * PI);
            assert!((ratio - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn modulus_matches_distance_to_circle() {
        let f = canonical_frame(&UnitVec::new(-0.4, 0.2, 0.5).unwrap());
        let b = make_beam::<f64>(25, f);
        for (phi, theta) in [(0.3, 1.0), (1.2, -2.0), (2.9, 0.1)] {
            let y = UnitVec::from_polar(phi, theta);
            let w = f.pole.dot(&y).clamp(-1.0, 1.0).asin();
            let expect = b.c_k() * w.cos().powi(25);
            assert!((b.eval(&y).norm() - expect).abs() < 1e-13 * b.c_k());
        }
    }

    #[test]
    fn cutoff_only_drops_negligible_values() {
        let k = 2000u32;
        let b = make_beam::<f64>(k, Frame::north());
        let w = b.support_half_width();
        let inside = b.eval(&UnitVec::from_polar(PI / 2.0 - 0.999 * w, 0.0)).norm() / b.c_k();
        assert!(inside > 0.0 && inside < 1e-33);
        assert_eq!(b.eval(&UnitVec::from_polar(PI / 2.0 - 1.001 * w, 0.0)).norm(), 0.0);
    }

    #[test]
    fn cosine_power_below_gaussian() {
        for k in [10.0f64, 100.0, 1000.0] {
            for i in 0..=2000 {
                let w = 0.5 * f64::from(i) / 2000.0;
                assert!(w.cos().powf(k) <= (-k * w * w / 2.0).exp() * (1.0 + 1e-14));
            }
        }
    }

    #[test]
    fn phase_shift_multiplies_by_exponential() {
        let b = make_beam::<f64>(9, canonical_frame(&UnitVec::new(0.3, 0.3, 0.9).unwrap()));
        let alpha = 0.123;
        let shifted = b.phase_shifted(alpha);
        let y = UnitVec::new(0.5, -0.7, 0.2).unwrap();
        let expect = b.eval(&y) * Complex::from_polar(1.0, 9.0 * alpha);
        assert!((shifted.eval(&y) - expect).norm() < 1e-14);
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma(4.0f64).unwrap(), 0.125);
        assert!((sigma(6.0f64).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        // both branches at p = 6
        let lo: f64 = 0.5 * (0.5 - 1.0 / 6.0);
        let hi = 2.0 * (0.5 - 1.0 / 6.0) - 0.5;
        assert!((lo - hi).abs() < 1e-15);
        assert_eq!(sigma(2.0f64).unwrap(), 0.0);
        assert_eq!(sigma(f64::INFINITY).unwrap(), 0.5);
        assert!(sigma(1.5f64).is_err());
    }

    #[test]
    fn corollary_examples() {
        assert_eq!(corollary_exponent(f64::INFINITY).unwrap(), 0.25);
        assert!((corollary_exponent(8.0f64).unwrap() - 3.0 / 16.0).abs() < 1e-15);
        assert!((corollary_exponent(6.0f64).unwrap() - sigma(6.0f64).unwrap()).abs() < 1e-15);
        assert!(corollary_exponent(5.0f64).is_err());
    }

    #[test]
    fn single_precision_beam() {
        let b = make_beam::<f32>(12, Frame::north());
        let v = b.eval(&UnitVec::from_polar(std::f32::consts::FRAC_PI_2, 0.0));
        assert!((v.re - normalization_constant::<f32>(12)).abs() < 1e-5);
    }
}
