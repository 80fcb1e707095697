//! Closed-form Gram matrix of a beam family, Geršgorin certification and the
//! a-priori row-sum bound.

use num_complex::Complex;
use rayon::prelude::*;

use crate::beams::GaussianBeam;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, HermitianMatrix};
use crate::scalar::Real;
use crate::sphere::{build_delta, strip_counts, PoleSet, UnitVec};

/// Pole angles below this are treated as coincident poles.
pub const SAME_POLE_ANGLE: f64 = 1e-9;

/// `ln cos²(β/2)` for unit poles, accurate at both ends of `[0, π]`.
fn log_half_cos_sq<T: Real>(p1: &UnitVec<T>, p2: &UnitVec<T>) -> T {
    let d = [p1.x1 - p2.x1, p1.x2 - p2.x2, p1.x3 - p2.x3];
    let s = [p1.x1 + p2.x1, p1.x2 + p2.x2, p1.x3 + p2.x3];
    let quarter = T::lit(0.25);
    let sin_sq = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) * quarter;
    let cos_sq = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]) * quarter;
    if cos_sq > T::lit(0.5) {
        (-sin_sq).ln_1p()
    } else {
        cos_sq.ln()
    }
}

/// `⟨q₁, q₂⟩ = ∫ q₁ q̄₂` in closed form: modulus `cos(β/2)^{2k}` with `β` the
/// pole angle, phase `q₁(y)/q₂(y)` at `y = pole₁ × pole₂ / |·|`.
pub fn gram_entry<T: Real>(b1: &GaussianBeam<T>, b2: &GaussianBeam<T>) -> Result<Complex<T>> {
    if b1.k() != b2.k() {
        return Err(Error::DegreeMismatch(b1.k(), b2.k()));
    }
    let k = b1.k();
    let zero = Complex::new(T::zero(), T::zero());
    if k == 0 {
        return Ok(Complex::new(T::one(), T::zero()));
    }
    let (p1, p2) = (b1.pole(), b2.pole());
    let beta = p1.angle_to(p2);
    if beta > T::PI() - T::lit(SAME_POLE_ANGLE) {
        return Ok(zero);
    }
    let modulus = (T::of_usize(k as usize) * log_half_cos_sq(p1, p2)).exp();
    if modulus == T::zero() {
        return Ok(zero);
    }
    let y = if beta < T::lit(SAME_POLE_ANGLE) {
        b1.frame().a
    } else {
        UnitVec::from_array(p1.cross(p2)).unwrap_or(b1.frame().a)
    };
    let z = b1.carrier(&y) * b2.carrier(&y).conj();
    let r = z.norm();
    if r == T::zero() {
        return Ok(zero);
    }
    Ok((z / r).powu(k) * modulus)
}

/// Gram matrix `E` of a beam family with its deleted row sums.
#[derive(Clone, Debug)]
pub struct GramMatrix<T> {
    pub k: u32,
    pub e: HermitianMatrix<T>,
    /// `R'_i = Σ_{j≠i} |E_ij|`.
    pub row_sums: Vec<T>,
    /// `max_i R'_i`, which is also `|||E − I|||`.
    pub r_emp: T,
}

impl<T: Real> GramMatrix<T> {
    pub fn m(&self) -> usize {
        self.e.order()
    }

    pub fn to_text(&self) -> String {
        self.e.to_text()
    }
}

pub fn build_gram<T: Real>(beams: &[GaussianBeam<T>]) -> Result<GramMatrix<T>> {
    let first = beams.first().ok_or(Error::EmptyFamily)?;
    let k = first.k();
    if let Some(b) = beams.iter().find(|b| b.k() != k) {
        return Err(Error::DegreeMismatch(k, b.k()));
    }
    let m = beams.len();
    let upper: Vec<Vec<Complex<T>>> = (0..m)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..m)
                .map(|j| gram_entry(&beams[i], &beams[j]).expect("degrees checked"))
                .collect()
        })
        .collect();
    let mut e = HermitianMatrix::identity(m);
    for (i, row) in upper.iter().enumerate() {
        for (off, z) in row.iter().enumerate() {
            let j = i + 1 + off;
            e[(i, j)] = *z;
            e[(j, i)] = z.conj();
        }
    }
    let row_sums = e.deleted_row_sums();
    let r_emp = row_sums.iter().copied().fold(T::zero(), T::max);
    Ok(GramMatrix { k, e, row_sums, r_emp })
}

/// Eigenvalue enclosure by Geršgorin discs.
#[derive(Clone, Debug, PartialEq)]
pub struct GershgorinReport<T> {
    /// Strict diagonal dominance `a_ii > R'_i` in every row.
    pub dominant: bool,
    /// `[min_i (a_ii − R'_i), max_i (a_ii + R'_i)]`; `[1 − r, 1 + r]` for a Gram matrix.
    pub interval: (T, T),
    pub eigenvalues: Vec<T>,
    /// Largest distance by which an eigenvalue leaves the union of discs.
    pub max_excess: T,
    pub tolerance: T,
    pub eig_check: bool,
}

/// Tolerance used by [`gershgorin_certificate`].
pub const GERSHGORIN_TOL: f64 = 1e-10;

pub fn gershgorin<T: Real>(a: &HermitianMatrix<T>, tol: T) -> GershgorinReport<T> {
    let diag = a.diag();
    let radii = a.deleted_row_sums();
    let dominant = diag.iter().zip(&radii).all(|(d, r)| *d > *r);
    let lo = diag
        .iter()
        .zip(&radii)
        .map(|(d, r)| *d - *r)
        .fold(T::infinity(), T::min);
    let hi = diag
        .iter()
        .zip(&radii)
        .map(|(d, r)| *d + *r)
        .fold(T::neg_infinity(), T::max);
    let eigenvalues = hermitian_eigen(a).values;
    let max_excess = eigenvalues
        .iter()
        .map(|&l| {
            diag.iter()
                .zip(&radii)
                .map(|(d, r)| ((l - *d).abs() - *r).max(T::zero()))
                .fold(T::infinity(), T::min)
        })
        .fold(T::zero(), T::max);
    GershgorinReport {
        dominant,
        interval: (lo, hi),
        eigenvalues,
        max_excess,
        tolerance: tol,
        eig_check: max_excess <= tol,
    }
}

pub fn gershgorin_certificate<T: Real>(g: &GramMatrix<T>) -> GershgorinReport<T> {
    let mut rep = gershgorin(&g.e, T::lit(GERSHGORIN_TOL));
    rep.dominant = g.r_emp < T::one();
    rep.interval = (T::one() - g.r_emp, T::one() + g.r_emp);
    rep
}

/// `c₀ = e^{1/72}`.
pub fn c0<T: Real>() -> T {
    T::lit((1.0f64 / 72.0).exp())
}

fn check_density<T: Real>(d: T) -> Result<()> {
    if d > T::zero() && d < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("density must lie in (0, 1), got {d}")))
    }
}

/// `(7 + 1296 D) c₀^{-1/D}`.
pub fn density_lhs<T: Real>(d: T) -> T {
    (T::lit(7.0) + T::lit(1296.0) * d) * (-(T::one() / (T::lit(72.0) * d))).exp()
}

/// Threshold the density left-hand side must not exceed.
pub const DENSITY_THRESHOLD: f64 = 1.0 / 25.0;

pub fn density_condition<T: Real>(d: T) -> Result<bool> {
    check_density(d)?;
    Ok(density_lhs(d) <= T::lit(DENSITY_THRESHOLD))
}

/// Three-part a-priori bound on the deleted row sums of `E`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RBoundReport<T> {
    /// `7 c₀^{-1/D}`: poles in the innermost strip.
    pub group_i: T,
    /// `1296 D c₀^{-1/D}`: strips at distance below 1/4.
    pub group_ii: T,
    /// `36 cos(1/8)^{2k} (2k+1)²`: the far strips.
    pub group_iii: T,
    pub r_theory: T,
    pub c0: T,
    pub density: T,
    pub k: u32,
    /// `r_theory ≤ 1/24`, which makes `6r ≤ 1/4`.
    pub admissible: bool,
}

impl<T: Real> RBoundReport<T> {
    pub fn near_groups(&self) -> T {
        self.group_i + self.group_ii
    }
}

/// Largest `r` for which the strong bounds on `F` are claimed.
pub const ADMISSIBLE_R: f64 = 1.0 / 24.0;

pub fn theoretical_r<T: Real>(d: T, k: u32) -> Result<RBoundReport<T>> {
    check_density(d)?;
    if k == 0 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    let decay = (-(T::one() / (T::lit(72.0) * d))).exp();
    let group_i = T::lit(7.0) * decay;
    let group_ii = T::lit(1296.0) * d * decay;
    let kk = T::of_usize(k as usize);
    let two_k1 = kk + kk + T::one();
    let group_iii =
        T::lit(36.0) * ((kk + kk) * T::lit(0.125).cos().ln() + T::lit(2.0) * two_k1.ln()).exp();
    let r_theory = group_i + group_ii + group_iii;
    Ok(RBoundReport {
        group_i,
        group_ii,
        group_iii,
        r_theory,
        c0: c0(),
        density: d,
        k,
        admissible: r_theory <= T::lit(ADMISSIBLE_R),
    })
}

/// Upper bound on one deleted row sum from latitude-strip pole counts.
#[derive(Clone, Debug, PartialEq)]
pub struct StripBound<T> {
    pub delta: T,
    /// `7 cos(δ/2)^{2k} + Σ_{l≥2} 36 sin((l−1)δ)/δ · cos((l−1)δ/2)^{2k}`.
    pub value: T,
    /// Same sum weighted by the actual strip counts; bounds `R'_i` unconditionally.
    pub count_based: T,
    pub counts: Vec<usize>,
    pub caps: Vec<T>,
    /// Whether every strip count respects its cap (so `value ≥ R'_i`).
    pub caps_hold: bool,
}

pub fn strip_sum_bound<T: Real>(ps: &PoleSet<T>, i: usize, k: u32) -> Result<StripBound<T>> {
    if ps.m() < 2 {
        return Err(Error::InvalidArgument("strip bound needs at least two poles".into()));
    }
    let delta = build_delta(ps.d_min.min(T::PI()));
    let part = strip_counts(ps, i, delta)?;
    let two_k = T::of_usize(2 * k as usize);
    let decay = |l: usize| -> T {
        let half = T::of_usize(l) * delta * T::lit(0.5);
        let c = half.cos();
        if c <= T::zero() {
            T::zero()
        } else {
            (two_k * c.ln()).exp()
        }
    };
    let mut caps = Vec::with_capacity(part.n_strips);
    let mut value = T::zero();
    let mut count_based = T::zero();
    for l in 1..=part.n_strips {
        let cap = if l == 1 {
            T::lit(7.0)
        } else {
            T::lit(36.0) * (T::of_usize(l - 1) * delta).sin() / delta
        };
        // Strip 1 can only contain poles at angle exactly δ, since δ ≤ d_min.
        let weight = decay(l.max(2) - 1);
        value += cap * weight;
        count_based += T::of_usize(part.counts[l - 1]) * weight;
        caps.push(cap);
    }
    let caps_hold = part
        .counts
        .iter()
        .zip(&caps)
        .all(|(&c, &cap)| T::of_usize(c) <= cap * (T::one() + T::epsilon() * T::lit(16.0)));
    Ok(StripBound {
        delta,
        value,
        count_based,
        counts: part.counts,
        caps,
        caps_hold,
    })
}
