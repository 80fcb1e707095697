//! Symmetric orthonormalization `u = F q` with `F = E^{-1/2}`, and the
//! checks that `u` keeps the beams' Lᵖ growth.

use num_complex::Complex;

use crate::beams::{beam_exponent, GaussianBeam};
use crate::error::{Error, Result};
use crate::gram::{GramMatrix, ADMISSIBLE_R};
use crate::linalg::{
    default_series_tol, inv_sqrt_eigen_with, inv_sqrt_series, matrix_inf_norm, HermitianMatrix,
};
use crate::quad::{
    gauss_legendre, gram_by_quadrature, is_even_exponent, lp_norms_converged, sup_norms, SphereField,
    SphereGrid,
};
use crate::scalar::{CompensatedSum, Real};
use crate::sphere::{Frame, UnitVec};

/// The series route is only run as a cross-check when `|||E − I|||` is below this.
pub const SERIES_CHECK_LIMIT: f64 = 0.9;

/// Agreement between the eigen and series routes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesCheck<T> {
    pub terms: usize,
    pub tol: T,
    /// `max |F_eigen − F_series|`.
    pub diff: T,
}

/// Orthonormalized beam family.
#[derive(Clone, Debug)]
pub struct OrthoSet<T> {
    pub k: u32,
    pub beams: Vec<GaussianBeam<T>>,
    pub f: HermitianMatrix<T>,
    /// `|||F − I|||`.
    pub h_norm: T,
    pub f_diag_range: (T, T),
    /// `R'_i(F)`.
    pub f_row_sums: Vec<T>,
    /// `max |(F E F − I)_ij|`.
    pub fef_residual: T,
    pub min_gram_eigenvalue: T,
    /// Deleted row-sum radius of the source Gram matrix.
    pub r_emp: T,
    /// `None` when `|||E − I|||` is too large for the series.
    pub series: Option<SeriesCheck<T>>,
}

impl<T: Real> OrthoSet<T> {
    pub fn m(&self) -> usize {
        self.beams.len()
    }

    pub fn frames(&self) -> Vec<Frame<T>> {
        self.beams.iter().map(|b| *b.frame()).collect()
    }

    /// The orthonormal functions `u_i` as a field of width `m`.
    pub fn field(&self) -> OrthoField<'_, T> {
        OrthoField { os: self }
    }

    /// Beams followed by the orthonormal functions (width `2m`).
    pub fn joint_field(&self) -> JointField<'_, T> {
        JointField { os: self }
    }
}

/// `F = E^{-1/2}` by the eigen route, validated by the binomial series when
/// it is certified to converge.
pub fn orthonormalize<T: Real>(beams: &[GaussianBeam<T>], gram: &GramMatrix<T>) -> Result<OrthoSet<T>> {
    orthonormalize_with_tol(beams, gram, default_series_tol())
}

pub fn orthonormalize_with_tol<T: Real>(
    beams: &[GaussianBeam<T>],
    gram: &GramMatrix<T>,
    tol: T,
) -> Result<OrthoSet<T>> {
    if beams.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if beams.len() != gram.m() {
        return Err(Error::InvalidArgument(format!(
            "{} beams for a Gram matrix of order {}",
            beams.len(),
            gram.m()
        )));
    }
    let e = &gram.e;
    let (f, eig) = inv_sqrt_eigen_with(e)?;
    let series = if matrix_inf_norm(&e.minus_identity()) < T::lit(SERIES_CHECK_LIMIT) {
        let (fs, terms) = inv_sqrt_series(e, tol)?;
        let diff = f.max_abs_diff(&fs);
        let allowed = T::lit(10.0) * tol;
        if diff > allowed {
            return Err(Error::InverseSqrtMismatch {
                diff: diff.as_f64(),
                allowed: allowed.as_f64(),
            });
        }
        Some(SeriesCheck { terms, tol, diff })
    } else {
        None
    };
    let fef_residual = f.mul(e).mul(&f).max_abs_diff(&HermitianMatrix::identity(e.order()));
    let diag = f.diag();
    let f_diag_range = (
        diag.iter().copied().fold(T::infinity(), T::min),
        diag.iter().copied().fold(T::neg_infinity(), T::max),
    );
    Ok(OrthoSet {
        k: gram.k,
        beams: beams.to_vec(),
        h_norm: matrix_inf_norm(&f.minus_identity()),
        f_row_sums: f.deleted_row_sums(),
        f,
        f_diag_range,
        fef_residual,
        min_gram_eigenvalue: eig.values[0],
        r_emp: gram.r_emp,
        series,
    })
}

/// Largest number of beams expected to be nonzero at one point; more falls
/// back to a heap buffer.
const INLINE_ACTIVE: usize = 64;

fn apply_f<T: Real>(f: &HermitianMatrix<T>, q: &[Complex<T>], out: &mut [Complex<T>]) {
    let zero = Complex::new(T::zero(), T::zero());
    let mut inline = [(0usize, zero); INLINE_ACTIVE];
    let mut heap = Vec::new();
    let mut count = 0;
    for (j, v) in q.iter().enumerate() {
        if v.re != T::zero() || v.im != T::zero() {
            if count < INLINE_ACTIVE {
                inline[count] = (j, *v);
            } else {
                if heap.is_empty() {
                    heap.extend_from_slice(&inline);
                }
                heap.push((j, *v));
            }
            count += 1;
        }
    }
    let active = if count > INLINE_ACTIVE { &heap[..] } else { &inline[..count] };
    for (i, o) in out.iter_mut().enumerate() {
        let row = f.row(i);
        *o = active.iter().fold(zero, |acc, (j, v)| acc + row[*j] * *v);
    }
}

pub struct OrthoField<'a, T> {
    os: &'a OrthoSet<T>,
}

impl<T: Real> SphereField<T> for OrthoField<'_, T> {
    fn width(&self) -> usize {
        self.os.m()
    }

    fn eval_into(&self, y: &UnitVec<T>, out: &mut [Complex<T>]) {
        let m = self.os.m();
        let zero = Complex::new(T::zero(), T::zero());
        if m <= INLINE_ACTIVE {
            let mut q = [zero; INLINE_ACTIVE];
            self.os.beams.as_slice().eval_into(y, &mut q[..m]);
            apply_f(&self.os.f, &q[..m], out);
        } else {
            let mut q = vec![zero; m];
            self.os.beams.as_slice().eval_into(y, &mut q);
            apply_f(&self.os.f, &q, out);
        }
    }
}

pub struct JointField<'a, T> {
    os: &'a OrthoSet<T>,
}

impl<T: Real> SphereField<T> for JointField<'_, T> {
    fn width(&self) -> usize {
        2 * self.os.m()
    }

    fn eval_into(&self, y: &UnitVec<T>, out: &mut [Complex<T>]) {
        let (q, u) = out.split_at_mut(self.os.m());
        self.os.beams.as_slice().eval_into(y, q);
        apply_f(&self.os.f, q, u);
    }
}

/// `u_i(y) = Σ_j F_ij q_j(y)`.
pub fn ortho_eval<T: Real>(os: &OrthoSet<T>, i: usize, y: &UnitVec<T>) -> Result<Complex<T>> {
    if i >= os.m() {
        return Err(Error::IndexOutOfRange { index: i, len: os.m() });
    }
    let row = os.f.row(i);
    Ok(os
        .beams
        .iter()
        .zip(row)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (b, f)| acc + *f * b.eval(y)))
}

/// Quadrature Gram matrix of the `u_i` compared against the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthonormalityReport<T> {
    pub max_diag_error: T,
    pub max_off_diag: T,
    pub tolerance: T,
    pub pass: bool,
    pub n_phi: usize,
    pub n_theta: usize,
}

/// Default tolerance for [`check_orthonormality`].
pub const ORTHONORMALITY_TOL: f64 = 1e-9;

/// Gram of `u` on `grid`, or on an exact degree-`2k` grid when `grid` is `None`.
pub fn check_orthonormality<T: Real>(
    os: &OrthoSet<T>,
    grid: Option<&SphereGrid<T>>,
) -> Result<OrthonormalityReport<T>> {
    let owned;
    let grid = match grid {
        Some(g) => g,
        None => {
            owned = SphereGrid::exact(2 * os.k as usize)?;
            &owned
        }
    };
    let m = os.m();
    let g = gram_by_quadrature(&os.field(), grid);
    let mut max_diag_error = T::zero();
    let mut max_off_diag = T::zero();
    for i in 0..m {
        for j in 0..m {
            let z = g[i * m + j];
            if i == j {
                max_diag_error = max_diag_error.max((z - Complex::new(T::one(), T::zero())).norm());
            } else {
                max_off_diag = max_off_diag.max(z.norm());
            }
        }
    }
    let tolerance = T::lit(ORTHONORMALITY_TOL).max(T::epsilon() * T::lit(1e4));
    Ok(OrthonormalityReport {
        max_diag_error,
        max_off_diag,
        tolerance,
        pass: max_diag_error <= tolerance && max_off_diag <= tolerance,
        n_phi: grid.n_phi(),
        n_theta: grid.n_theta(),
    })
}

/// One row of [`FBoundsReport`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FRowCheck<T> {
    pub f_ii: T,
    pub row_sum: T,
    /// `1 − 6r ≤ F_ii ≤ 1 + 6r`.
    pub diag_ok: bool,
    /// `R'_i(F) ≤ 6r`.
    pub row_ok: bool,
    /// `3/4 ≤ F_ii ≤ 5/4`, when `r ≤ 1/24`.
    pub strong_diag_ok: Option<bool>,
    /// `R'_i(F) ≤ 1/4`, when `r ≤ 1/24`.
    pub strong_row_ok: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FBoundsReport<T> {
    pub r: T,
    pub h_norm: T,
    /// `|||F − I||| ≤ 6r`.
    pub h_ok: bool,
    pub strong_applicable: bool,
    /// Absolute slack allowed on every inequality (rounding only).
    pub slack: T,
    pub rows: Vec<FRowCheck<T>>,
    pub pass: bool,
}

pub fn f_bounds_check<T: Real>(os: &OrthoSet<T>, r: T) -> FBoundsReport<T> {
    let six_r = T::lit(6.0) * r;
    let slack = T::slack();
    let strong_applicable = r <= T::lit(ADMISSIBLE_R);
    let rows: Vec<FRowCheck<T>> = os
        .f
        .diag()
        .into_iter()
        .zip(&os.f_row_sums)
        .map(|(f_ii, &row_sum)| FRowCheck {
            f_ii,
            row_sum,
            diag_ok: (f_ii - T::one()).abs() <= six_r + slack,
            row_ok: row_sum <= six_r + slack,
            strong_diag_ok: strong_applicable
                .then(|| f_ii >= T::lit(0.75) - slack && f_ii <= T::lit(1.25) + slack),
            strong_row_ok: strong_applicable.then(|| row_sum <= T::lit(0.25) + slack),
        })
        .collect();
    let h_ok = os.h_norm <= six_r + slack;
    let pass = h_ok
        && rows.iter().all(|c| {
            c.diag_ok && c.row_ok && c.strong_diag_ok.unwrap_or(true) && c.strong_row_ok.unwrap_or(true)
        });
    FBoundsReport {
        r,
        h_norm: os.h_norm,
        h_ok,
        strong_applicable,
        slack,
        rows,
        pass,
    }
}

/// `(∫|Q_k|^p)^{1/p}` for the normalized sectoral harmonic, from the 1-D
/// integral `c_k^p 2π ∫_{-1}^{1} (1 − t²)^{kp/2} dt`; `c_k` at `p = ∞`.
pub fn reference_lp_norm<T: Real>(k: u32, p: T) -> Result<T> {
    if p.is_nan() || p < T::one() {
        return Err(Error::InvalidExponent(p.as_f64()));
    }
    let c_k: f64 = crate::beams::normalization_constant(k);
    if p.is_infinite() {
        return Ok(T::lit(c_k));
    }
    let p = p.as_f64();
    let a = 0.5 * f64::from(k) * p;
    let integral = |n: usize| {
        let (t, w) = gauss_legendre::<f64>(n);
        let mut acc = CompensatedSum::new();
        for (t, w) in t.iter().zip(&w) {
            acc.add(w * (a * (-t * t).ln_1p()).exp());
        }
        acc.value()
    };
    let mut n = a.ceil() as usize + 1;
    let mut val = integral(n);
    if a.fract() != 0.0 {
        for _ in 0..6 {
            n *= 2;
            let next = integral(n);
            let done = (next - val).abs() <= 1e-15 * next;
            val = next;
            if done {
                break;
            }
        }
    }
    let log = p * c_k.ln() + (std::f64::consts::TAU * val).ln();
    Ok(T::lit((log / p).exp()))
}

/// Lᵖ row check for one `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpRow<T> {
    pub norm_u: T,
    pub norm_q: T,
    /// `F_ii ‖Q_k‖_p − R'_i(F) max_j ‖q_j‖_p`.
    pub chain_lower: T,
    pub chain_ok: bool,
    /// `‖u_i‖_p / ‖Q_k‖_p`.
    pub ratio: T,
    pub headline_ok: bool,
    pub converged: bool,
    pub rel_change: Option<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpBoundReport<T> {
    pub p: T,
    pub k: u32,
    /// `‖Q_k‖_p`.
    pub baseline: T,
    /// Whether `2 < p ≤ 6`, the range of the lower-bound theorem.
    pub theorem_range: bool,
    pub rows: Vec<LpRow<T>>,
    pub min_ratio: T,
    /// Relative slack on the chain inequality (quadrature error).
    pub chain_slack: T,
    pub n_phi: usize,
    pub n_theta: usize,
    pub pass: bool,
}

impl<T: Real> LpBoundReport<T> {
    pub fn min_norm_u(&self) -> T {
        self.rows.iter().map(|r| r.norm_u).fold(T::infinity(), T::min)
    }

    pub fn sum_norm_u(&self) -> T {
        self.rows.iter().map(|r| r.norm_u).sum()
    }
}

/// Options for the Lᵖ verification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpOptions<T> {
    /// Relative change between two grid doublings accepted as converged.
    pub rel_tol: T,
    pub max_doublings: usize,
    /// Relative slack on the chain inequality.
    pub chain_slack: T,
}

impl<T: Real> Default for LpOptions<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-6),
            max_doublings: 3,
            chain_slack: T::lit(1e-9).max(T::epsilon() * T::lit(1e4)),
        }
    }
}

/// Measures `‖u_i‖_p` and `‖q_i‖_p` for every `p` and checks
/// `‖u_i‖_p ≥ F_ii ‖Q_k‖_p − R'_i(F) max_j ‖q_j‖_p` and `‖u_i‖_p ≥ ½ ‖Q_k‖_p`.
///
/// Even `p` are exact on a grid of degree `p·k`; other finite `p` are refined
/// until the doubling tolerance holds; `p = ∞` is a sup over the grid plus
/// oversampled bands around each great circle.
pub fn verify_lp_lower_bounds<T: Real>(
    os: &OrthoSet<T>,
    ps: &[T],
    grid: &SphereGrid<T>,
    opts: &LpOptions<T>,
) -> Result<Vec<LpBoundReport<T>>> {
    let m = os.m();
    let finite: Vec<T> = ps.iter().copied().filter(|p| p.is_finite()).collect();
    let field = os.joint_field();
    let estimates = if finite.is_empty() {
        Vec::new()
    } else {
        lp_norms_converged(&field, os.k as usize, &finite, grid, opts.rel_tol, opts.max_doublings)?
    };
    let sup = if ps.iter().any(|p| p.is_infinite()) {
        let mut frames = os.frames();
        frames.extend(os.frames());
        Some(sup_norms(&field, grid, &frames))
    } else {
        None
    };
    let diag = os.f.diag();
    let mut out = Vec::with_capacity(ps.len());
    let mut fi = 0;
    for &p in ps {
        let (norms, conv, changes, n_phi, n_theta): (Vec<T>, Vec<bool>, Vec<Option<T>>, usize, usize) =
            if p.is_infinite() {
                let s = sup.clone().expect("computed above");
                (s, vec![true; 2 * m], vec![None; 2 * m], grid.n_phi(), grid.n_theta())
            } else {
                let est = &estimates[fi];
                fi += 1;
                (
                    est.iter().map(|e| e.value).collect(),
                    est.iter().map(|e| e.converged).collect(),
                    est.iter().map(|e| e.rel_change).collect(),
                    est[0].n_phi,
                    est[0].n_theta,
                )
            };
        let baseline = reference_lp_norm(os.k, p)?;
        let max_q = norms[..m].iter().copied().fold(T::zero(), T::max);
        let rows: Vec<LpRow<T>> = (0..m)
            .map(|i| {
                let norm_q = norms[i];
                let norm_u = norms[m + i];
                let chain_lower = diag[i] * baseline - os.f_row_sums[i] * max_q;
                let ratio = norm_u / baseline;
                LpRow {
                    norm_u,
                    norm_q,
                    chain_lower,
                    chain_ok: norm_u >= chain_lower - opts.chain_slack * baseline,
                    ratio,
                    headline_ok: ratio >= T::lit(0.5),
                    converged: conv[i] && conv[m + i],
                    rel_change: match (changes[i], changes[m + i]) {
                        (Some(a), Some(b)) => Some(a.max(b)),
                        (a, b) => a.or(b),
                    },
                }
            })
            .collect();
        let theorem_range = p > T::lit(2.0) && p <= T::lit(6.0);
        let min_ratio = rows.iter().map(|r| r.ratio).fold(T::infinity(), T::min);
        let pass = rows
            .iter()
            .all(|r| r.chain_ok && r.converged && (!theorem_range || r.headline_ok));
        out.push(LpBoundReport {
            p,
            k: os.k,
            baseline,
            theorem_range,
            rows,
            min_ratio,
            chain_slack: opts.chain_slack,
            n_phi,
            n_theta,
            pass,
        });
    }
    Ok(out)
}

pub fn verify_lp_lower_bound<T: Real>(
    os: &OrthoSet<T>,
    p: T,
    grid: &SphereGrid<T>,
) -> Result<LpBoundReport<T>> {
    Ok(verify_lp_lower_bounds(os, &[p], grid, &LpOptions::default())?.remove(0))
}

/// Grid degree making every even `p` in `ps` exact: `max(2, p_max)·k + 8`,
/// with infinite and odd `p` counted as 2 and their next even integer.
pub fn default_grid_degree<T: Real>(k: u32, ps: &[T]) -> usize {
    let p_max = ps
        .iter()
        .filter(|p| p.is_finite())
        .map(|p| {
            let v = p.ceil().to_usize().unwrap_or(2);
            if is_even_exponent(p.ceil()) { v } else { v + 1 }
        })
        .fold(2, usize::max);
    p_max * k as usize + 8
}

/// `(1/(2k+1)) Σ_i ‖u_i‖_p` against `(D/3) ‖Q_k‖_p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AverageBound<T> {
    pub p: T,
    pub density: T,
    pub average: T,
    pub bound: T,
    pub pass: bool,
}

pub fn average_bound_check<T: Real>(rep: &LpBoundReport<T>, density: T) -> AverageBound<T> {
    let average = rep.sum_norm_u() / T::of_usize(2 * rep.k as usize + 1);
    let bound = density / T::lit(3.0) * rep.baseline;
    AverageBound {
        p: rep.p,
        density,
        average,
        bound,
        pass: average >= bound,
    }
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeFit<T> {
    pub slope: T,
    pub intercept: T,
    pub residuals: Vec<T>,
}

pub fn fit_log_log<T: Real>(xs: &[T], ys: &[T]) -> Result<SlopeFit<T>> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two (x, y) pairs".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > T::zero())) {
        return Err(Error::InvalidArgument("log-log fit needs positive data".into()));
    }
    let lx: Vec<T> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<T> = ys.iter().map(|y| y.ln()).collect();
    let n = T::of_usize(xs.len());
    let mx = lx.iter().copied().sum::<T>() / n;
    let my = ly.iter().copied().sum::<T>() / n;
    let sxx: T = lx.iter().map(|x| (*x - mx) * (*x - mx)).sum();
    if sxx == T::zero() {
        return Err(Error::InvalidArgument("all x values coincide".into()));
    }
    let sxy: T = lx.iter().zip(&ly).map(|(x, y)| (*x - mx) * (*y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = lx.iter().zip(&ly).map(|(x, y)| *y - (intercept + slope * *x)).collect();
    Ok(SlopeFit {
        slope,
        intercept,
        residuals,
    })
}

/// Fitted growth exponent of `min_i ‖u_i‖_p` over a `k` sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport<T> {
    pub p: T,
    pub ks: Vec<u32>,
    pub values: Vec<T>,
    pub fit: SlopeFit<T>,
    pub expected: T,
    pub tolerance: T,
    pub pass: bool,
}

/// Slope of `ln min_i ‖u_i‖_p` against `ln k`, compared with the beam
/// exponent for `p` (`σ(p)` up to 6, `¼ − 1/(2p)` above).
pub fn verify_corollary_scaling<T: Real>(
    p: T,
    ks: &[u32],
    values: &[T],
    tolerance: T,
) -> Result<ScalingReport<T>> {
    if ks.len() < 3 {
        return Err(Error::InvalidArgument("a scaling fit needs at least three degrees".into()));
    }
    let xs: Vec<T> = ks.iter().map(|&k| T::of_usize(k as usize)).collect();
    let fit = fit_log_log(&xs, values)?;
    let expected = beam_exponent(p)?;
    Ok(ScalingReport {
        p,
        ks: ks.to_vec(),
        values: values.to_vec(),
        pass: (fit.slope - expected).abs() <= tolerance,
        fit,
        expected,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gram::build_gram;
    use crate::quad::lp_norm;
    use crate::sphere::{canonical_frame, generate_poles};

    fn family(k: u32, m: usize, seed: u64) -> (Vec<GaussianBeam<f64>>, GramMatrix<f64>) {
        let ps = generate_poles::<f64>(m, seed);
        let beams: Vec<_> = ps.poles.iter().map(|p| GaussianBeam::new(k, canonical_frame(p))).collect();
        let g = build_gram(&beams).unwrap();
        (beams, g)
    }

    #[test]
    fn single_beam_is_unchanged() {
        let (beams, g) = family(20, 1, 0);
        let os = orthonormalize(&beams, &g).unwrap();
        assert_eq!(os.f, HermitianMatrix::identity(1));
        let y = UnitVec::from_polar(1.5, 0.3);
        assert_eq!(ortho_eval(&os, 0, &y).unwrap(), beams[0].eval(&y));
        assert!(matches!(ortho_eval(&os, 1, &y), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn antipodal_pair_is_already_orthonormal() {
        let north = GaussianBeam::new(7, Frame::<f64>::north());
        let south = GaussianBeam::new(7, canonical_frame(&UnitVec::north().neg()));
        let beams = vec![north, south];
        let g = build_gram(&beams).unwrap();
        let os = orthonormalize(&beams, &g).unwrap();
        assert_eq!(os.f, HermitianMatrix::identity(2));
        let rep = f_bounds_check(&os, g.r_emp);
        assert!(rep.pass && rep.strong_applicable);
        assert_eq!(rep.rows[0].f_ii, 1.0);
        assert_eq!(rep.rows[0].row_sum, 0.0);
    }

    #[test]
    fn overlapping_family_is_orthonormal_by_quadrature() {
        let (beams, g) = family(24, 12, 5);
        assert!(g.r_emp > 1e-3, "family should overlap, r={}", g.r_emp);
        let os = orthonormalize(&beams, &g).unwrap();
        assert!(os.fef_residual < 1e-12);
        let rep = check_orthonormality(&os, None).unwrap();
        assert!(rep.pass, "{rep:?}");
        let u = os.field();
        let q = os.joint_field();
        let y = UnitVec::from_polar(0.7, 2.0);
        let mut buf = vec![Complex::new(0.0, 0.0); 24];
        q.eval_into(&y, &mut buf);
        let mut ubuf = vec![Complex::new(0.0, 0.0); 12];
        u.eval_into(&y, &mut ubuf);
        for i in 0..12 {
            let direct = ortho_eval(&os, i, &y).unwrap();
            assert!((direct - buf[12 + i]).norm() < 1e-13);
            assert!((direct - ubuf[i]).norm() < 1e-13);
            assert_eq!(buf[i], beams[i].eval(&y));
        }
    }

    #[test]
    fn series_is_recorded_when_certified() {
        let (beams, g) = family(40, 8, 1);
        let os = orthonormalize(&beams, &g).unwrap();
        let s = os.series.expect("small |||B|||");
        assert!(s.diff <= 10.0 * s.tol);
    }

    #[test]
    fn strong_bounds_gated_on_small_r() {
        let mut e = HermitianMatrix::<f64>::identity(2);
        e[(0, 1)] = Complex::new(0.5, 0.0);
        e[(1, 0)] = Complex::new(0.5, 0.0);
        let g = GramMatrix {
            k: 1,
            row_sums: e.deleted_row_sums(),
            r_emp: 0.5,
            e,
        };
        let b = GaussianBeam::new(1, Frame::<f64>::north());
        let os = orthonormalize(&[b, b], &g).unwrap();
        let rep = f_bounds_check(&os, 0.5);
        assert!(!rep.strong_applicable);
        assert!(rep.rows.iter().all(|r| r.strong_diag_ok.is_none() && r.strong_row_ok.is_none()));
        assert!(rep.pass);
    }

    #[test]
    fn mismatched_family_is_rejected() {
        let (beams, g) = family(10, 3, 0);
        assert!(orthonormalize(&beams[..2], &g).is_err());
        assert!(matches!(orthonormalize::<f64>(&[], &g), Err(Error::EmptyFamily)));
    }

    #[test]
    fn reference_norm_matches_quadrature() {
        for (k, p) in [(8u32, 4.0), (16, 6.0), (10, 3.0), (30, 2.0)] {
            let b = GaussianBeam::new(k, Frame::<f64>::north());
            let grid = SphereGrid::exact(6 * k as usize + 8).unwrap().refined().unwrap();
            let q = lp_norm(&b, p, &grid).unwrap();
            let r = reference_lp_norm(k, p).unwrap();
            assert!((q - r).abs() < 1e-10 * r, "k={k} p={p}: {q} vs {r}");
        }
        assert!((reference_lp_norm::<f64>(50, 2.0).unwrap() - 1.0).abs() < 1e-13);
        assert_eq!(
            reference_lp_norm::<f64>(9, f64::INFINITY).unwrap(),
            crate::beams::normalization_constant::<f64>(9)
        );
    }

    #[test]
    fn single_beam_ratio_is_one() {
        let (beams, g) = family(32, 1, 0);
        let os = orthonormalize(&beams, &g).unwrap();
        let grid = SphereGrid::exact(default_grid_degree(32, &[4.0, 3.0])).unwrap();
        let reps = verify_lp_lower_bounds(&os, &[4.0, 3.0, f64::INFINITY], &grid, &LpOptions::default()).unwrap();
        for rep in &reps {
            assert!(rep.pass, "{rep:?}");
            assert!((rep.min_ratio - 1.0).abs() < 1e-6, "p={} ratio={}", rep.p, rep.min_ratio);
        }
    }

    #[test]
    fn far_from_all_circles_is_tiny() {
        for k in [200u32, 300] {
            let (beams, g) = family(k, 6, 2);
            let os = orthonormalize(&beams, &g).unwrap();
            let decay = beams[0].c_k() * 0.5f64.cos().powi(k as i32);
            let grid = SphereGrid::<f64>::exact(40).unwrap();
            let mut seen = 0;
            for (y, _) in grid.nodes() {
                if os.beams.iter().all(|b| b.pole().dot(&y).abs() > 0.5f64.sin()) {
                    seen += 1;
                    for i in 0..os.m() {
                        let v = ortho_eval(&os, i, &y).unwrap().norm();
                        let row: f64 = os.f.row(i).iter().map(|z| z.norm()).sum();
                        assert!(v <= row * decay);
                        if k >= 300 {
                            assert!(v < 1e-12);
                        }
                    }
                }
            }
            assert!(seen > 0);
        }
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let ks = [64u32, 128, 256, 512];
        let vals: Vec<f64> = ks.iter().map(|&k| 3.0 * (k as f64).powf(0.125)).collect();
        let rep = verify_corollary_scaling(4.0, &ks, &vals, 1e-9).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!((rep.fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(verify_corollary_scaling(4.0, &ks[..2], &vals[..2], 0.1).is_err());
        let inf = verify_corollary_scaling(f64::INFINITY, &ks, &vals, 0.01).unwrap();
        assert_eq!(inf.expected, 0.25);
        assert!(!inf.pass);
    }

    #[test]
    fn grid_degree_rule() {
        assert_eq!(default_grid_degree(100, &[4.0]), 408);
        assert_eq!(default_grid_degree(100, &[3.0, 6.0]), 608);
        assert_eq!(default_grid_degree(100, &[5.0]), 608);
        assert_eq!(default_grid_degree(100, &[f64::INFINITY]), 208);
    }

    #[test]
    fn average_bound_on_single_beam() {
        let (beams, g) = family(16, 1, 0);
        let os = orthonormalize(&beams, &g).unwrap();
        let grid = SphereGrid::exact(72).unwrap();
        let rep = verify_lp_lower_bound(&os, 4.0, &grid).unwrap();
        let avg = average_bound_check(&rep, 0.05);
        assert!((avg.average - rep.baseline / 33.0).abs() < 1e-12);
        assert!(avg.pass);
    }
}
