//! Dense complex Hermitian matrices: cyclic Jacobi eigendecomposition and
//! the two inverse-square-root routes (spectral and binomial series).

use std::fmt::Write as _;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense square complex matrix, row-major. Most constructors produce
/// Hermitian matrices; [`HermitianMatrix::hermitian_defect`] measures how far
/// a given instance is from that.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> HermitianMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex::new(T::zero(), T::zero()); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Takes row-major entries; fails when the length is not a square.
    pub fn from_row_major(n: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "{} entries for order {n}",
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn from_real(rows: &[&[T]]) -> Self {
        Self::from_fn(rows.len(), |i, j| Complex::new(rows[i][j], T::zero()))
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.n).map(|i| self[(i, i)].re).collect()
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = self.data[i * n + l];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let (dst, src) = (&mut out.data[i * n..(i + 1) * n], &o.data[l * n..(l + 1) * n]);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * *s;
                }
            }
        }
        out
    }

    pub fn add_scaled(&mut self, o: &Self, s: T) {
        for (a, b) in self.data.iter_mut().zip(&o.data) {
            *a += *b * s;
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `max |a_ij|`.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, o: &Self) -> T {
        self.data
            .iter()
            .zip(&o.data)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }

    /// `max |a_ij - conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Deleted absolute row sums `R'_i = Σ_{j≠i} |a_ij|`.
    pub fn deleted_row_sums(&self) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, z)| z.norm())
                    .sum()
            })
            .collect()
    }

    /// `A - I`.
    pub fn minus_identity(&self) -> Self {
        let mut b = self.clone();
        for i in 0..self.n {
            b[(i, i)] -= Complex::new(T::one(), T::zero());
        }
        b
    }

    /// Row-major text form: a `# n=<n>` header, then one line per row of
    /// space-separated `re,im` pairs.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# n={}", self.n);
        for i in 0..self.n {
            let line: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| format!("{:e},{:e}", z.re.as_f64(), z.im.as_f64()))
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header".into()))?;
        let n: usize = header
            .trim()
            .strip_prefix("# n=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| parse_err(1, "header must be '# n=<order>'".into()))?;
        let mut data = Vec::with_capacity(n * n);
        for (idx, line) in lines {
            for tok in line.split_whitespace() {
                let (re, im) = tok
                    .split_once(',')
                    .ok_or_else(|| parse_err(idx + 1, format!("'{tok}' is not re,im")))?;
                let re: f64 = re.parse().map_err(|e| parse_err(idx + 1, format!("{e}")))?;
                let im: f64 = im.parse().map_err(|e| parse_err(idx + 1, format!("{e}")))?;
                data.push(Complex::new(T::lit(re), T::lit(im)));
            }
        }
        Self::from_row_major(n, data)
    }
}

impl<T> std::ops::Index<(usize, usize)> for HermitianMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for HermitianMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.n + j]
    }
}

/// `|||A||| = max_i Σ_j |a_ij|`, the ℓ^∞ → ℓ^∞ operator norm.
pub fn matrix_inf_norm<T: Real>(a: &HermitianMatrix<T>) -> T {
    (0..a.order())
        .map(|i| a.row(i).iter().map(|z| z.norm()).sum::<T>())
        .fold(T::zero(), T::max)
}

/// Eigenvalues (ascending) and unitary eigenvectors (columns of `vectors`).
#[derive(Clone, Debug)]
pub struct Eigen<T> {
    pub values: Vec<T>,
    pub vectors: HermitianMatrix<T>,
    pub sweeps: usize,
}

const MAX_SWEEPS: usize = 60;

/// Cyclic Jacobi for complex Hermitian matrices.
///
/// Each rotation removes the phase of `a_pq` and applies the real Jacobi
/// rotation of the resulting symmetric 2×2 block. Only the Hermitian part of
/// the input is used.
pub fn hermitian_eigen<T: Real>(a: &HermitianMatrix<T>) -> Eigen<T> {
    let n = a.order();
    let mut m = a.clone();
    // symmetrize so round-off in the input cannot stall convergence
    for i in 0..n {
        m[(i, i)] = Complex::new(m[(i, i)].re, T::zero());
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * T::lit(0.5);
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    let mut v = HermitianMatrix::identity(n);
    let scale = m.max_abs().max(T::min_positive_value());
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)].norm_sqr();
            }
        }
        if off.sqrt() <= T::epsilon() * scale * T::lit(0.01) {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag = m.diag();
    order.sort_by(|&x, &y| diag[x].partial_cmp(&diag[y]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = HermitianMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    Eigen {
        values,
        vectors,
        sweeps,
    }
}

fn rotate<T: Real>(m: &mut HermitianMatrix<T>, v: &mut HermitianMatrix<T>, p: usize, q: usize) {
    let apq = m[(p, q)];
    let mag = apq.norm();
    if mag == T::zero() {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    if mag <= T::epsilon() * T::lit(1e-3) * (app.abs() + aqq.abs()) {
        m[(p, q)] = Complex::new(T::zero(), T::zero());
        m[(q, p)] = Complex::new(T::zero(), T::zero());
        return;
    }
    let e = apq / mag;
    let theta = (aqq - app) / (mag + mag);
    let t = {
        let s = if theta >= T::zero() { T::one() } else { -T::one() };
        s / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let c = (t * t + T::one()).sqrt().recip();
    let s = t * c;
    // J: J_pp = J_qq = c, J_pq = s e, J_qp = -s ē; M ← Jᴴ M J, V ← V J.
    let se = e * s;
    let n = m.order();
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * c - mkq * se.conj();
        m[(k, q)] = mkp * se + mkq * c;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * se.conj();
        v[(k, q)] = vkp * se + vkq * c;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = mpk * c - mqk * se;
        m[(q, k)] = mpk * se.conj() + mqk * c;
    }
    m[(p, q)] = Complex::new(T::zero(), T::zero());
    m[(q, p)] = Complex::new(T::zero(), T::zero());
    m[(p, p)] = Complex::new(m[(p, p)].re, T::zero());
    m[(q, q)] = Complex::new(m[(q, q)].re, T::zero());
}

/// `V f(Λ) Vᴴ`.
pub fn spectral_apply<T: Real>(eig: &Eigen<T>, f: impl Fn(T) -> T) -> HermitianMatrix<T> {
    let n = eig.values.len();
    let fl: Vec<T> = eig.values.iter().map(|&l| f(l)).collect();
    let v = &eig.vectors;
    let mut out = HermitianMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (l, &fv) in fl.iter().enumerate() {
                acc += v[(i, l)] * v[(j, l)].conj() * fv;
            }
            out[(i, j)] = acc;
            out[(j, i)] = acc.conj();
        }
        out[(i, i)].im = T::zero();
    }
    out
}

/// Smallest eigenvalue accepted as positive by [`inv_sqrt_eigen`].
pub fn pd_threshold<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(16.0))
}

/// `E^{-1/2}` through the eigendecomposition.
pub fn inv_sqrt_eigen<T: Real>(e: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>> {
    Ok(inv_sqrt_eigen_with(e)?.0)
}

/// Like [`inv_sqrt_eigen`] and also returns the decomposition used.
pub fn inv_sqrt_eigen_with<T: Real>(e: &HermitianMatrix<T>) -> Result<(HermitianMatrix<T>, Eigen<T>)> {
    let eig = hermitian_eigen(e);
    if let Some(&lo) = eig.values.first() {
        if !(lo > pd_threshold::<T>()) {
            return Err(Error::NotPositiveDefinite {
                eigenvalue: lo.as_f64(),
            });
        }
    }
    let f = spectral_apply(&eig, |l| l.sqrt().recip());
    Ok((f, eig))
}

/// Coefficients `binom(-1/2, i)` from `c_{i+1} = c_i (-1/2 - i)/(i + 1)`.
pub fn binomial_half_coefficients<T: Real>(count: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(count);
    let mut c = T::one();
    for i in 0..count {
        out.push(c);
        c = c * (T::lit(-0.5) - T::of_usize(i)) / T::of_usize(i + 1);
    }
    out
}

/// Hard cap on the number of series terms.
pub const MAX_SERIES_TERMS: usize = 20_000;

/// `E^{-1/2} = I + Σ_{i≥1} binom(-1/2, i) Bⁱ` with `B = E - I`, truncated
/// once a term's `|||·|||` drops below `tol`. Returns the sum and the number
/// of terms added after the identity.
pub fn inv_sqrt_series<T: Real>(e: &HermitianMatrix<T>, tol: T) -> Result<(HermitianMatrix<T>, usize)> {
    let n = e.order();
    let b = e.minus_identity();
    let norm_b = matrix_inf_norm(&b);
    if !(norm_b < T::one()) {
        return Err(Error::SeriesNotCertified {
            norm: norm_b.as_f64(),
        });
    }
    let mut f = HermitianMatrix::identity(n);
    if norm_b == T::zero() {
        return Ok((f, 0));
    }
    let mut power = HermitianMatrix::identity(n);
    let mut coef = T::one();
    let mut terms = 0;
    for i in 0..MAX_SERIES_TERMS {
        coef = coef * (T::lit(-0.5) - T::of_usize(i)) / T::of_usize(i + 1);
        power = power.mul(&b);
        let term_norm = coef.abs() * matrix_inf_norm(&power);
        f.add_scaled(&power, coef);
        terms += 1;
        if term_norm < tol {
            break;
        }
    }
    Ok((f, terms))
}

/// Default truncation tolerance for [`inv_sqrt_series`].
pub fn default_series_tol<T: Real>() -> T {
    T::epsilon() * T::lit(4096.0)
}

/// Seeded Hermitian `I + B` of order `n` with `|||B||| = b_norm`; `B` has a
/// real diagonal and complex off-diagonal entries, uniform before scaling.
pub fn seeded_perturbed_identity<T: Real>(n: usize, b_norm: T, seed: u64) -> HermitianMatrix<T> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut b = HermitianMatrix::<T>::zeros(n);
    for i in 0..n {
        b[(i, i)] = Complex::new(T::lit(rng.gen_range(-1.0..1.0)), T::zero());
        for j in (i + 1)..n {
            let z = Complex::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0)));
            b[(i, j)] = z;
            b[(j, i)] = z.conj();
        }
    }
    let norm = matrix_inf_norm(&b);
    let mut e = HermitianMatrix::identity(n);
    if norm > T::zero() {
        e.add_scaled(&b, b_norm / norm);
    }
    e
}
