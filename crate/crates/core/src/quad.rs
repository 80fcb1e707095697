//! Product quadrature on S²: Gauss-Legendre in `cos φ` times the uniform
//! rule in `θ`.
//!
//! With `n_φ ≥ N/2 + 1` and `n_θ ≥ N + 1` the rule integrates every
//! polynomial of Cartesian degree `≤ N` exactly. Nodes are generated ring by
//! ring on demand; only the two one-dimensional rules are stored.
//!
//! Reductions run in parallel over fixed chunks of rings and the chunk
//! results are merged in ring order, so results do not depend on the number
//! of worker threads.

use num_complex::Complex;
use rayon::prelude::*;

use crate::beams::GaussianBeam;
use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};
use crate::sphere::{Frame, UnitVec};

/// Upper bound on `n_φ · n_θ` accepted by the grid constructors.
pub const MAX_GRID_NODES: u64 = 1 << 31;

const RINGS_PER_CHUNK: usize = 16;

/// Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`.
///
/// Newton iteration on the three-term recurrence from the usual asymptotic
/// initial guess; evaluated in `f64` and converted.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre_f64(n);
    (
        x.into_iter().map(T::lit).collect(),
        w.into_iter().map(T::lit).collect(),
    )
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    // P'_n = n (x P_n - P_{n-1}) / (x² - 1)
    let dp = nf * (x * p1 - p0) / ((x - 1.0) * (x + 1.0));
    (p1, dp)
}

fn gauss_legendre_f64(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one node");
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // i-th largest root
        let theta = std::f64::consts::PI * (4.0 * i as f64 + 3.0) / (4.0 * nf + 2.0);
        let mut r = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, r);
            dp = d;
            let dx = p / d;
            r -= dx;
            if dx.abs() <= 4.0 * f64::EPSILON * r.abs().max(1e-3) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, r);
        if d.is_finite() {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - r) * (1.0 + r) * dp * dp);
        // ascending order: largest root goes last
        x[n - 1 - i] = r;
        x[i] = -r;
        w[n - 1 - i] = wi;
        w[i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Degree-`N` exact product rule.
#[derive(Clone, Debug)]
pub struct SphereGrid<T> {
    n_phi: usize,
    n_theta: usize,
    cos_phi: Vec<T>,
    sin_phi: Vec<T>,
    w_phi: Vec<T>,
    cos_theta: Vec<T>,
    sin_theta: Vec<T>,
    w_theta: T,
}

impl<T: Real> SphereGrid<T> {
    /// Exact for Cartesian polynomial degree `degree`.
    pub fn exact(degree: usize) -> Result<Self> {
        Self::with_counts(degree / 2 + 1, degree + 1)
    }

    /// Exact for `degree` and fine enough that a tube of half-width `w`
    /// spans at least `per_width` node spacings in both directions.
    pub fn for_tube(degree: usize, w: T, per_width: usize) -> Result<Self> {
        let need = (T::PI() * T::of_usize(per_width) / w).ceil().to_usize().ok_or_else(|| {
            Error::InvalidArgument(format!("tube width {w} too small"))
        })?;
        let n_phi = (degree / 2 + 1).max(need);
        Self::with_counts(n_phi, (degree + 1).max(2 * n_phi))
    }

    pub fn with_counts(n_phi: usize, n_theta: usize) -> Result<Self> {
        if n_phi == 0 || n_theta == 0 {
            return Err(Error::InvalidArgument("empty quadrature rule".into()));
        }
        let nodes = n_phi as u64 * n_theta as u64;
        if nodes > MAX_GRID_NODES {
            return Err(Error::GridTooLarge {
                nodes,
                budget: MAX_GRID_NODES,
            });
        }
        let (t, w) = gauss_legendre_f64(n_phi);
        let sin_phi = t
            .iter()
            .map(|&t| T::lit(((1.0 - t) * (1.0 + t)).max(0.0).sqrt()))
            .collect();
        let dtheta = std::f64::consts::TAU / n_theta as f64;
        let (sin_theta, cos_theta) = (0..n_theta)
            .map(|j| {
                let (s, c) = (dtheta * j as f64).sin_cos();
                (T::lit(s), T::lit(c))
            })
            .unzip();
        Ok(Self {
            n_phi,
            n_theta,
            cos_phi: t.into_iter().map(T::lit).collect(),
            sin_phi,
            w_phi: w.into_iter().map(T::lit).collect(),
            cos_theta,
            sin_theta,
            w_theta: T::lit(dtheta),
        })
    }

    /// The same rule with both node counts doubled.
    pub fn refined(&self) -> Result<Self> {
        Self::with_counts(2 * self.n_phi, 2 * self.n_theta)
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn len(&self) -> usize {
        self.n_phi * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest Cartesian degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        (2 * self.n_phi - 1).min(self.n_theta - 1)
    }

    /// Colatitude node spacing near the equator, `≈ π / n_φ`.
    pub fn spacing(&self) -> T {
        T::PI() / T::of_usize(self.n_phi)
    }

    #[inline]
    fn node(&self, i: usize, j: usize) -> (UnitVec<T>, T) {
        let s = self.sin_phi[i];
        (
            UnitVec::new_unchecked(s * self.cos_theta[j], s * self.sin_theta[j], self.cos_phi[i]),
            self.w_phi[i] * self.w_theta,
        )
    }

    /// All `(node, weight)` pairs, ring by ring.
    pub fn nodes(&self) -> impl Iterator<Item = (UnitVec<T>, T)> + '_ {
        (0..self.n_phi).flat_map(move |i| (0..self.n_theta).map(move |j| self.node(i, j)))
    }

    pub fn total_weight(&self) -> T {
        let mut acc = CompensatedSum::new();
        for w in &self.w_phi {
            acc.add(*w);
        }
        acc.value() * self.w_theta * T::of_usize(self.n_theta)
    }

    /// Deterministic parallel fold over all nodes.
    ///
    /// `visit` sees every node of one ring in order; ring chunks are reduced
    /// independently and merged with `merge` in ring order.
    pub fn reduce<A, I, V, M>(&self, init: I, visit: V, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync,
        V: Fn(&mut A, &UnitVec<T>, T) + Sync,
        M: Fn(&mut A, A),
    {
        let chunks: Vec<A> = (0..self.n_phi.div_ceil(RINGS_PER_CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut acc = init();
                let end = ((c + 1) * RINGS_PER_CHUNK).min(self.n_phi);
                for i in c * RINGS_PER_CHUNK..end {
                    for j in 0..self.n_theta {
                        let (y, w) = self.node(i, j);
                        visit(&mut acc, &y, w);
                    }
                }
                acc
            })
            .collect();
        let mut total = init();
        for c in chunks {
            merge(&mut total, c);
        }
        total
    }

    /// `∫ g` for a real integrand.
    pub fn integrate<G>(&self, g: G) -> T
    where
        G: Fn(&UnitVec<T>) -> T + Sync,
    {
        self.reduce(
            CompensatedSum::new,
            |acc, y, w| acc.add(w * g(y)),
            |a, b| a.add(b.value()),
        )
        .value()
    }
}

/// Exact product rule for Cartesian degree `degree`.
pub fn build_grid<T: Real>(degree: usize) -> Result<SphereGrid<T>> {
    SphereGrid::exact(degree)
}

/// A vector of complex functions on S² evaluated together at each node.
pub trait SphereField<T: Real>: Sync {
    fn width(&self) -> usize;

    fn eval_into(&self, y: &UnitVec<T>, out: &mut [Complex<T>]);
}

impl<T: Real> SphereField<T> for GaussianBeam<T> {
    fn width(&self) -> usize {
        1
    }

    fn eval_into(&self, y: &UnitVec<T>, out: &mut [Complex<T>]) {
        out[0] = self.eval(y);
    }
}

impl<T: Real> SphereField<T> for [GaussianBeam<T>] {
    fn width(&self) -> usize {
        self.len()
    }

    fn eval_into(&self, y: &UnitVec<T>, out: &mut [Complex<T>]) {
        for (o, b) in out.iter_mut().zip(self) {
            *o = b.eval(y);
        }
    }
}

impl<T: Real> SphereField<T> for Vec<GaussianBeam<T>> {
    fn width(&self) -> usize {
        self.len()
    }

    fn eval_into(&self, y: &UnitVec<T>, out: &mut [Complex<T>]) {
        self.as_slice().eval_into(y, out)
    }
}

/// Wraps a scalar closure as a width-one field.
pub struct FnField<F>(pub F);

impl<T, F> SphereField<T> for FnField<F>
where
    T: Real,
    F: Fn(&UnitVec<T>) -> Complex<T> + Sync,
{
    fn width(&self) -> usize {
        1
    }

    fn eval_into(&self, y: &UnitVec<T>, out: &mut [Complex<T>]) {
        out[0] = (self.0)(y);
    }
}

struct Scratch<T, A> {
    vals: Vec<Complex<T>>,
    acc: A,
}

fn with_scratch<T: Real, A>(width: usize, acc: A) -> Scratch<T, A> {
    Scratch {
        vals: vec![Complex::new(T::zero(), T::zero()); width],
        acc,
    }
}

/// `⟨f, g⟩ = ∫ f ḡ` for two scalar functions.
pub fn inner_product<T, F, G>(f: &F, g: &G, grid: &SphereGrid<T>) -> Complex<T>
where
    T: Real,
    F: SphereField<T> + ?Sized,
    G: SphereField<T> + ?Sized,
{
    let res = grid.reduce(
        || with_scratch::<T, _>(2, [CompensatedSum::new(), CompensatedSum::new()]),
        |s, y, w| {
            f.eval_into(y, &mut s.vals[..1]);
            g.eval_into(y, &mut s.vals[1..2]);
            let z = s.vals[0] * s.vals[1].conj();
            s.acc[0].add(w * z.re);
            s.acc[1].add(w * z.im);
        },
        |a, b| {
            a.acc[0].add(b.acc[0].value());
            a.acc[1].add(b.acc[1].value());
        },
    );
    Complex::new(res.acc[0].value(), res.acc[1].value())
}

/// Matrix of `⟨f_i, f_j⟩` (row-major). Only the upper triangle is summed;
/// the lower one is its conjugate, so the result is exactly Hermitian.
pub fn gram_by_quadrature<T, F>(field: &F, grid: &SphereGrid<T>) -> Vec<Complex<T>>
where
    T: Real,
    F: SphereField<T> + ?Sized,
{
    let n = field.width();
    let zero = Complex::new(T::zero(), T::zero());
    let res = grid.reduce(
        || with_scratch::<T, _>(n, vec![zero; n * n]),
        |s, y, w| {
            field.eval_into(y, &mut s.vals);
            for i in 0..n {
                let fi = s.vals[i];
                if fi.re == T::zero() && fi.im == T::zero() {
                    continue;
                }
                let fi = fi * w;
                for j in i..n {
                    s.acc[i * n + j] += fi * s.vals[j].conj();
                }
            }
        },
        |a, b| {
            for (x, y) in a.acc.iter_mut().zip(b.acc) {
                *x += y;
            }
        },
    );
    let mut g = res.acc;
    for i in 0..n {
        g[i * n + i].im = T::zero();
        for j in 0..i {
            g[i * n + j] = g[j * n + i].conj();
        }
    }
    g
}

#[inline]
fn abs_pow<T: Real>(r2: T, p: T) -> T {
    let half = p * T::lit(0.5);
    let hi = half.round();
    if hi == half && hi <= T::lit(64.0) {
        r2.powi(hi.to_i32().unwrap_or(1))
    } else {
        r2.powf(half)
    }
}

/// Lᵖ norms of every component of `field`; `result[pi][i]` for `ps[pi]`.
///
/// `p = ∞` is the largest modulus over the nodes.
pub fn lp_norms<T, F>(field: &F, ps: &[T], grid: &SphereGrid<T>) -> Result<Vec<Vec<T>>>
where
    T: Real,
    F: SphereField<T> + ?Sized,
{
    for &p in ps {
        if p.is_nan() || p < T::one() {
            return Err(Error::InvalidExponent(p.as_f64()));
        }
    }
    let n = field.width();
    let np = ps.len();
    let zero = Complex::new(T::zero(), T::zero());
    let res = grid.reduce(
        || Scratch {
            vals: vec![zero; n],
            acc: vec![T::zero(); n * np],
        },
        |s, y, w| {
            field.eval_into(y, &mut s.vals);
            for (i, v) in s.vals.iter().enumerate() {
                let r2 = v.norm_sqr();
                if r2 == T::zero() {
                    continue;
                }
                for (pi, &p) in ps.iter().enumerate() {
                    let slot = &mut s.acc[pi * n + i];
                    if p.is_infinite() {
                        *slot = slot.max(r2.sqrt());
                    } else {
                        *slot += w * abs_pow(r2, p);
                    }
                }
            }
        },
        |a, b| {
            for (pi, &p) in ps.iter().enumerate() {
                for i in 0..n {
                    let (x, y) = (&mut a.acc[pi * n + i], b.acc[pi * n + i]);
                    if p.is_infinite() {
                        *x = x.max(y);
                    } else {
                        *x += y;
                    }
                }
            }
        },
    );
    Ok(ps
        .iter()
        .enumerate()
        .map(|(pi, &p)| {
            (0..n)
                .map(|i| {
                    let v = res.acc[pi * n + i];
                    if p.is_infinite() {
                        v
                    } else {
                        v.powf(p.recip())
                    }
                })
                .collect()
        })
        .collect())
}

/// `(∫|f|^p)^{1/p}` for a scalar function.
pub fn lp_norm<T, F>(f: &F, p: T, grid: &SphereGrid<T>) -> Result<T>
where
    T: Real,
    F: SphereField<T> + ?Sized,
{
    Ok(lp_norms(f, &[p], grid)?[0][0])
}

/// True for even integer `p`, where `|f|^p` is a polynomial when `f` is.
pub fn is_even_exponent<T: Real>(p: T) -> bool {
    p.is_finite() && (p * T::lit(0.5)).fract() == T::zero()
}

/// An Lᵖ norm with its resolution-doubling history.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpEstimate<T> {
    pub p: T,
    pub value: T,
    /// Value on the previous (half-resolution) grid, when one was computed.
    pub previous: Option<T>,
    pub rel_change: Option<T>,
    /// `true` for even `p` on an exact grid, or when the doubling
    /// tolerance was met.
    pub converged: bool,
    /// Whether the value is exact (even `p`, grid degree sufficient).
    pub exact: bool,
    pub n_phi: usize,
    pub n_theta: usize,
}

/// Norms of all components for every `p`, starting on `grid`.
///
/// Even `p` are taken as exact when the grid integrates degree
/// `p·field_degree`; every other finite `p` is recomputed on doubled grids
/// until the relative change drops below `rel_tol` or `max_doublings` is hit.
/// `p = ∞` is returned from the base grid with `converged = false`; use a
/// dedicated sup-norm routine for it.
pub fn lp_norms_converged<T, F>(
    field: &F,
    field_degree: usize,
    ps: &[T],
    grid: &SphereGrid<T>,
    rel_tol: T,
    max_doublings: usize,
) -> Result<Vec<Vec<LpEstimate<T>>>>
where
    T: Real,
    F: SphereField<T> + ?Sized,
{
    let base = lp_norms(field, ps, grid)?;
    let mut out: Vec<Vec<LpEstimate<T>>> = ps
        .iter()
        .zip(&base)
        .map(|(&p, vals)| {
            let exact = is_even_exponent(p)
                && p.to_usize().unwrap_or(usize::MAX).saturating_mul(field_degree.max(1))
                    <= grid.exact_degree();
            vals.iter()
                .map(|&v| LpEstimate {
                    p,
                    value: v,
                    previous: None,
                    rel_change: None,
                    converged: exact,
                    exact,
                    n_phi: grid.n_phi(),
                    n_theta: grid.n_theta(),
                })
                .collect()
        })
        .collect();
    let mut current = grid.clone();
    for _ in 0..max_doublings {
        let pending: Vec<usize> = (0..ps.len())
            .filter(|&pi| ps[pi].is_finite() && out[pi].iter().any(|e| !e.converged))
            .collect();
        if pending.is_empty() {
            break;
        }
        current = current.refined()?;
        let sub: Vec<T> = pending.iter().map(|&pi| ps[pi]).collect();
        let vals = lp_norms(field, &sub, &current)?;
        for (slot, &pi) in pending.iter().enumerate() {
            for (e, &v) in out[pi].iter_mut().zip(&vals[slot]) {
                let change = if v > T::zero() {
                    (v - e.value).abs() / v
                } else {
                    (v - e.value).abs()
                };
                *e = LpEstimate {
                    p: e.p,
                    value: v,
                    previous: Some(e.value),
                    rel_change: Some(change),
                    converged: change <= rel_tol,
                    exact: false,
                    n_phi: current.n_phi(),
                    n_theta: current.n_theta(),
                };
            }
        }
    }
    Ok(out)
}

/// `∫₀^π sin φ cos^{2k}(φ/2) dφ`, by the colatitude rule of the sphere grid
/// (in `t = cos φ` the integrand is `((1+t)/2)^k`). Equals `2/(k+1)`.
pub fn integral_identity_check<T: Real>(k: u32) -> T {
    let (t, w) = gauss_legendre::<T>(k as usize / 2 + 1);
    let mut acc = CompensatedSum::new();
    for (ti, wi) in t.iter().zip(&w) {
        acc.add(*wi * ((T::one() + *ti) * T::lit(0.5)).powi(k as i32));
    }
    acc.value()
}

/// `L²` mass inside a tube around a great circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubeMass<T> {
    pub mass_in: T,
    pub mass_total: T,
    /// Set when the colatitude spacing exceeds a quarter of the tube width.
    pub under_resolved: bool,
}

impl<T: Real> TubeMass<T> {
    pub fn mass_out(&self) -> T {
        self.mass_total - self.mass_in
    }
}

fn under_resolved<T: Real>(grid: &SphereGrid<T>, w: T) -> bool {
    T::of_usize(grid.n_phi()) < T::lit(4.0) * T::PI() / w
}

/// `∫_{G^w} |f_i|²` where `G^w` is the set of points within angle `w` of the
/// great circle of `frames[i]`. Membership is a sharp test at each node.
pub fn tube_masses<T, F>(
    field: &F,
    frames: &[Frame<T>],
    w: T,
    grid: &SphereGrid<T>,
) -> Result<Vec<TubeMass<T>>>
where
    T: Real,
    F: SphereField<T> + ?Sized,
{
    let n = field.width();
    if frames.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} frames for a field of width {n}",
            frames.len()
        )));
    }
    if !(w > T::zero() && w <= T::FRAC_PI_2()) {
        return Err(Error::InvalidArgument(format!(
            "tube half-width must lie in (0, π/2], got {w}"
        )));
    }
    let full = w >= T::FRAC_PI_2();
    let sin_w = w.sin();
    let zero = Complex::new(T::zero(), T::zero());
    let res = grid.reduce(
        || Scratch {
            vals: vec![zero; n],
            acc: vec![(CompensatedSum::new(), CompensatedSum::new()); n],
        },
        |s, y, wt| {
            field.eval_into(y, &mut s.vals);
            for i in 0..n {
                let m = wt * s.vals[i].norm_sqr();
                s.acc[i].1.add(m);
                if full || frames[i].pole.dot(y).abs() <= sin_w {
                    s.acc[i].0.add(m);
                }
            }
        },
        |a, b| {
            for (x, y) in a.acc.iter_mut().zip(b.acc) {
                x.0.add(y.0.value());
                x.1.add(y.1.value());
            }
        },
    );
    let flag = under_resolved(grid, w);
    Ok(res
        .acc
        .iter()
        .map(|(i, t)| TubeMass {
            mass_in: i.value(),
            mass_total: t.value(),
            under_resolved: flag,
        })
        .collect())
}

pub fn tube_mass<T, F>(f: &F, frame: &Frame<T>, w: T, grid: &SphereGrid<T>) -> Result<TubeMass<T>>
where
    T: Real,
    F: SphereField<T> + ?Sized,
{
    Ok(tube_masses(f, std::slice::from_ref(frame), w, grid)?[0])
}

/// `max |f_i|` over the grid nodes and over oversampled bands around the
/// given great circles (4× the grid's longitude count along each circle,
/// five transverse offsets within half a colatitude spacing).
pub fn sup_norms<T, F>(field: &F, grid: &SphereGrid<T>, circles: &[Frame<T>]) -> Vec<T>
where
    T: Real,
    F: SphereField<T> + ?Sized,
{
    let n = field.width();
    let zero = Complex::new(T::zero(), T::zero());
    let mut best = lp_norms(field, &[T::infinity()], grid)
        .expect("∞ is admissible")
        .remove(0);
    let samples = 4 * grid.n_theta();
    let h = grid.spacing();
    let offsets: Vec<T> = [-0.5, -0.25, 0.0, 0.25, 0.5]
        .iter()
        .map(|&o| h * T::lit(o))
        .collect();
    let per_circle: Vec<Vec<T>> = circles
        .par_iter()
        .map(|f| {
            let mut vals = vec![zero; n];
            let mut local = vec![T::zero(); n];
            let step = T::TAU() / T::of_usize(samples);
            for j in 0..samples {
                let (st, ct) = (step * T::of_usize(j)).sin_cos();
                for &off in &offsets {
                    let (so, co) = off.sin_cos();
                    let y = UnitVec::new_unchecked(
                        co * (ct * f.a.x1 + st * f.b.x1) + so * f.pole.x1,
                        co * (ct * f.a.x2 + st * f.b.x2) + so * f.pole.x2,
                        co * (ct * f.a.x3 + st * f.b.x3) + so * f.pole.x3,
                    );
                    field.eval_into(&y, &mut vals);
                    for (l, v) in local.iter_mut().zip(&vals) {
                        *l = l.max(v.norm());
                    }
                }
            }
            local
        })
        .collect();
    for local in per_circle {
        for (b, l) in best.iter_mut().zip(local) {
            *b = b.max(l);
        }
    }
    best
}
