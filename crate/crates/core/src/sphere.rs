//! Unit-sphere geometry: points, orthonormal frames, pole sets and the
//! latitude strips used by the row-sum estimate.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Number of farthest-point repulsion sweeps applied after the spiral lattice.
pub const REPULSION_SWEEPS: usize = 200;

/// A point on S², stored by its Cartesian components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVec<T> {
    pub x1: T,
    pub x2: T,
    pub x3: T,
}

impl<T: Real> UnitVec<T> {
    /// Normalizes `(x1, x2, x3)`; `None` for the zero vector or non-finite input.
    pub fn new(x1: T, x2: T, x3: T) -> Option<Self> {
        let n = (x1 * x1 + x2 * x2 + x3 * x3).sqrt();
        if !(n > T::zero()) || !n.is_finite() {
            return None;
        }
        Some(Self {
            x1: x1 / n,
            x2: x2 / n,
            x3: x3 / n,
        })
    }

    /// Trusts the caller that the components already have unit length.
    #[inline]
    pub const fn new_unchecked(x1: T, x2: T, x3: T) -> Self {
        Self { x1, x2, x3 }
    }

    pub fn from_array(v: [T; 3]) -> Option<Self> {
        Self::new(v[0], v[1], v[2])
    }

    /// Colatitude `phi` in [0, π] and longitude `theta`.
    pub fn from_polar(phi: T, theta: T) -> Self {
        let (s, c) = phi.sin_cos();
        Self::new_unchecked(s * theta.cos(), s * theta.sin(), c)
    }

    pub fn north() -> Self {
        Self::new_unchecked(T::zero(), T::zero(), T::one())
    }

    pub fn e1() -> Self {
        Self::new_unchecked(T::one(), T::zero(), T::zero())
    }

    pub fn e2() -> Self {
        Self::new_unchecked(T::zero(), T::one(), T::zero())
    }

    #[inline]
    pub fn to_array(self) -> [T; 3] {
        [self.x1, self.x2, self.x3]
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> T {
        self.x1 * o.x1 + self.x2 * o.x2 + self.x3 * o.x3
    }

    #[inline]
    pub fn cross(&self, o: &Self) -> [T; 3] {
        cross(self.to_array(), o.to_array())
    }

    pub fn neg(self) -> Self {
        Self::new_unchecked(-self.x1, -self.x2, -self.x3)
    }

    /// Geodesic angle in [0, π], via `atan2(|x × y|, x · y)`.
    pub fn angle_to(&self, o: &Self) -> T {
        norm(self.cross(o)).atan2(self.dot(o))
    }

    /// `|x|² - 1`.
    pub fn norm_defect(&self) -> T {
        self.dot(self) - T::one()
    }
}

#[inline]
pub(crate) fn cross<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn norm<T: Real>(a: [T; 3]) -> T {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

#[inline]
fn dot3<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Right-handed orthonormal triple with `a × b = pole`.
///
/// The great circle orthogonal to `pole` is spanned by `a` and `b`; a beam
/// built on this frame propagates from `a` towards `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame<T> {
    pub a: UnitVec<T>,
    pub b: UnitVec<T>,
    pub pole: UnitVec<T>,
}

impl<T: Real> Frame<T> {
    pub fn north() -> Self {
        canonical_frame(&UnitVec::north())
    }

    /// The same frame turned by `alpha` inside its own great circle.
    pub fn rotated_in_plane(&self, alpha: T) -> Self {
        let (s, c) = alpha.sin_cos();
        let a = [
            c * self.a.x1 + s * self.b.x1,
            c * self.a.x2 + s * self.b.x2,
            c * self.a.x3 + s * self.b.x3,
        ];
        let b = [
            -s * self.a.x1 + c * self.b.x1,
            -s * self.a.x2 + c * self.b.x2,
            -s * self.a.x3 + c * self.b.x3,
        ];
        Self {
            a: UnitVec::new_unchecked(a[0], a[1], a[2]),
            b: UnitVec::new_unchecked(b[0], b[1], b[2]),
            pole: self.pole,
        }
    }

    /// Applies a rotation matrix (row-major) to all three axes.
    pub fn rotate(&self, r: &[[T; 3]; 3]) -> Self {
        let apply = |v: &UnitVec<T>| {
            let x = v.to_array();
            UnitVec::new_unchecked(dot3(r[0], x), dot3(r[1], x), dot3(r[2], x))
        };
        Self {
            a: apply(&self.a),
            b: apply(&self.b),
            pole: apply(&self.pole),
        }
    }

    /// Largest deviation from orthonormality and right-handedness.
    pub fn orthonormality_defect(&self) -> T {
        let ab = cross(self.a.to_array(), self.b.to_array());
        let p = self.pole.to_array();
        let mut worst = self
            .a
            .dot(&self.b)
            .abs()
            .max(self.a.dot(&self.pole).abs())
            .max(self.b.dot(&self.pole).abs())
            .max(self.a.norm_defect().abs())
            .max(self.b.norm_defect().abs())
            .max(self.pole.norm_defect().abs());
        for i in 0..3 {
            worst = worst.max((ab[i] - p[i]).abs());
        }
        worst
    }
}

/// Deterministic frame for a pole: the minimal rotation taking `e₃` to `p`
/// applied to `(e₁, e₂)`. Continuous away from `-e₃`; at `-e₃` returns
/// `(e₁, -e₂, -e₃)`.
pub fn canonical_frame<T: Real>(p: &UnitVec<T>) -> Frame<T> {
    let (x, y, z) = (p.x1, p.x2, p.x3);
    let rho2 = x * x + y * y;
    if rho2 == T::zero() {
        return if z > T::zero() {
            Frame {
                a: UnitVec::e1(),
                b: UnitVec::e2(),
                pole: UnitVec::north(),
            }
        } else {
            Frame {
                a: UnitVec::e1(),
                b: UnitVec::e2().neg(),
                pole: UnitVec::north().neg(),
            }
        };
    }
    // 1 + z loses everything near the south pole; rebuild it from x² + y².
    let one_plus_z = if z >= T::zero() {
        T::one() + z
    } else {
        rho2 / (T::one() - z)
    };
    let kx = x / one_plus_z;
    let a = [T::one() - x * kx, -y * kx, -x];
    let pa = p.to_array();
    // One Gram-Schmidt pass against the pole, then b = p × a.
    let proj = dot3(a, pa);
    let a = [a[0] - proj * pa[0], a[1] - proj * pa[1], a[2] - proj * pa[2]];
    let a = UnitVec::from_array(a).expect("rotated e1 is never zero");
    let b = UnitVec::from_array(cross(pa, a.to_array())).expect("p ⟂ a");
    Frame { a, b, pole: *p }
}

/// `m` poles on S² with their closest-pair separation.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleSet<T> {
    pub poles: Vec<UnitVec<T>>,
    /// Smallest pairwise geodesic angle; `+∞` when fewer than two poles.
    pub d_min: T,
    pub seed: u64,
    /// Density and degree, when the set was sized as `⌊D(2k+1)⌋`.
    pub density: Option<T>,
    pub k: Option<u32>,
}

impl<T: Real> PoleSet<T> {
    pub fn from_poles(poles: Vec<UnitVec<T>>, seed: u64) -> Self {
        let d_min = min_separation(&poles);
        Self {
            poles,
            d_min,
            seed,
            density: None,
            k: None,
        }
    }

    /// Pole set of size `⌊D(2k+1)⌋`.
    pub fn for_density(density: T, k: u32, seed: u64) -> Result<Self> {
        let m = pole_count(density, k)?;
        let mut ps = generate_poles(m, seed);
        ps.density = Some(density);
        ps.k = Some(k);
        Ok(ps)
    }

    pub fn m(&self) -> usize {
        self.poles.len()
    }

    /// Text form: a `# m=.. seed=.. d_min=..` header, then one `x y z` line per pole.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# m={} seed={} d_min={}",
            self.m(),
            self.seed,
            self.d_min.as_f64()
        );
        for p in &self.poles {
            let _ = writeln!(out, "{} {} {}", p.x1.as_f64(), p.x2.as_f64(), p.x3.as_f64());
        }
        out
    }

    /// Parses [`PoleSet::to_text`] output. `d_min` is recomputed from the
    /// poles; the header value must agree with it.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let header = header.trim().strip_prefix('#').ok_or(Error::Parse {
            line: 1,
            msg: "header must start with '#'".into(),
        })?;
        let mut m = None;
        let mut seed = None;
        for field in header.split_whitespace() {
            if let Some(v) = field.strip_prefix("m=") {
                m = v.parse::<usize>().ok();
            } else if let Some(v) = field.strip_prefix("seed=") {
                seed = v.parse::<u64>().ok();
            }
        }
        let (m, seed) = match (m, seed) {
            (Some(m), Some(s)) => (m, s),
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "header needs m= and seed=".into(),
                })
            }
        };
        let mut poles = Vec::with_capacity(m);
        for (idx, line) in lines {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: e.to_string(),
                })?;
            if vals.len() != 3 {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected 3 values, found {}", vals.len()),
                });
            }
            let p = UnitVec::new(T::lit(vals[0]), T::lit(vals[1]), T::lit(vals[2])).ok_or(
                Error::Parse {
                    line: idx + 1,
                    msg: "zero vector".into(),
                },
            )?;
            poles.push(p);
        }
        if poles.len() != m {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header announces {m} poles, found {}", poles.len()),
            });
        }
        Ok(Self::from_poles(poles, seed))
    }
}

/// `⌊D(2k+1)⌋`.
pub fn pole_count<T: Real>(density: T, k: u32) -> Result<usize> {
    if !(density > T::zero() && density < T::one()) {
        return Err(Error::InvalidArgument(format!(
            "density must lie in (0, 1), got {density}"
        )));
    }
    let raw = density * T::lit(f64::from(2 * k + 1));
    // Guard against 0.02 * 1025 = 20.499999.. style rounding only at exact integers.
    let nearest = raw.round();
    let m = if (raw - nearest).abs() <= raw * T::epsilon() * T::lit(8.0) {
        nearest
    } else {
        raw.floor()
    };
    Ok(m.to_usize().unwrap_or(0))
}

/// Smallest pairwise angle; `+∞` for fewer than two points.
pub fn min_separation<T: Real>(poles: &[UnitVec<T>]) -> T {
    let mut best = T::infinity();
    for i in 0..poles.len() {
        for j in (i + 1)..poles.len() {
            best = best.min(poles[i].angle_to(&poles[j]));
        }
    }
    best
}

/// Fibonacci spiral lattice under a seeded random rotation, refined by
/// [`REPULSION_SWEEPS`] farthest-point repulsion sweeps.
pub fn generate_poles<T: Real>(m: usize, seed: u64) -> PoleSet<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rot = random_rotation(&mut rng);
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut pts: Vec<[f64; 3]> = (0..m)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / m as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let lon = golden * i as f64;
            let v = [r * lon.cos(), r * lon.sin(), z];
            normalize(mat_vec(&rot, v))
        })
        .collect();
    repel(&mut pts, REPULSION_SWEEPS);
    let poles = pts
        .into_iter()
        .map(|v| UnitVec::new(T::lit(v[0]), T::lit(v[1]), T::lit(v[2])).expect("unit"))
        .collect();
    PoleSet::from_poles(poles, seed)
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = norm(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

fn mat_vec(r: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [dot3(r[0], v), dot3(r[1], v), dot3(r[2], v)]
}

/// `n` frames drawn uniformly from SO(3) (uniform pole, uniform phase).
pub fn random_frames<T: Real>(n: usize, seed: u64) -> Vec<Frame<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = random_rotation(&mut rng);
            let r = r.map(|row| row.map(T::lit));
            Frame::north().rotate(&r)
        })
        .collect()
}

/// Uniform rotation from a random unit quaternion.
pub(crate) fn random_rotation<R: Rng>(rng: &mut R) -> [[f64; 3]; 3] {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
        b * (tau * u3).cos(),
    );
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
        ],
        [
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
        ],
        [
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// Index and cosine of the nearest other point.
fn nearest(pts: &[[f64; 3]], i: usize, x: [f64; 3]) -> (usize, f64) {
    let mut best = (usize::MAX, -2.0);
    for (j, p) in pts.iter().enumerate() {
        if j != i {
            let c = dot3(x, *p);
            if c > best.1 {
                best = (j, c);
            }
        }
    }
    best
}

fn repel(pts: &mut [[f64; 3]], sweeps: usize) {
    let m = pts.len();
    if m < 2 {
        return;
    }
    for sweep in 0..sweeps {
        let schedule = 0.5 * (1.0 - sweep as f64 / sweeps as f64);
        for i in 0..m {
            let x = pts[i];
            let (j, c) = nearest(pts, i, x);
            let y = pts[j];
            // Tangent direction at x pointing away from y.
            let mut v = [x[0] * c - y[0], x[1] * c - y[1], x[2] * c - y[2]];
            let mut vn = norm(v);
            if vn < 1e-12 {
                if c < 0.0 {
                    continue; // antipodal pair, nothing to gain
                }
                // Coincident: leave along the canonical tangent.
                let f = canonical_frame(&UnitVec::new_unchecked(x[0], x[1], x[2]));
                v = f.a.to_array();
                vn = 1.0;
            }
            let dir = [v[0] / vn, v[1] / vn, v[2] / vn];
            let gap = c.clamp(-1.0, 1.0).acos();
            let mut step = schedule * gap.max(1e-3);
            for _ in 0..2 {
                let (s, co) = step.sin_cos();
                let cand = normalize([
                    co * x[0] + s * dir[0],
                    co * x[1] + s * dir[1],
                    co * x[2] + s * dir[2],
                ]);
                let (_, c_new) = nearest(pts, i, cand);
                if c_new <= c {
                    pts[i] = cand;
                    break;
                }
                step *= 0.5;
            }
        }
    }
}

/// Pairwise separation against the packing bounds `1/√m ≤ d ≤ 6/√m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparationReport<T> {
    pub d_min: T,
    pub lower: T,
    pub upper: T,
    pub pass: bool,
    /// Set when `m < 2`; `pass` is then vacuously true.
    pub degenerate: bool,
}

pub fn check_separation<T: Real>(ps: &PoleSet<T>) -> SeparationReport<T> {
    let m = ps.m();
    if m < 2 {
        return SeparationReport {
            d_min: ps.d_min,
            lower: T::zero(),
            upper: T::infinity(),
            pass: true,
            degenerate: true,
        };
    }
    let sq = T::of_usize(m).sqrt();
    let lower = T::one() / sq;
    let upper = T::lit(6.0) / sq;
    SeparationReport {
        d_min: ps.d_min,
        lower,
        upper,
        pass: lower <= ps.d_min && ps.d_min <= upper,
        degenerate: false,
    }
}

/// `π / ⌈π/d⌉`, so that the strips tile `[0, π]` exactly and `d/2 ≤ δ ≤ d`.
pub fn build_delta<T: Real>(d: T) -> T {
    T::PI() / strip_total(d)
}

fn strip_total<T: Real>(width: T) -> T {
    let q = T::PI() / width;
    // π/(π/n) must give back n rather than n + 1.
    (q - q * T::epsilon() * T::lit(8.0)).ceil().max(T::one())
}

/// Pole tallies in the latitude strips around one reference pole.
#[derive(Clone, Debug, PartialEq)]
pub struct StripPartition<T> {
    pub delta: T,
    pub n_strips: usize,
    /// `counts[l-1]` = number of other poles at angle in `((l-1)δ, lδ]`.
    pub counts: Vec<usize>,
}

/// Strips are half-open `((l-1)δ, lδ]`; the reference pole is excluded and
/// a coincident pole (angle 0) is assigned to the first strip.
pub fn strip_counts<T: Real>(ps: &PoleSet<T>, i: usize, delta: T) -> Result<StripPartition<T>> {
    if !(delta > T::zero() && delta <= T::PI() * (T::one() + T::epsilon())) {
        return Err(Error::InvalidArgument(format!(
            "strip width must lie in (0, π], got {delta}"
        )));
    }
    if i >= ps.m() && ps.m() > 0 {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: ps.m(),
        });
    }
    let n = strip_total(delta).to_usize().unwrap_or(1);
    let mut counts = vec![0usize; n];
    if ps.m() > 0 {
        let xi = ps.poles[i];
        let tol = T::lit(1e-12);
        for (j, xj) in ps.poles.iter().enumerate() {
            if j == i {
                continue;
            }
            let ratio = xi.angle_to(xj) / delta;
            let l = (ratio - tol).ceil().to_usize().unwrap_or(0).clamp(1, n);
            counts[l - 1] += 1;
        }
    }
    Ok(StripPartition {
        delta,
        n_strips: n,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn octahedron() -> PoleSet<f64> {
        let v = |x: f64, y: f64, z: f64| UnitVec::new(x, y, z).unwrap();
        PoleSet::from_poles(
            vec![
                v(0., 0., 1.),
                v(1., 0., 0.),
                v(0., 1., 0.),
                v(-1., 0., 0.),
                v(0., -1., 0.),
                v(0., 0., -1.),
            ],
            0,
        )
    }

    #[test]
    fn random_frames_are_orthonormal_and_seeded() {
        let a = random_frames::<f64>(50, 9);
        assert_eq!(a, random_frames::<f64>(50, 9));
        assert!(a.iter().all(|f| f.orthonormality_defect() < 1e-14));
        let mean_z: f64 = a.iter().map(|f| f.pole.x3).sum::<f64>() / 50.0;
        assert!(mean_z.abs() < 0.3);
    }

    #[test]
    fn single_pole_reports_infinite_separation() {
        let ps = generate_poles::<f64>(1, 3);
        assert_eq!(ps.m(), 1);
        assert!(ps.d_min.is_infinite());
        let rep = check_separation(&ps);
        assert!(rep.pass && rep.degenerate);
    }

    #[test]
    fn two_poles_become_nearly_antipodal() {
        for seed in 0..5 {
            let ps = generate_poles::<f64>(2, seed);
            assert!(ps.d_min >= 3.0, "seed {seed}: d_min = {}", ps.d_min);
        }
    }

    #[test]
    fn hundred_poles_within_packing_bounds() {
        let ps = generate_poles::<f64>(100, 7);
        assert!(ps.d_min >= 0.1 && ps.d_min <= 0.6, "{}", ps.d_min);
        assert!(check_separation(&ps).pass);
    }

    #[test]
    fn four_hundred_poles_pass_separation() {
        let ps = generate_poles::<f64>(400, 0);
        assert!(check_separation(&ps).pass, "{}", ps.d_min);
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_poles::<f64>(37, 11);
        let b = generate_poles::<f64>(37, 11);
        assert_eq!(a, b);
        let c = generate_poles::<f64>(37, 12);
        assert_ne!(a.poles, c.poles);
    }

    #[test]
    fn octahedron_separation() {
        let rep = check_separation(&octahedron());
        assert!((rep.d_min - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((rep.lower - 0.408_248_290_463_863).abs() < 1e-12);
        assert!((rep.upper - 2.449_489_742_783_178).abs() < 1e-12);
        assert!(rep.pass);
    }

    #[test]
    fn coincident_poles_fail_separation() {
        let p = UnitVec::new(0.3, -0.2, 0.9).unwrap();
        let ps = PoleSet::from_poles(vec![p, p], 0);
        let rep = check_separation(&ps);
        assert_eq!(rep.d_min, 0.0);
        assert!(!rep.pass);
    }

    #[test]
    fn canonical_frame_at_poles() {
        let f = canonical_frame(&UnitVec::<f64>::north());
        assert_eq!(f.a.to_array(), [1.0, 0.0, 0.0]);
        assert_eq!(f.b.to_array(), [0.0, 1.0, 0.0]);
        let s = canonical_frame(&UnitVec::<f64>::north().neg());
        assert_eq!(s.a.to_array(), [1.0, 0.0, 0.0]);
        assert_eq!(s.b.to_array(), [0.0, -1.0, 0.0]);
        assert_eq!(s.orthonormality_defect(), 0.0);
    }

    #[test]
    fn canonical_frame_near_south_pole_stays_orthonormal() {
        let p = UnitVec::new(1e-9, -2e-9, -1.0).unwrap();
        let f = canonical_frame(&p);
        assert!(f.orthonormality_defect() < 1e-14);
    }

    #[test]
    fn canonical_frame_is_continuous_off_south_pole() {
        let p = UnitVec::new(0.2, 0.5, 0.3).unwrap();
        let q = UnitVec::new(0.2 + 1e-8, 0.5, 0.3).unwrap();
        let (f, g) = (canonical_frame(&p), canonical_frame(&q));
        let diff = f
            .a
            .to_array()
            .iter()
            .zip(g.a.to_array())
            .map(|(x, y): (&f64, f64)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-7);
    }

    #[test]
    fn build_delta_examples() {
        let pi = std::f64::consts::PI;
        assert!((build_delta(pi) - pi).abs() < 1e-15);
        assert!((build_delta(1.0) - pi / 4.0).abs() < 1e-15);
        let d = build_delta(0.3);
        assert!((d - pi / 11.0).abs() < 1e-15);
        assert!((0.15..=0.3).contains(&d));
        // d = π/n exactly must not spill into an extra strip.
        assert!((build_delta(pi / 7.0) - pi / 7.0).abs() < 1e-15);
    }

    #[test]
    fn octahedron_strips() {
        let sp = strip_counts(&octahedron(), 0, std::f64::consts::FRAC_PI_2).unwrap();
        assert_eq!(sp.n_strips, 2);
        assert_eq!(sp.counts, vec![4, 1]);
    }

    #[test]
    fn single_pole_strips_are_empty() {
        let ps = generate_poles::<f64>(1, 0);
        let sp = strip_counts(&ps, 0, 0.5).unwrap();
        assert!(sp.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn first_strip_holds_few_poles() {
        let ps = generate_poles::<f64>(200, 1);
        let delta = build_delta(ps.d_min);
        for i in 0..ps.m() {
            let sp = strip_counts(&ps, i, delta).unwrap();
            assert!(sp.counts[0] <= 7);
            assert_eq!(sp.counts.iter().sum::<usize>(), ps.m() - 1);
        }
    }

    #[test]
    fn text_round_trip() {
        let ps = generate_poles::<f64>(9, 5);
        let text = ps.to_text();
        assert!(text.starts_with("# m=9 seed=5 d_min="));
        let back = PoleSet::<f64>::from_text(&text).unwrap();
        assert_eq!(back.poles, ps.poles);
        assert_eq!(back.d_min, ps.d_min);
    }

    #[test]
    fn text_rejects_bad_counts() {
        let err = PoleSet::<f64>::from_text("# m=2 seed=0 d_min=1\n0 0 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn pole_count_examples() {
        assert_eq!(pole_count(1.0 / 400.0, 400).unwrap(), 2);
        assert_eq!(pole_count(1.0 / 400.0, 2000).unwrap(), 10);
        assert_eq!(pole_count(0.02, 512).unwrap(), 20);
        assert!(pole_count(1.5, 10).is_err());
    }
}
