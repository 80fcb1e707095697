//! L² mass of beams and of the orthonormalized family inside geodesic tubes
//! of half-width `w = c k^{-1/2}` around the beams' great circles.

use crate::beams::GaussianBeam;
use crate::error::{Error, Result};
use crate::gram::ADMISSIBLE_R;
use crate::ortho::OrthoSet;
use crate::quad::{tube_mass, tube_masses, SphereGrid};
use crate::scalar::Real;

/// Lower bound on the tube mass of `u_i` when the beam keeps half its mass
/// inside and `r ≤ 1/24`.
pub const MASS_IN_FLOOR: f64 = 1.0 / 8.0;

/// Default number of colatitude nodes per tube half-width.
pub const NODES_PER_WIDTH: usize = 16;

/// `c k^{-1/2}`, capped at `π/2`.
pub fn tube_width<T: Real>(k: u32, c: T) -> Result<T> {
    if !(c > T::zero()) {
        return Err(Error::InvalidArgument(format!("tube constant must be positive, got {c}")));
    }
    let k = T::of_usize(k.max(1) as usize);
    Ok((c / k.sqrt()).min(T::FRAC_PI_2()))
}

/// Grid exact for `|u|²` and fine enough to resolve the tube of constant `c`.
pub fn tube_grid<T: Real>(k: u32, c: T, per_width: usize) -> Result<SphereGrid<T>> {
    SphereGrid::for_tube(2 * k as usize + 8, tube_width(k, c)?, per_width)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamLocalization<T> {
    pub k: u32,
    pub c: T,
    pub w: T,
    pub mass_in: T,
    pub mass_out: T,
    pub under_resolved: bool,
}

pub fn beam_localization<T: Real>(
    beam: &GaussianBeam<T>,
    c: T,
    grid: &SphereGrid<T>,
) -> Result<BeamLocalization<T>> {
    let w = tube_width(beam.k(), c)?;
    let t = tube_mass(beam, beam.frame(), w, grid)?;
    Ok(BeamLocalization {
        k: beam.k(),
        c,
        w,
        mass_in: t.mass_in,
        mass_out: t.mass_out(),
        under_resolved: t.under_resolved,
    })
}

/// Tube masses of `u_i` and `q_i` with the bounds that follow from `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalizationReport<T> {
    pub k: u32,
    pub i: usize,
    pub c: T,
    pub w: T,
    pub r: T,
    pub mass_in: T,
    pub mass_out: T,
    pub mass_total: T,
    pub beam_mass_in: T,
    /// `ε`: the beam's own mass outside the tube.
    pub beam_mass_out: T,
    /// `1/8`.
    pub bound_in: T,
    /// `(1 + 6r) ε + 6r`.
    pub bound_out: T,
    /// `((1 + 6r) √ε + 6r)²`, from the triangle inequality in L².
    pub bound_out_l2: T,
    /// `((1 − 6r) √(beam_mass_in) − 6r)²`, clamped at 0.
    pub lower_in_l2: T,
    /// `|mass_in − beam_mass_in|`.
    pub in_shift: T,
    /// `2 (1 + 6r) 6r + (6r)²`.
    pub in_shift_bound: T,
    pub in_ok: bool,
    pub out_ok: bool,
    pub out_l2_ok: bool,
    pub shift_ok: bool,
    /// `r ≤ 1/24` and the beam keeps at least half its mass in the tube.
    pub floor_applicable: bool,
    pub under_resolved: bool,
}

impl<T: Real> LocalizationReport<T> {
    /// All inequalities that are implied by the inputs hold.
    pub fn pass(&self) -> bool {
        (!self.floor_applicable || self.in_ok) && self.out_l2_ok && self.shift_ok
    }
}

/// Tube masses for every `u_i`.
pub fn ortho_localizations<T: Real>(
    os: &OrthoSet<T>,
    c: T,
    grid: &SphereGrid<T>,
) -> Result<Vec<LocalizationReport<T>>> {
    let m = os.m();
    let r = os.r_emp;
    let w = tube_width(os.k, c)?;
    let mut frames = os.frames();
    frames.extend(os.frames());
    let masses = tube_masses(&os.joint_field(), &frames, w, grid)?;
    let six_r = T::lit(6.0) * r;
    let slack = T::lit(1e-9);
    Ok((0..m)
        .map(|i| {
            let q = masses[i];
            let u = masses[m + i];
            let eps = q.mass_out().max(T::zero());
            let bound_out = (T::one() + six_r) * eps + six_r;
            let bound_out_l2 = ((T::one() + six_r) * eps.sqrt() + six_r).powi(2);
            let lower = ((T::one() - six_r) * q.mass_in.max(T::zero()).sqrt() - six_r).max(T::zero());
            let in_shift = (u.mass_in - q.mass_in).abs();
            let in_shift_bound = T::lit(2.0) * (T::one() + six_r) * six_r + six_r * six_r;
            LocalizationReport {
                k: os.k,
                i,
                c,
                w,
                r,
                mass_in: u.mass_in,
                mass_out: u.mass_out(),
                mass_total: u.mass_total,
                beam_mass_in: q.mass_in,
                beam_mass_out: eps,
                bound_in: T::lit(MASS_IN_FLOOR),
                bound_out,
                bound_out_l2,
                lower_in_l2: lower * lower,
                in_shift,
                in_shift_bound,
                in_ok: u.mass_in >= T::lit(MASS_IN_FLOOR),
                out_ok: u.mass_out() <= bound_out + slack,
                out_l2_ok: u.mass_out() <= bound_out_l2 + slack,
                shift_ok: in_shift <= in_shift_bound + slack,
                floor_applicable: r <= T::lit(ADMISSIBLE_R) && q.mass_in >= T::lit(0.5),
                under_resolved: u.under_resolved,
            }
        })
        .collect())
}

pub fn ortho_localization<T: Real>(
    os: &OrthoSet<T>,
    i: usize,
    c: T,
    grid: &SphereGrid<T>,
) -> Result<LocalizationReport<T>> {
    if i >= os.m() {
        return Err(Error::IndexOutOfRange { index: i, len: os.m() });
    }
    Ok(ortho_localizations(os, c, grid)?.swap_remove(i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gram::build_gram;
    use crate::ortho::orthonormalize;
    use crate::sphere::{canonical_frame, generate_poles, Frame};

    #[test]
    fn full_width_holds_all_mass() {
        let b = GaussianBeam::new(30, Frame::<f64>::north());
        let grid = SphereGrid::exact(68).unwrap();
        let rep = beam_localization(&b, 100.0, &grid).unwrap();
        assert_eq!(rep.w, std::f64::consts::FRAC_PI_2);
        assert!((rep.mass_in - 1.0).abs() < 1e-9);
        assert!(rep.mass_out.abs() < 1e-9);
    }

    #[test]
    fn mass_grows_with_width() {
        let b = GaussianBeam::new(256, canonical_frame(&crate::sphere::UnitVec::new(0.3, -0.2, 0.9).unwrap()));
        let grid = tube_grid(256, 0.5, NODES_PER_WIDTH).unwrap();
        let mut prev = 0.0;
        for c in [0.5, 0.75, 1.0, 1.5, 2.0, 3.0] {
            let rep = beam_localization(&b, c, &grid).unwrap();
            assert!(rep.mass_in >= prev);
            prev = rep.mass_in;
        }
    }

    #[test]
    fn single_member_family_matches_beam() {
        let ps = generate_poles::<f64>(1, 0);
        let beams: Vec<_> = ps.poles.iter().map(|p| GaussianBeam::new(128, canonical_frame(p))).collect();
        let g = build_gram(&beams).unwrap();
        let os = orthonormalize(&beams, &g).unwrap();
        let grid = tube_grid(128, 1.0, NODES_PER_WIDTH).unwrap();
        let rep = ortho_localization(&os, 0, 1.0, &grid).unwrap();
        let beam = beam_localization(&beams[0], 1.0, &grid).unwrap();
        assert_eq!(rep.mass_in, beam.mass_in);
        assert_eq!(rep.mass_out, beam.mass_out);
        assert!(rep.pass() && rep.floor_applicable);
        assert!(ortho_localization(&os, 1, 1.0, &grid).is_err());
    }

    #[test]
    fn family_masses_are_consistent() {
        let k = 200;
        let ps = generate_poles::<f64>(8, 4);
        let beams: Vec<_> = ps.poles.iter().map(|p| GaussianBeam::new(k, canonical_frame(p))).collect();
        let g = build_gram(&beams).unwrap();
        let os = orthonormalize(&beams, &g).unwrap();
        let grid = tube_grid(k, 1.0, NODES_PER_WIDTH).unwrap();
        for rep in ortho_localizations(&os, 1.0, &grid).unwrap() {
            assert!((rep.mass_in + rep.mass_out - 1.0).abs() < 1e-9);
            assert!(rep.pass(), "{rep:?}");
            assert!(rep.mass_in >= rep.lower_in_l2 - 1e-9);
            assert!(!rep.under_resolved);
        }
    }

    #[test]
    fn rejects_bad_width() {
        assert!(tube_width::<f64>(10, 0.0).is_err());
        assert!((tube_width::<f64>(100, 1.0).unwrap() - 0.1).abs() < 1e-15);
    }
}
