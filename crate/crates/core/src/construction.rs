//! End-to-end pipeline: poles, beams, Gram matrix, certificate, `F`.

use crate::beams::GaussianBeam;
use crate::error::Result;
use crate::gram::{build_gram, gershgorin_certificate, GershgorinReport, GramMatrix};
use crate::ortho::{orthonormalize_with_tol, OrthoSet};
use crate::linalg::default_series_tol;
use crate::scalar::Real;
use crate::sphere::{canonical_frame, check_separation, generate_poles, PoleSet, SeparationReport};

/// One beam per pole, each on its canonical frame.
pub fn beam_family<T: Real>(ps: &PoleSet<T>, k: u32) -> Vec<GaussianBeam<T>> {
    ps.poles.iter().map(|p| GaussianBeam::new(k, canonical_frame(p))).collect()
}

#[derive(Clone, Debug)]
pub struct Construction<T> {
    pub k: u32,
    pub poles: PoleSet<T>,
    pub separation: SeparationReport<T>,
    pub gram: GramMatrix<T>,
    pub gershgorin: GershgorinReport<T>,
    pub ortho: OrthoSet<T>,
}

impl<T: Real> Construction<T> {
    /// `m` generated poles.
    pub fn new(k: u32, m: usize, seed: u64) -> Result<Self> {
        Self::from_poles(k, generate_poles(m, seed))
    }

    /// `⌊D(2k+1)⌋` generated poles.
    pub fn for_density(density: T, k: u32, seed: u64) -> Result<Self> {
        Self::from_poles(k, PoleSet::for_density(density, k, seed)?)
    }

    pub fn from_poles(k: u32, poles: PoleSet<T>) -> Result<Self> {
        Self::from_poles_with_tol(k, poles, default_series_tol())
    }

    pub fn from_poles_with_tol(k: u32, poles: PoleSet<T>, series_tol: T) -> Result<Self> {
        let beams = beam_family(&poles, k);
        let gram = build_gram(&beams)?;
        let gershgorin = gershgorin_certificate(&gram);
        let ortho = orthonormalize_with_tol(&beams, &gram, series_tol)?;
        Ok(Self {
            k,
            separation: check_separation(&poles),
            poles,
            gram,
            gershgorin,
            ortho,
        })
    }

    pub fn m(&self) -> usize {
        self.poles.m()
    }

    pub fn beams(&self) -> &[GaussianBeam<T>] {
        &self.ortho.beams
    }
}
