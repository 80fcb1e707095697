//! Orthonormal families of degree-`k` spherical harmonics built from
//! Gaussian beams on well-separated great circles.
//!
//! The pipeline is: pole packing ([`sphere`]) → beams ([`beams`]) → analytic
//! Gram matrix and Geršgorin certificate ([`gram`]) → symmetric
//! orthonormalization `u = E^{-1/2} q` ([`ortho`]) → Lᵖ and tube-mass
//! verification ([`quad`], [`localize`]). [`construction`] runs the first
//! four stages in one call.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

pub mod beams;
pub mod construction;
pub mod error;
pub mod gram;
pub mod linalg;
pub mod localize;
pub mod ortho;
pub mod quad;
pub mod scalar;
pub mod sphere;

pub use error::{Error, Result};
pub use scalar::Real;

pub type UnitVec64 = sphere::UnitVec<f64>;
pub type Frame64 = sphere::Frame<f64>;
pub type PoleSet64 = sphere::PoleSet<f64>;
pub type Beam = beams::GaussianBeam<f64>;
pub type Beam32 = beams::GaussianBeam<f32>;
pub type Grid = quad::SphereGrid<f64>;
pub type Grid32 = quad::SphereGrid<f32>;
pub type Matrix = linalg::HermitianMatrix<f64>;
pub type Gram = gram::GramMatrix<f64>;
pub type Ortho = ortho::OrthoSet<f64>;
pub type Construction64 = construction::Construction<f64>;
