//! Spherical-harmonic signal processing with phase-sensitive FIR filters.
//!
//! Spectra are stored as row vectors `F_ℓ = [F_ℓ^{-ℓ}, …, F_ℓ^ℓ]` and filters
//! as per-degree transfer matrices `H(ℓ)`, so filtering is the product
//! `G_ℓ = F_ℓ H(ℓ)`.

pub mod error;
pub mod filtering;
pub mod harmonics;
pub mod spectrum;
pub mod so3;
pub mod spharm;
pub mod sphere;
pub mod transform;
pub mod wigner;

pub use error::{Result, SphError};
pub use num_complex::Complex64;
