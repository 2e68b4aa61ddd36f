#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphfilt::sphere::{EulerAngles, Rotation, SphereGrid};
use sphfilt::spectrum::Spectrum;
use sphfilt::transform::{analyze_quadrature, evaluate, SampledField};
use sphfilt::Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rotation with `cos β` uniform, so rotations are Haar distributed.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation {
    let e = EulerAngles::new(
        rng.gen_range(0.0..TAU),
        rng.gen_range(-1.0f64..1.0).acos(),
        rng.gen_range(0.0..TAU),
    )
    .unwrap();
    Rotation::from_euler(&e)
}

pub fn random_complex_spectrum(bandwidth: usize, rng: &mut ChaCha8Rng) -> Spectrum {
    let mut s = Spectrum::zeros(bandwidth);
    for l in 0..bandwidth {
        for m in -(l as i64)..=l as i64 {
            s.set(l, m, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
    }
    s
}

/// Spectrum of `u ↦ f(R u)` computed in space: evaluate `f` at the rotated
/// nodes of an exact grid and analyze.
pub fn spatially_rotated(f: &Spectrum, r: &Rotation) -> Spectrum {
    let l = f.bandwidth();
    let grid = SphereGrid::gauss_legendre(l + 1, 2 * l + 1).unwrap();
    let samples = SampledField::from_fn(grid, |b, a| {
        let u = sphfilt::sphere::UnitVector::from_angles(a, b).unwrap();
        evaluate(f, &r.apply(&u))
    });
    analyze_quadrature(&samples, l).unwrap()
}

pub fn half_pi() -> f64 {
    PI / 2.0
}
