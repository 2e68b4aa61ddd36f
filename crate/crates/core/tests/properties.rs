mod common;

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use proptest::prelude::*;
use sphfilt::filtering::{
    apply, axisym_transfer, cascade, fir_transfer, left_convolve, rotation_transfer, FirTap,
};
use sphfilt::so3::{lift_field, lift_samples, So3Grid};
use sphfilt::spectrum::{magnitude_phase, Spectrum};
use sphfilt::sphere::{EulerAngles, Rotation, SphereGrid};
use sphfilt::transform::{analyze_quadrature, synthesize};
use sphfilt::wigner::{wigner_d, wigner_d_from_rotation};
use sphfilt::Complex64;

use common::*;

fn euler() -> impl Strategy<Value = EulerAngles> {
    (0.0..TAU, 0.0..PI, 0.0..TAU).prop_map(|(a, b, g)| EulerAngles::new(a, b, g).unwrap())
}

fn max_entry(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn real_spectrum(bandwidth: usize, seed: u64) -> Spectrum {
    sphfilt::spharm::random_real_spectrum(bandwidth, 0.0, seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn euler_round_trip(e in euler()) {
        let r = Rotation::from_euler(&e);
        let back = Rotation::from_euler(&r.to_euler());
        let diff = (r.matrix() - back.matrix()).abs().max();
        prop_assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn wigner_is_unitary(e in euler(), l in 0usize..=32) {
        let d = wigner_d(l, &e).into_matrix();
        let err = max_entry(&(&d * d.adjoint() - DMatrix::identity(2 * l + 1, 2 * l + 1)));
        prop_assert!(err < 1e-10, "ℓ={l} err={err}");
    }

    #[test]
    fn wigner_is_homomorphic(e1 in euler(), e2 in euler(), l in 0usize..=32) {
        let r1 = Rotation::from_euler(&e1);
        let r2 = Rotation::from_euler(&e2);
        let lhs = wigner_d_from_rotation(l, &r1.compose(&r2)).into_matrix();
        let rhs = wigner_d(l, &e1).into_matrix() * wigner_d(l, &e2).into_matrix();
        let err = max_entry(&(lhs - rhs));
        prop_assert!(err < 1e-9, "ℓ={l} err={err}");
    }

    #[test]
    fn magnitude_is_rotation_invariant(e in euler(), seed in any::<u64>()) {
        let f = random_complex_spectrum(20, &mut rng(seed));
        let g = apply(&rotation_transfer(&Rotation::from_euler(&e), 20), &f);
        for (a, b) in f.magnitudes().iter().zip(g.magnitudes()) {
            prop_assert!((a - b).abs() < 1e-10 * a.max(1.0));
        }
    }

    #[test]
    fn magnitude_phase_reconstructs(seed in any::<u64>()) {
        let f = random_complex_spectrum(16, &mut rng(seed));
        for v in f.vectors() {
            let (mag, phase) = magnitude_phase(v);
            let back = phase.vector().scale(Complex64::new(mag, 0.0));
            prop_assert!(back.max_abs_diff(v) < 1e-12);
            prop_assert!((phase.vector().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn filtering_is_linear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mut r = rng(seed);
        let f = random_complex_spectrum(16, &mut r);
        let g = random_complex_spectrum(16, &mut r);
        let taps = [
            FirTap::new(0.7, random_rotation(&mut r)),
            FirTap::new(-0.3, random_rotation(&mut r)),
        ];
        let h = fir_transfer(&taps, 16).unwrap();
        let (ca, cb) = (Complex64::new(a, 0.0), Complex64::new(b, 0.0));
        let lhs = apply(&h, &f.linear_combination(ca, &g, cb).unwrap());
        let rhs = apply(&h, &f).linear_combination(ca, &apply(&h, &g), cb).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn real_input_real_taps_stay_conjugate_symmetric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = real_spectrum(16, seed);
        let taps = [
            FirTap::new(0.5, random_rotation(&mut r)),
            FirTap::new(0.5, random_rotation(&mut r)),
        ];
        let g = apply(&fir_transfer(&taps, 16).unwrap(), &f);
        prop_assert!(g.conjugate_symmetry_error() < 1e-10);
    }

    #[test]
    fn cascade_is_associative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_complex_spectrum(16, &mut r);
        let h1 = fir_transfer(&[FirTap::new(0.6, random_rotation(&mut r)), FirTap::new(0.4, Rotation::identity())], 16).unwrap();
        let h2 = rotation_transfer(&random_rotation(&mut r), 16);
        let h3 = fir_transfer(&[FirTap::new(1.0, random_rotation(&mut r)), FirTap::new(-0.5, random_rotation(&mut r))], 16).unwrap();
        let seq = apply(&h3, &apply(&h2, &apply(&h1, &f)));
        let left = apply(&cascade(&cascade(&h1, &h2).unwrap(), &h3).unwrap(), &f);
        let right = apply(&cascade(&h1, &cascade(&h2, &h3).unwrap()).unwrap(), &f);
        prop_assert!(seq.max_abs_diff(&left) < 1e-10);
        prop_assert!(left.max_abs_diff(&right) < 1e-10);
    }

    #[test]
    fn axisym_projection_equals_left_convolution(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_complex_spectrum(32, &mut r);
        let mut h = Spectrum::zeros(32);
        for l in 0..32 {
            h.set(l, 0, Complex64::new(rand::Rng::gen_range(&mut r, -1.0..1.0), rand::Rng::gen_range(&mut r, -1.0..1.0)));
        }
        let h0: Vec<Complex64> = (0..32).map(|l| h.get(l, 0)).collect();
        let a = apply(&axisym_transfer(&h0, 32).unwrap(), &f);
        let b = left_convolve(&f, &h).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn z_rotation_shifts_phase_linearly(alpha in 0.0..TAU, seed in any::<u64>()) {
        let f = random_complex_spectrum(12, &mut rng(seed));
        let r = Rotation::from_euler(&EulerAngles::new(alpha, 0.0, 0.0).unwrap());
        let g = apply(&rotation_transfer(&r, 12), &f);
        for l in 0..12usize {
            for m in -(l as i64)..=l as i64 {
                let expect = f.get(l, m) * Complex64::from_polar(1.0, -(m as f64) * alpha);
                prop_assert!((g.get(l, m) - expect).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn left_convolution_keeps_phase_up_to_sign(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_complex_spectrum(16, &mut r);
        let mut h = Spectrum::zeros(16);
        for l in 0..16 {
            h.set(l, 0, Complex64::new(rand::Rng::gen_range(&mut r, -1.0..1.0), 0.0));
        }
        let g = left_convolve(&f, &h).unwrap();
        for l in 0..16 {
            let (_, pf) = magnitude_phase(f.vector(l));
            let (mg, pg) = magnitude_phase(g.vector(l));
            if mg < 1e-12 {
                continue;
            }
            let same = pf.vector().max_abs_diff(pg.vector());
            let flipped = pf.vector().scale(Complex64::new(-1.0, 0.0)).max_abs_diff(pg.vector());
            prop_assert!(same.min(flipped) < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn rotation_theorem(e in euler(), seed in any::<u64>()) {
        let f = random_complex_spectrum(16, &mut rng(seed));
        let r = Rotation::from_euler(&e);
        let spectral = apply(&rotation_transfer(&r, 16), &f);
        let spatial = spatially_rotated(&f, &r);
        prop_assert!(spectral.max_abs_diff(&spatial) < 1e-8, "{}", spectral.max_abs_diff(&spatial));
    }

    #[test]
    fn fir_is_weighted_sum_of_rotations(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_complex_spectrum(12, &mut r);
        let taps: Vec<FirTap> = (0..3)
            .map(|k| FirTap::new(0.2 + 0.3 * k as f64, random_rotation(&mut r)))
            .collect();
        let filtered = apply(&fir_transfer(&taps, 12).unwrap(), &f);
        let mut sum = Spectrum::zeros(12);
        for t in &taps {
            let rotated = spatially_rotated(&f, &t.rotation);
            sum = sum.linear_combination(Complex64::new(1.0, 0.0), &rotated, t.weight).unwrap();
        }
        prop_assert!(filtered.max_abs_diff(&sum) < 1e-8);
    }

    #[test]
    fn parseval(seed in any::<u64>()) {
        let f = real_spectrum(24, seed);
        let grid = SphereGrid::gauss_legendre(24, 47).unwrap();
        let field = synthesize(&f, &grid);
        let energy: f64 = f.magnitudes().iter().map(|m| m * m).sum();
        prop_assert!((field.energy() - energy).abs() < 1e-6 * energy.max(1.0));
        let back = analyze_quadrature(&field, 24).unwrap();
        prop_assert!(back.max_abs_diff(&f) < 1e-10);
    }

    #[test]
    fn lifted_functions_ignore_gamma(seed in any::<u64>()) {
        let f = random_complex_spectrum(6, &mut rng(seed));
        let grid = So3Grid::new(6, 11, 7).unwrap();
        let samples = lift_samples(&f, &grid);
        let ng = grid.n_gamma();
        for chunk in samples.values().chunks(ng) {
            for v in chunk {
                prop_assert!((v - chunk[0]).norm() < 1e-12);
            }
        }
        for c in lift_field(&f) {
            let l = c.degree() as i64;
            for m in -l..=l {
                for n in -l..=l {
                    if m != 0 {
                        prop_assert!(c.get(m, n).norm() == 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn axial_symmetry_means_central_support(seed in any::<u64>(), alpha in 0.1f64..6.0) {
        let mut r = rng(seed);
        let mut h = Spectrum::zeros(10);
        for l in 0..10 {
            h.set(l, 0, Complex64::new(rand::Rng::gen_range(&mut r, -1.0..1.0), 0.0));
        }
        let rz = Rotation::from_euler(&EulerAngles::new(alpha, 0.0, 0.0).unwrap());
        let spun = apply(&rotation_transfer(&rz, 10), &h);
        prop_assert!(spun.max_abs_diff(&h) < 1e-12);

        let f = random_complex_spectrum(10, &mut r);
        let spun = apply(&rotation_transfer(&rz, 10), &f);
        prop_assert!(spun.max_abs_diff(&f) > 1e-6);
    }
}
