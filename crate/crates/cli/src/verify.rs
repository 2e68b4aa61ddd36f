use std::f64::consts::TAU;
use std::time::Instant;

use anyhow::Result;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphfilt::filtering::{
    apply, axisym_transfer, cascade, fir_transfer, left_convolve, rotation_convolve,
    rotation_transfer, FirTap, TransferFunction,
};
use sphfilt::harmonics::eval_y_column;
use sphfilt::so3::{
    lift_samples, max_abs_diff_all, project_to_sphere, so3_analyze_bruteforce,
    so3_convolve_bruteforce, so3_synthesize_grid, So3Coefficient, So3Grid, So3Samples,
};
use sphfilt::spectrum::{delta_spectrum, dof_counts, magnitude_only_spectrum, Spectrum};
use sphfilt::sphere::{EulerAngles, Rotation, SphereGrid, UnitVector};
use sphfilt::transform::{analyze_quadrature, evaluate, synthesize, SampledField};
use sphfilt::wigner::wigner_d_all_from_rotation;
use sphfilt::Complex64;

use crate::{Level, ValidationFailed};

struct Check {
    name: &'static str,
    tolerance: f64,
    run: fn(&mut ChaCha8Rng) -> Result<f64>,
}

const QUICK: &[Check] = &[
    Check { name: "orthonormality", tolerance: 1e-12, run: orthonormality },
    Check { name: "wigner_unitary", tolerance: 1e-12, run: wigner_unitary },
    Check { name: "wigner_homomorphism", tolerance: 1e-11, run: wigner_homomorphism },
    Check { name: "rotation_theorem", tolerance: 1e-8, run: rotation_theorem },
    Check { name: "delta_magnitude_only", tolerance: 1e-12, run: delta_magnitude_only },
    Check { name: "dof_percent", tolerance: 1e-12, run: dof_percent },
    Check { name: "left_convolution", tolerance: 1e-12, run: left_convolution },
    Check { name: "cascade_associative", tolerance: 1e-12, run: cascade_associative },
    Check { name: "round_trip", tolerance: 1e-10, run: round_trip },
    Check { name: "identity_exact", tolerance: 0.0, run: identity_exact },
];

const FULL: &[Check] = &[
    Check { name: "so3_convolution_product", tolerance: 1e-4, run: so3_convolution_product },
    Check { name: "projected_convolution", tolerance: 1e-4, run: projected_convolution },
    Check { name: "rotation_convolution", tolerance: 1e-4, run: rotation_convolution_check },
];

const SO3_BANDWIDTH: usize = 4;

pub fn run(level: Level, seed: u64) -> Result<()> {
    let mut checks: Vec<&Check> = QUICK.iter().collect();
    if level == Level::Full {
        checks.extend(FULL);
    }
    println!("check,status,value,tolerance,seconds");
    let mut failed = 0;
    for c in &checks {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = Instant::now();
        let value = (c.run)(&mut rng);
        let secs = t.elapsed().as_secs_f64();
        let (status, shown) = match &value {
            Ok(v) if *v <= c.tolerance => ("pass", format!("{v:.3e}")),
            Ok(v) => ("fail", format!("{v:.3e}")),
            Err(e) => ("fail", format!("error: {e}")),
        };
        if status == "fail" {
            failed += 1;
        }
        println!("{},{status},{shown},{:.0e},{secs:.3}", c.name, c.tolerance);
    }
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    if failed > 0 {
        return Err(ValidationFailed(format!("{failed} checks failed")).into());
    }
    Ok(())
}

fn random_rotation(r: &mut ChaCha8Rng) -> Rotation {
    let e = EulerAngles::new(
        r.gen_range(0.0..TAU),
        r.gen_range(-1.0f64..1.0).acos(),
        r.gen_range(0.0..TAU),
    )
    .expect("angles in range");
    Rotation::from_euler(&e)
}

fn random_spectrum(bandwidth: usize, r: &mut ChaCha8Rng) -> Spectrum {
    let mut s = Spectrum::zeros(bandwidth);
    for l in 0..bandwidth {
        for m in -(l as i64)..=l as i64 {
            s.set(l, m, Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
        }
    }
    s
}

fn random_taps(n: usize, r: &mut ChaCha8Rng) -> Vec<FirTap> {
    (0..n)
        .map(|_| FirTap::new(r.gen_range(-1.0..1.0), random_rotation(r)))
        .collect()
}

// Gram matrix of Y_ℓ^m, ℓ ≤ 16, on an exact Gauss-Legendre grid.
fn orthonormality(_: &mut ChaCha8Rng) -> Result<f64> {
    let bw = 17;
    let grid = SphereGrid::gauss_legendre(bw, 2 * bw)?;
    let n = bw * bw;
    let mut gram = DMatrix::<Complex64>::zeros(n, n);
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for idx in 0..grid.len() {
        let (beta, alpha) = grid.node(idx);
        for l in 0..bw {
            let col = eval_y_column(l, beta, alpha)?;
            y[l * l..(l + 1) * (l + 1)].copy_from_slice(col.values());
        }
        let w = grid.weights()[idx];
        for i in 0..n {
            let a = y[i] * w;
            for j in 0..n {
                gram[(i, j)] += a * y[j].conj();
            }
        }
    }
    let err = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| {
            let e = if i == j { 1.0 } else { 0.0 };
            (gram[(i, j)] - Complex64::new(e, 0.0)).norm()
        })
        .fold(0.0, f64::max);
    Ok(err)
}

fn wigner_unitary(r: &mut ChaCha8Rng) -> Result<f64> {
    let rot = random_rotation(r);
    let mut err = 0.0f64;
    for d in wigner_d_all_from_rotation(32, &rot) {
        let m = d.matrix();
        let p = m * m.adjoint();
        let id = DMatrix::<Complex64>::identity(m.nrows(), m.nrows());
        err = err.max((p - id).camax());
    }
    Ok(err)
}

fn wigner_homomorphism(r: &mut ChaCha8Rng) -> Result<f64> {
    let a = random_rotation(r);
    let b = random_rotation(r);
    let da = wigner_d_all_from_rotation(32, &a);
    let db = wigner_d_all_from_rotation(32, &b);
    let dab = wigner_d_all_from_rotation(32, &a.compose(&b));
    let mut err = 0.0f64;
    for l in 0..32 {
        err = err.max((da[l].matrix() * db[l].matrix() - dab[l].matrix()).camax());
    }
    Ok(err)
}

// Spectral rotation against evaluation at rotated nodes.
fn rotation_theorem(r: &mut ChaCha8Rng) -> Result<f64> {
    let bw = 16;
    let f = random_spectrum(bw, r);
    let rot = random_rotation(r);
    let spectral = apply(&rotation_transfer(&rot, bw), &f);
    let grid = SphereGrid::gauss_legendre(bw + 1, 2 * bw + 1)?;
    let moved = SampledField::from_fn(grid, |b, a| {
        let u = UnitVector::from_angles(a, b).expect("grid node");
        evaluate(&f, &rot.apply(&u))
    });
    Ok(analyze_quadrature(&moved, bw)?.max_abs_diff(&spectral))
}

fn delta_magnitude_only(r: &mut ChaCha8Rng) -> Result<f64> {
    let delta = delta_spectrum(32);
    let moved = apply(&rotation_transfer(&random_rotation(r), 32), &delta);
    Ok(magnitude_only_spectrum(&moved).max_abs_diff(&delta))
}

// 10/11 of the degrees of freedom up to ℓ = 10 sit in the phases.
fn dof_percent(_: &mut ChaCha8Rng) -> Result<f64> {
    let d = dof_counts(10, true);
    let (p, t) = d.phase_fraction();
    Ok((d.percent() - 100.0 * 10.0 / 11.0).abs() + (p as f64 / t as f64 - 10.0 / 11.0).abs())
}

fn left_convolution(r: &mut ChaCha8Rng) -> Result<f64> {
    let bw = 24;
    let f = random_spectrum(bw, r);
    let h0: Vec<Complex64> = (0..bw)
        .map(|_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
        .collect();
    let mut h = Spectrum::zeros(bw);
    for (l, v) in h0.iter().enumerate() {
        h.set(l, 0, *v);
    }
    let a = apply(&axisym_transfer(&h0, bw)?, &f);
    Ok(a.max_abs_diff(&left_convolve(&f, &h)?))
}

fn cascade_associative(r: &mut ChaCha8Rng) -> Result<f64> {
    let bw = 16;
    let h1 = fir_transfer(&random_taps(3, r), bw)?;
    let h2 = fir_transfer(&random_taps(3, r), bw)?;
    let f = random_spectrum(bw, r);
    let once = apply(&cascade(&h1, &h2)?, &f);
    let twice = apply(&h2, &apply(&h1, &f));
    Ok(once.max_abs_diff(&twice))
}

fn round_trip(r: &mut ChaCha8Rng) -> Result<f64> {
    let bw = 32;
    let f = random_spectrum(bw, r);
    let grid = SphereGrid::gauss_legendre(bw + 1, 2 * bw + 1)?;
    Ok(analyze_quadrature(&synthesize(&f, &grid), bw)?.max_abs_diff(&f))
}

// Identity taps must reproduce the input bit for bit.
fn identity_exact(r: &mut ChaCha8Rng) -> Result<f64> {
    let f = random_spectrum(24, r);
    let tap = FirTap::new(1.0, Rotation::identity());
    let a = apply(&fir_transfer(&[tap], 24)?, &f);
    let b = apply(&TransferFunction::identity(24), &f);
    let same = |s: &Spectrum| {
        (0..24).all(|l| {
            (-(l as i64)..=l as i64).all(|m| {
                let (x, y) = (s.get(l, m), f.get(l, m));
                x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
            })
        })
    };
    Ok(if same(&a) && same(&b) { 0.0 } else { a.max_abs_diff(&f).max(f64::MIN_POSITIVE) })
}

fn random_so3(bandwidth: usize, r: &mut ChaCha8Rng) -> Result<Vec<So3Coefficient>> {
    (0..bandwidth)
        .map(|l| {
            let n = 2 * l + 1;
            let m = DMatrix::from_fn(n, n, |_, _| {
                Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
            });
            Ok(So3Coefficient::from_matrix(m)?)
        })
        .collect()
}

fn so3_convolution_product(r: &mut ChaCha8Rng) -> Result<f64> {
    let grid = So3Grid::for_bandwidth(SO3_BANDWIDTH)?;
    let fc = random_so3(SO3_BANDWIDTH, r)?;
    let hc = random_so3(SO3_BANDWIDTH, r)?;
    let f = so3_synthesize_grid(&fc, &grid);
    let h = so3_synthesize_grid(&hc, &grid);
    let g = so3_analyze_bruteforce(&so3_convolve_bruteforce(&h, &f, SO3_BANDWIDTH)?, SO3_BANDWIDTH);
    let expect = fc
        .iter()
        .zip(&hc)
        .map(|(a, b)| So3Coefficient::from_matrix(a.matrix() * b.matrix()))
        .collect::<sphfilt::Result<Vec<_>>>()?;
    Ok(max_abs_diff_all(&g, &expect))
}

// Lift, convolve with a band-limited kernel carrying H(ℓ), project out γ.
fn projected_convolution(r: &mut ChaCha8Rng) -> Result<f64> {
    let bw = SO3_BANDWIDTH;
    let grid = So3Grid::for_bandwidth(bw)?;
    let f = random_spectrum(bw, r);
    let h = fir_transfer(&random_taps(3, r), bw)?;
    let coeffs = h
        .matrices()
        .iter()
        .map(|m| So3Coefficient::from_matrix(m.clone()))
        .collect::<sphfilt::Result<Vec<_>>>()?;
    let kernel = so3_synthesize_grid(&coeffs, &grid);
    let g = so3_convolve_bruteforce(&kernel, &lift_samples(&f, &grid), bw)?;
    let projected = analyze_quadrature(&project_to_sphere(&g), bw)?;
    Ok(projected.max_abs_diff(&apply(&h, &f)))
}

// ∫ conj f(u) h(R u) du has coefficients given by the outer products.
fn rotation_convolution_check(r: &mut ChaCha8Rng) -> Result<f64> {
    let bw = SO3_BANDWIDTH;
    let grid = So3Grid::for_bandwidth(bw)?;
    let f = random_spectrum(bw, r);
    let h = random_spectrum(bw, r);
    let sphere = SphereGrid::gauss_legendre(2 * bw, 4 * bw)?;
    let weights = sphere.weights();
    let samples = So3Samples::from_fn(grid, |e| {
        let rot = Rotation::from_euler(e);
        (0..sphere.len())
            .map(|i| {
                let u = sphere.unit_vector(i);
                evaluate(&f, &u).conj() * evaluate(&h, &rot.apply(&u)) * weights[i]
            })
            .sum()
    });
    let got = so3_analyze_bruteforce(&samples, bw);
    Ok(max_abs_diff_all(&got, &rotation_convolve(&f, &h)?))
}
