//! Fourier analysis on SO(3) by brute-force quadrature.
//!
//! These routines cost `O(L⁶)` or worse and are meant for small bandwidths
//! (`L ≤ 6`), where they serve as independent checks of the closed-form
//! filtering identities.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, SphError};
use crate::harmonics::norm_const;
use crate::spectrum::{HarmonicVector, Spectrum};
use crate::sphere::{EulerAngles, Rotation, SphereGrid};
use crate::transform::SampledField;
use crate::wigner::{little_d_all, wigner_d_all};

/// Matrix-valued Fourier coefficient `F(ℓ)`, rows `m`, columns `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct So3Coefficient {
    degree: usize,
    matrix: DMatrix<Complex64>,
}

impl So3Coefficient {
    pub fn zeros(degree: usize) -> Self {
        Self {
            degree,
            matrix: DMatrix::zeros(2 * degree + 1, 2 * degree + 1),
        }
    }

    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() || n % 2 == 0 {
            return Err(SphError::Domain(format!(
                "SO(3) coefficient must be square of odd size, got {}x{}",
                n,
                matrix.ncols()
            )));
        }
        Ok(Self {
            degree: n / 2,
            matrix,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn get(&self, m: i64, n: i64) -> Complex64 {
        let l = self.degree as i64;
        self.matrix[((m + l) as usize, (n + l) as usize)]
    }

    pub fn max_abs_diff(&self, other: &So3Coefficient) -> f64 {
        (&self.matrix - &other.matrix)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry outside the middle row.
    pub fn off_middle_max(&self) -> f64 {
        let l = self.degree;
        self.matrix
            .row_iter()
            .enumerate()
            .filter(|(r, _)| *r != l)
            .flat_map(|(_, row)| row.iter().map(|c| c.norm()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }
}

pub fn max_abs_diff_all(a: &[So3Coefficient], b: &[So3Coefficient]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max)
}

/// Tensor product of a Gauss–Legendre sphere grid in `(β, α)` with a uniform
/// grid of `n_gamma` angles in `γ`. Weights are those of the normalized Haar
/// measure `(8π²)⁻¹ sin β dα dβ dγ` and sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct So3Grid {
    sphere: SphereGrid,
    gamma_nodes: Vec<f64>,
}

impl So3Grid {
    pub fn new(n_beta: usize, n_alpha: usize, n_gamma: usize) -> Result<Self> {
        if n_gamma == 0 {
            return Err(SphError::Domain("need at least one γ node".into()));
        }
        Ok(Self {
            sphere: SphereGrid::gauss_legendre(n_beta, n_alpha)?,
            gamma_nodes: (0..n_gamma).map(|k| TAU * k as f64 / n_gamma as f64).collect(),
        })
    }

    /// `2L` nodes per angle.
    pub fn for_bandwidth(bandwidth: usize) -> Result<Self> {
        let n = 2 * bandwidth.max(1);
        Self::new(n, n, n)
    }

    pub fn sphere(&self) -> &SphereGrid {
        &self.sphere
    }

    pub fn gamma_nodes(&self) -> &[f64] {
        &self.gamma_nodes
    }

    pub fn n_gamma(&self) -> usize {
        self.gamma_nodes.len()
    }

    pub fn len(&self) -> usize {
        self.sphere.len() * self.n_gamma()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node `idx = (sphere_idx) · n_gamma + k`.
    pub fn node(&self, idx: usize) -> EulerAngles {
        let (s, k) = (idx / self.n_gamma(), idx % self.n_gamma());
        let (beta, alpha) = self.sphere.node(s);
        EulerAngles {
            alpha,
            beta,
            gamma: self.gamma_nodes[k],
        }
    }

    pub fn weight(&self, idx: usize) -> f64 {
        let s = idx / self.n_gamma();
        let i = s / self.sphere.n_alpha();
        self.sphere.weight(i, 0) * (TAU / self.n_gamma() as f64) / (8.0 * PI * PI)
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    pub fn rotations(&self) -> Vec<Rotation> {
        (0..self.len())
            .map(|i| Rotation::from_euler(&self.node(i)))
            .collect()
    }
}

/// Samples of a function on an [`So3Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct So3Samples {
    grid: So3Grid,
    values: Vec<Complex64>,
}

impl So3Samples {
    pub fn new(grid: So3Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SphError::GridMismatch(format!(
                "{} values for an SO(3) grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F>(grid: So3Grid, f: F) -> Self
    where
        F: Fn(&EulerAngles) -> Complex64 + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.node(i)))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &So3Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn max_abs_diff(&self, other: &So3Samples) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `F̃(ℓ) = Q_ℓᵀ F_ℓ / (4π c_ℓ^0)`: the SO(3) coefficient of `R ↦ f(R n)`.
pub fn lift_spectrum(f: &HarmonicVector) -> So3Coefficient {
    let l = f.degree();
    let scale = 1.0 / (4.0 * PI * norm_const(l, 0).expect("m = 0"));
    let mut out = So3Coefficient::zeros(l);
    for (c, v) in f.iter().enumerate() {
        out.matrix[(l, c)] = v * scale;
    }
    out
}

pub fn lift_field(f: &Spectrum) -> Vec<So3Coefficient> {
    f.vectors().iter().map(lift_spectrum).collect()
}

/// `F(ℓ) = ∫ f(R) D_ℓ(R)† dR` for `ℓ < L` by quadrature on the sample grid.
pub fn so3_analyze_bruteforce(g: &So3Samples, bandwidth: usize) -> Vec<So3Coefficient> {
    let grid = &g.grid;
    let sphere = &grid.sphere;
    let (n_alpha, n_gamma) = (sphere.n_alpha(), grid.n_gamma());
    let lmax = bandwidth as i64 - 1;
    let width = (2 * lmax + 1).max(0) as usize;
    let w_ag = sphere.alpha_weight() * (TAU / n_gamma as f64) / (8.0 * PI * PI);
    // per β row: Σ_{j,k} g e^{jmα_j} e^{jnγ_k} for all (m, n)
    let rows: Vec<DMatrix<Complex64>> = (0..sphere.n_beta())
        .into_par_iter()
        .map(|i| {
            let mut acc = DMatrix::<Complex64>::zeros(width, width);
            for j in 0..n_alpha {
                let alpha = sphere.alpha_nodes()[j];
                for k in 0..n_gamma {
                    let gamma = grid.gamma_nodes[k];
                    let v = g.values[(i * n_alpha + j) * n_gamma + k] * w_ag;
                    for m in -lmax..=lmax {
                        let em = v * Complex64::from_polar(1.0, m as f64 * alpha);
                        for n in -lmax..=lmax {
                            acc[((m + lmax) as usize, (n + lmax) as usize)] +=
                                em * Complex64::from_polar(1.0, n as f64 * gamma);
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let littles: Vec<_> = sphere
        .beta_nodes()
        .iter()
        .map(|&b| little_d_all(bandwidth, b))
        .collect();
    (0..bandwidth)
        .map(|l| {
            let li = l as i64;
            let size = 2 * l + 1;
            // F(ℓ)_{ab} = Σ_i w_i d_{ba}(β_i) G_i(b, a)
            let matrix = DMatrix::from_fn(size, size, |r, c| {
                let (a, b) = (r as i64 - li, c as i64 - li);
                (0..sphere.n_beta())
                    .map(|i| {
                        sphere.beta_weights()[i]
                            * littles[i][l].get(b, a)
                            * rows[i][((b + lmax) as usize, (a + lmax) as usize)]
                    })
                    .sum()
            });
            So3Coefficient { degree: l, matrix }
        })
        .collect()
}

/// `f(R) = Σ_ℓ (2ℓ+1) Tr[F(ℓ) D_ℓ(R)]`.
pub fn so3_synthesize(coeffs: &[So3Coefficient], r: &Rotation) -> Complex64 {
    so3_synthesize_euler(coeffs, &r.to_euler())
}

pub fn so3_synthesize_euler(coeffs: &[So3Coefficient], e: &EulerAngles) -> Complex64 {
    let ds = wigner_d_all(coeffs.len(), e);
    coeffs
        .iter()
        .zip(&ds)
        .map(|(f, d)| (f.matrix.clone() * d.matrix()).trace() * (2 * f.degree + 1) as f64)
        .sum()
}

/// Evaluates the expansion at every node of `grid`.
pub fn so3_synthesize_grid(coeffs: &[So3Coefficient], grid: &So3Grid) -> So3Samples {
    So3Samples::from_fn(grid.clone(), |e| so3_synthesize_euler(coeffs, e))
}

/// `(1/2π) ∫ g(α, β, γ) dγ` by the uniform `γ` rule.
pub fn project_to_sphere(g: &So3Samples) -> SampledField {
    let n_gamma = g.grid.n_gamma();
    let values = g
        .values
        .chunks(n_gamma)
        .map(|c| c.iter().sum::<Complex64>() / n_gamma as f64)
        .collect();
    SampledField::new(g.grid.sphere.clone(), values).expect("sizes agree")
}

/// `g(V) = ∫ h(R) f(R⁻¹V) dR`, with the integral over `R` done by the grid
/// quadrature and `f` evaluated off-grid from its bandwidth-`L` expansion.
pub fn so3_convolve_bruteforce(h: &So3Samples, f: &So3Samples, bandwidth: usize) -> Result<So3Samples> {
    if h.grid != f.grid {
        return Err(SphError::GridMismatch("convolution operands use different grids".into()));
    }
    let fc = so3_analyze_bruteforce(f, bandwidth);
    Ok(so3_convolve_with_coefficients(h, &fc))
}

/// As [`so3_convolve_bruteforce`] with `f` given by its SO(3) coefficients.
///
/// Uses `f(R⁻¹V) = Σ (2ℓ+1) Tr[D_ℓ(V) F(ℓ) D_ℓ(R)†]`, so only the Wigner
/// matrices of grid nodes are needed.
pub fn so3_convolve_with_coefficients(h: &So3Samples, fc: &[So3Coefficient]) -> So3Samples {
    let grid = &h.grid;
    let bandwidth = fc.len();
    let ds: Vec<Vec<DMatrix<Complex64>>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            wigner_d_all(bandwidth, &grid.node(i))
                .into_iter()
                .map(|d| d.into_matrix())
                .collect()
        })
        .collect();
    let weights = grid.weights();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|v| {
            let ms: Vec<DMatrix<Complex64>> = fc
                .iter()
                .zip(&ds[v])
                .map(|(f, dv)| dv * &f.matrix * Complex64::new((2 * f.degree + 1) as f64, 0.0))
                .collect();
            (0..grid.len())
                .map(|r| {
                    let fr: Complex64 = ms
                        .iter()
                        .zip(&ds[r])
                        .map(|(m, dr)| m.iter().zip(dr.iter()).map(|(a, b)| a * b.conj()).sum::<Complex64>())
                        .sum();
                    weights[r] * h.values[r] * fr
                })
                .sum()
        })
        .collect();
    So3Samples {
        grid: grid.clone(),
        values,
    }
}

/// Samples of the lifted function `R ↦ f(R n)` for a sphere spectrum.
pub fn lift_samples(f: &Spectrum, grid: &So3Grid) -> So3Samples {
    let lifted = lift_field(f);
    so3_synthesize_grid(&lifted, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::delta_spectrum;
    use crate::transform::synthesize;
    use crate::wigner::wigner_d;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_coeffs(bandwidth: usize, rng: &mut ChaCha8Rng) -> Vec<So3Coefficient> {
        (0..bandwidth)
            .map(|l| {
                let n = 2 * l + 1;
                So3Coefficient::from_matrix(DMatrix::from_fn(n, n, |_, _| {
                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                }))
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn haar_weights_sum_to_one() {
        for l in 1..5 {
            let g = So3Grid::for_bandwidth(l).unwrap();
            assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn lift_examples() {
        let f0 = HarmonicVector::from_vec(vec![c((4.0 * PI).sqrt(), 0.0)]).unwrap();
        assert!((lift_spectrum(&f0).get(0, 0) - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(lift_spectrum(&HarmonicVector::zeros(2)), So3Coefficient::zeros(2));
        for (l, lifted) in lift_field(&delta_spectrum(5)).iter().enumerate() {
            for m in -(l as i64)..=l as i64 {
                for n in -(l as i64)..=l as i64 {
                    let want = if m == 0 && n == 0 { 1.0 / (4.0 * PI) } else { 0.0 };
                    assert!((lifted.get(m, n) - c(want, 0.0)).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn analyze_constant_and_single_element() {
        let grid = So3Grid::for_bandwidth(3).unwrap();
        let one = So3Samples::from_fn(grid.clone(), |_| c(1.0, 0.0));
        let f = so3_analyze_bruteforce(&one, 3);
        assert!((f[0].get(0, 0) - c(1.0, 0.0)).norm() < 1e-6);
        assert!(f[1].matrix.norm() < 1e-6 && f[2].matrix.norm() < 1e-6);

        let d100 = So3Samples::from_fn(grid, |e| wigner_d(1, e).get(0, 0));
        let f = so3_analyze_bruteforce(&d100, 3);
        for m in -1..=1 {
            for n in -1..=1 {
                let want = if m == 0 && n == 0 { 1.0 / 3.0 } else { 0.0 };
                assert!((f[1].get(m, n) - c(want, 0.0)).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn element_norms() {
        let grid = So3Grid::for_bandwidth(5).unwrap();
        let w = grid.weights();
        for l in 0..5usize {
            let ds: Vec<_> = (0..grid.len()).map(|i| wigner_d(l, &grid.node(i))).collect();
            let li = l as i64;
            for m in -li..=li {
                for n in -li..=li {
                    let q: f64 = ds.iter().zip(&w).map(|(d, w)| w * d.get(m, n).norm_sqr()).sum();
                    assert!((q - 1.0 / (2 * l + 1) as f64).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn synthesis_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let coeffs = random_coeffs(3, &mut rng);
        let grid = So3Grid::for_bandwidth(3).unwrap();
        let g = so3_synthesize_grid(&coeffs, &grid);
        let back = so3_analyze_bruteforce(&g, 3);
        assert!(max_abs_diff_all(&back, &coeffs) < 1e-10);
        let again = so3_synthesize_grid(&back, &grid);
        assert!(again.max_abs_diff(&g) < 1e-5);

        let mut constant = vec![So3Coefficient::zeros(0), So3Coefficient::zeros(1)];
        constant[0].matrix[(0, 0)] = c(2.5, 0.0);
        let r = Rotation::from_euler(&EulerAngles::new(0.3, 1.2, 4.0).unwrap());
        assert!((so3_synthesize(&constant, &r) - c(2.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn lifted_function_reduces_to_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s = Spectrum::zeros(4);
        for l in 0..4 {
            for m in -(l as i64)..=l as i64 {
                s.set(l, m, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
        }
        let lifted = lift_field(&s);
        let sg = SphereGrid::gauss_legendre(5, 7).unwrap();
        let field = synthesize(&s, &sg);
        for idx in 0..sg.len() {
            let (b, a) = sg.node(idx);
            for gamma in [0.0, 1.3, 5.0] {
                let e = EulerAngles::new(a, b, gamma).unwrap();
                let v = so3_synthesize_euler(&lifted, &e);
                assert!((v - field.values()[idx]).norm() < 1e-8);
            }
        }
        let grid = So3Grid::for_bandwidth(4).unwrap();
        let samples = lift_samples(&s, &grid);
        let back = so3_analyze_bruteforce(&samples, 4);
        for b in &back {
            assert!(b.off_middle_max() < 1e-6);
        }
    }

    #[test]
    fn projection_examples() {
        let grid = So3Grid::new(3, 4, 6).unwrap();
        let g = So3Samples::from_fn(grid.clone(), |e| c(e.beta.cos() + e.alpha, 0.0));
        let p = project_to_sphere(&g);
        for idx in 0..p.grid().len() {
            let (b, a) = p.grid().node(idx);
            assert!((p.values()[idx] - c(b.cos() + a, 0.0)).norm() < 1e-14);
        }
        let osc = So3Samples::from_fn(grid, |e| Complex64::from_polar(1.0, -e.gamma));
        assert!(project_to_sphere(&osc).values().iter().all(|v| v.norm() < 1e-10));
    }

    #[test]
    fn convolution_constants() {
        let grid = So3Grid::for_bandwidth(2).unwrap();
        let h = So3Samples::from_fn(grid.clone(), |_| c(2.0, 0.0));
        let f = So3Samples::from_fn(grid, |_| c(3.0, 0.0));
        let g = so3_convolve_bruteforce(&h, &f, 2).unwrap();
        assert!(g.values().iter().all(|v| (v - c(6.0, 0.0)).norm() < 1e-10));
    }

    #[test]
    fn convolution_mismatched_grids() {
        let h = So3Samples::from_fn(So3Grid::for_bandwidth(2).unwrap(), |_| c(1.0, 0.0));
        let f = So3Samples::from_fn(So3Grid::for_bandwidth(3).unwrap(), |_| c(1.0, 0.0));
        assert!(so3_convolve_bruteforce(&h, &f, 2).is_err());
    }
}
