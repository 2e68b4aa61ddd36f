//! Transfer functions and the filters built from them.
//!
//! Spectra are row vectors, so a filter acts by right multiplication,
//! `G_ℓ = F_ℓ H(ℓ)`, and `cascade(H1, H2)(ℓ) = H1(ℓ) H2(ℓ)` applies `H1`
//! first.

use std::f64::consts::{PI, TAU};
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, parse_err, Result, SphError};
use crate::harmonics::norm_const;
use crate::so3::So3Coefficient;
use crate::spectrum::{check_same_bandwidth, delta_spectrum, HarmonicVector, Spectrum};
use crate::sphere::{header_usize, parse_f64, parse_header, EulerAngles, Rotation, SphereGrid};
use crate::transform::{synthesize, SampledField};
use crate::wigner::wigner_d_all_from_rotation;

const AXISYM_TOL: f64 = 1e-10;

/// Per-degree matrices `H(ℓ)`, each `(2ℓ+1)×(2ℓ+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    matrices: Vec<DMatrix<Complex64>>,
}

impl TransferFunction {
    pub fn identity(bandwidth: usize) -> Self {
        Self {
            matrices: (0..bandwidth)
                .map(|l| DMatrix::identity(2 * l + 1, 2 * l + 1))
                .collect(),
        }
    }

    pub fn from_matrices(matrices: Vec<DMatrix<Complex64>>) -> Result<Self> {
        for (l, m) in matrices.iter().enumerate() {
            if m.nrows() != 2 * l + 1 || m.ncols() != 2 * l + 1 {
                return domain(format!(
                    "matrix for degree {l} is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    2 * l + 1,
                    2 * l + 1
                ));
            }
            if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return domain(format!("non-finite entry in degree {l}"));
            }
        }
        Ok(Self { matrices })
    }

    pub fn bandwidth(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrix(&self, l: usize) -> &DMatrix<Complex64> {
        &self.matrices[l]
    }

    pub fn matrices(&self) -> &[DMatrix<Complex64>] {
        &self.matrices
    }

    pub fn get(&self, l: usize, m: i64, n: i64) -> Complex64 {
        let li = l as i64;
        self.matrices[l][((m + li) as usize, (n + li) as usize)]
    }

    pub fn max_abs_diff(&self, other: &TransferFunction) -> f64 {
        self.matrices
            .iter()
            .zip(&other.matrices)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    /// `#sph-transfer v1 L=<L>` followed by `ℓ,m,n,re,im` lines.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "#sph-transfer v1 L={}", self.bandwidth())?;
        for (l, mat) in self.matrices.iter().enumerate() {
            let li = l as i64;
            for m in -li..=li {
                for n in -li..=li {
                    let c = mat[((m + li) as usize, (n + li) as usize)];
                    writeln!(w, "{l},{m},{n},{:.16e},{:.16e}", c.re, c.im)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty transfer file"))?;
        let header = header?;
        let kv = parse_header(&header, "#sph-transfer", 1)?;
        let bandwidth = header_usize(&kv, "L", 1)?;
        let mut matrices: Vec<DMatrix<Complex64>> = (0..bandwidth)
            .map(|l| DMatrix::zeros(2 * l + 1, 2 * l + 1))
            .collect();
        let mut seen: Vec<DMatrix<bool>> = (0..bandwidth)
            .map(|l| DMatrix::from_element(2 * l + 1, 2 * l + 1, false))
            .collect();
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(parse_err(lineno, "expected ℓ,m,n,re,im"));
            }
            let int = |s: &str| -> Result<i64> {
                s.trim()
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad index '{s}'")))
            };
            let (l, m, n) = (int(f[0])?, int(f[1])?, int(f[2])?);
            if l < 0 || l as usize >= bandwidth || m.abs() > l || n.abs() > l {
                return Err(parse_err(lineno, format!("index ({l},{m},{n}) out of range")));
            }
            let pos = ((m + l) as usize, (n + l) as usize);
            let lu = l as usize;
            if seen[lu][pos] {
                return Err(parse_err(lineno, "duplicate entry"));
            }
            seen[lu][pos] = true;
            matrices[lu][pos] = Complex64::new(parse_f64(f[3], lineno)?, parse_f64(f[4], lineno)?);
        }
        if seen.iter().any(|s| s.iter().any(|v| !v)) {
            return Err(parse_err(0, "transfer file is missing entries"));
        }
        Self::from_matrices(matrices)
    }
}

/// One term `b_k f(R_k u)` of an FIR filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FirTap {
    pub weight: Complex64,
    pub rotation: Rotation,
}

impl FirTap {
    pub fn new(weight: f64, rotation: Rotation) -> Self {
        Self {
            weight: Complex64::new(weight, 0.0),
            rotation,
        }
    }

    pub fn from_euler(weight: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        Ok(Self::new(
            weight,
            Rotation::from_euler(&EulerAngles::new(alpha, beta, gamma)?),
        ))
    }
}

const TAP_CHUNK: usize = 16;

/// `H(ℓ) = Σ_k b_k D_ℓ(R_k)`.
pub fn fir_transfer(taps: &[FirTap], bandwidth: usize) -> Result<TransferFunction> {
    if taps.is_empty() {
        return domain("an FIR filter needs at least one tap");
    }
    // fixed chunks summed in order, so the result does not depend on scheduling
    let partial: Vec<Vec<DMatrix<Complex64>>> = taps
        .par_chunks(TAP_CHUNK)
        .map(|chunk| {
            let mut acc: Option<Vec<DMatrix<Complex64>>> = None;
            for tap in chunk {
                let part = wigner_d_all_from_rotation(bandwidth, &tap.rotation)
                    .into_iter()
                    .map(|d| d.into_matrix() * tap.weight);
                acc = Some(match acc {
                    None => part.collect(),
                    Some(mut a) => {
                        for (m, p) in a.iter_mut().zip(part) {
                            *m += p;
                        }
                        a
                    }
                });
            }
            acc.expect("chunks are non-empty")
        })
        .collect();
    let mut parts = partial.into_iter();
    let mut matrices = parts.next().expect("at least one tap");
    for part in parts {
        for (m, p) in matrices.iter_mut().zip(part) {
            *m += p;
        }
    }
    TransferFunction::from_matrices(matrices)
}

/// Transfer of the pure rotation `u ↦ f(R u)`.
pub fn rotation_transfer(r: &Rotation, bandwidth: usize) -> TransferFunction {
    fir_transfer(&[FirTap::new(1.0, r.clone())], bandwidth).expect("one tap")
}

/// `H(ℓ) = (2π / c_ℓ^0) H_ℓ^0 I`.
pub fn axisym_transfer(h0: &[Complex64], bandwidth: usize) -> Result<TransferFunction> {
    if h0.len() != bandwidth {
        return domain(format!(
            "{} central coefficients for bandwidth {bandwidth}",
            h0.len()
        ));
    }
    let matrices = h0
        .iter()
        .enumerate()
        .map(|(l, h)| {
            let s = h * (TAU / norm_const(l, 0).expect("m = 0"));
            DMatrix::from_diagonal_element(2 * l + 1, 2 * l + 1, s)
        })
        .collect();
    TransferFunction::from_matrices(matrices)
}

// Multiplication that keeps the exact value (and sign of zero) when the
// factor is real, so identity filters reproduce their input bit for bit.
fn mul(a: Complex64, b: Complex64) -> Complex64 {
    if b.im == 0.0 {
        a * b.re
    } else {
        a * b
    }
}

fn row_times(f: &HarmonicVector, h: &DMatrix<Complex64>) -> HarmonicVector {
    let values = (0..h.ncols())
        .map(|c| {
            let mut acc: Option<Complex64> = None;
            for (k, fk) in f.iter().enumerate() {
                let hk = h[(k, c)];
                if hk == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let t = mul(*fk, hk);
                acc = Some(acc.map_or(t, |a| a + t));
            }
            acc.unwrap_or_default()
        })
        .collect();
    HarmonicVector::from_vec(values).expect("odd length")
}

/// `G_ℓ = F_ℓ H(ℓ)` for `ℓ < min(L_F, L_H)`.
pub fn apply(h: &TransferFunction, f: &Spectrum) -> Spectrum {
    let bandwidth = h.bandwidth().min(f.bandwidth());
    let vectors: Vec<HarmonicVector> = (0..bandwidth)
        .into_par_iter()
        .map(|l| row_times(f.vector(l), &h.matrices[l]))
        .collect();
    let mut out = Spectrum::from_vectors(vectors, false).expect("degrees in order");
    if f.is_real() {
        out.mark_real_if_symmetric();
    }
    out
}

/// `H1(ℓ) H2(ℓ)`: apply `H1`, then `H2`.
pub fn cascade(h1: &TransferFunction, h2: &TransferFunction) -> Result<TransferFunction> {
    if h1.bandwidth() != h2.bandwidth() {
        return Err(SphError::BandwidthMismatch {
            left: h1.bandwidth(),
            right: h2.bandwidth(),
        });
    }
    Ok(TransferFunction {
        matrices: h1
            .matrices
            .iter()
            .zip(&h2.matrices)
            .map(|(a, b)| a * b)
            .collect(),
    })
}

fn central_coefficients(h: &Spectrum) -> Result<Vec<Complex64>> {
    for (l, v) in h.vectors().iter().enumerate() {
        let li = l as i64;
        if let Some(m) = (-li..=li).find(|&m| m != 0 && v.get(m).norm() >= AXISYM_TOL) {
            return domain(format!(
                "kernel is not axially symmetric: entry ({l},{m}) = {}",
                v.get(m)
            ));
        }
    }
    Ok(h.vectors().iter().map(|v| v.get(0)).collect())
}

/// Left convolution with an axially symmetric kernel:
/// `G_ℓ = (2π / c_ℓ^0) H_ℓ^0 F_ℓ`.
pub fn left_convolve(f: &Spectrum, h: &Spectrum) -> Result<Spectrum> {
    check_same_bandwidth(f, h)?;
    let h0 = central_coefficients(h)?;
    let vectors = f
        .vectors()
        .iter()
        .zip(&h0)
        .enumerate()
        .map(|(l, (fv, h))| fv.scale(h * (TAU / norm_const(l, 0).expect("m = 0"))))
        .collect();
    let mut out = Spectrum::from_vectors(vectors, false)?;
    if f.is_real() {
        out.mark_real_if_symmetric();
    }
    Ok(out)
}

/// Rotation convolution `g(R) = ∫ f*(u) h(R u) du` in the SO(3) domain:
/// `G(ℓ) = F_ℓ† H_ℓ / (2ℓ+1)`.
pub fn rotation_convolve(f: &Spectrum, h: &Spectrum) -> Result<Vec<So3Coefficient>> {
    check_same_bandwidth(f, h)?;
    f.vectors()
        .iter()
        .zip(h.vectors())
        .map(|(fv, hv)| {
            let eta = 1.0 / (2 * fv.degree() + 1) as f64;
            let outer = fv.as_row().adjoint() * hv.as_row() * Complex64::new(eta, 0.0);
            So3Coefficient::from_matrix(outer)
        })
        .collect()
}

/// Taps `{(0.5, I), (0.25, R), (0.25, Rᵀ)}` with `R = R(0, β₀, 0)`.
pub fn three_point_taps(beta0: f64) -> Result<Vec<FirTap>> {
    let r = Rotation::from_euler(&EulerAngles::new(0.0, beta0, 0.0)?);
    Ok(vec![
        FirTap::new(0.5, Rotation::identity()),
        FirTap::new(0.25, r.clone()),
        FirTap::new(0.25, r.inverse()),
    ])
}

pub fn three_point_filter(beta0: f64, bandwidth: usize) -> Result<TransferFunction> {
    fir_transfer(&three_point_taps(beta0)?, bandwidth)
}

/// The 5-tap lowpass: weight 0.5 on the identity and 0.125 on each of
/// `R₁, R₁ᵀ, R₂, R₂ᵀ`, where `R₁ = R(0, π/32, 0)` and
/// `R₂ = R(π/2, π/32, −π/2)` tilt the pole towards 0° and 90°E.
pub fn five_point_taps() -> Vec<FirTap> {
    let b = PI / 32.0;
    let r1 = Rotation::from_euler(&EulerAngles::new(0.0, b, 0.0).expect("valid"));
    let r2 = Rotation::from_euler(&EulerAngles::new(PI / 2.0, b, -PI / 2.0).expect("valid"));
    vec![
        FirTap::new(0.5, Rotation::identity()),
        FirTap::new(0.125, r1.clone()),
        FirTap::new(0.125, r1.inverse()),
        FirTap::new(0.125, r2.clone()),
        FirTap::new(0.125, r2.inverse()),
    ]
}

pub fn five_point_lowpass(bandwidth: usize) -> Result<TransferFunction> {
    if bandwidth < 1 {
        return domain("bandwidth must be at least 1");
    }
    fir_transfer(&five_point_taps(), bandwidth)
}

/// Which planar coordinate multiplies the butterfly's Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `x`, giving the `cos α` factor.
    X,
    /// `y`, giving `sin α`: the prototype turned by 90°.
    Y,
}

/// Sampling and shape of the butterfly prototype.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ButterflyParams {
    pub sigma: f64,
    pub lambda: f64,
    pub n_beta: usize,
    pub n_alpha: usize,
    pub beta_max: f64,
    pub orientation: Orientation,
}

impl Default for ButterflyParams {
    fn default() -> Self {
        Self {
            sigma: 0.05,
            lambda: 1.0,
            n_beta: 12,
            n_alpha: 12,
            beta_max: PI / 2.0,
            orientation: Orientation::X,
        }
    }
}

/// `h(β, α) = [tan(β/2) cos α] e^{−tan²(β/2)/(2σ)}`, or `sin α` for [`Orientation::Y`].
pub fn butterfly_weight(beta: f64, alpha: f64, sigma: f64, orientation: Orientation) -> f64 {
    let t = (beta / 2.0).tan();
    let dir = match orientation {
        Orientation::X => alpha.cos(),
        Orientation::Y => alpha.sin(),
    };
    let g = (-t * t / (2.0 * sigma)).exp();
    if g == 0.0 {
        0.0
    } else {
        t * dir * g
    }
}

/// FIR taps sampling the butterfly at `β_k = β_max (k+1)/n_beta`,
/// `α_j = 2πj/n_alpha`, with rotations `R(α, β, −α)`. Dilation scales both
/// angles by `λ` before the weights and rotations are formed.
pub fn butterfly_taps(p: &ButterflyParams) -> Result<Vec<FirTap>> {
    if !(p.sigma > 0.0) || !(p.lambda > 0.0) {
        return domain(format!("σ and λ must be positive, got {} and {}", p.sigma, p.lambda));
    }
    if p.n_beta == 0 || p.n_alpha == 0 {
        return domain("butterfly grid needs at least one node per angle");
    }
    if !(p.beta_max > 0.0 && p.beta_max <= PI) {
        return domain(format!("β_max must lie in (0, π], got {}", p.beta_max));
    }
    let mut taps = Vec::with_capacity(p.n_beta * p.n_alpha);
    for k in 0..p.n_beta {
        let beta = p.lambda * p.beta_max * (k + 1) as f64 / p.n_beta as f64;
        if beta > PI {
            return domain(format!("dilated colatitude {beta} exceeds π"));
        }
        for j in 0..p.n_alpha {
            let alpha = p.lambda * TAU * j as f64 / p.n_alpha as f64;
            let w = butterfly_weight(beta, alpha, p.sigma, p.orientation);
            taps.push(FirTap::from_euler(w, alpha, beta, -alpha)?);
        }
    }
    Ok(taps)
}

pub fn butterfly_filter(p: &ButterflyParams, bandwidth: usize) -> Result<TransferFunction> {
    fir_transfer(&butterfly_taps(p)?, bandwidth)
}

/// Per-degree response of `H`.
///
/// Without a normalizer this is the Frobenius norm `‖H(ℓ)‖`. With a
/// normalizing spectrum `S` it is `‖S_ℓ H(ℓ)‖ / ‖S_ℓ‖`, the gain `H` applies
/// to that input; for the delta spectrum this is the gain on an impulse.
pub fn transfer_norms(h: &TransferFunction, normalize_by: Option<&Spectrum>) -> Result<Vec<f64>> {
    match normalize_by {
        None => Ok(h.matrices.iter().map(|m| m.norm()).collect()),
        Some(s) => {
            if s.bandwidth() < h.bandwidth() {
                return Err(SphError::BandwidthMismatch {
                    left: h.bandwidth(),
                    right: s.bandwidth(),
                });
            }
            h.matrices
                .iter()
                .enumerate()
                .map(|(l, m)| {
                    let v = s.vector(l);
                    let n = v.norm();
                    if n < 1e-14 {
                        return domain(format!("normalizer has zero norm at degree {l}"));
                    }
                    Ok(row_times(v, m).norm() / n)
                })
                .collect()
        }
    }
}

/// `synthesize(apply(H, δ), grid)`.
pub fn impulse_response(h: &TransferFunction, grid: &SphereGrid) -> SampledField {
    synthesize(&apply(h, &delta_spectrum(h.bandwidth())), grid)
}

/// Reads FIR taps, one `weight,alpha,beta,gamma` (or
/// `weight_re,weight_im,alpha,beta,gamma`) line per tap. Lines starting with
/// `#` are comments.
pub fn read_taps<R: BufRead>(r: R) -> Result<Vec<FirTap>> {
    let mut taps = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = line
            .split(',')
            .map(|s| parse_f64(s, lineno))
            .collect::<Result<Vec<f64>>>()?;
        let (weight, angles) = match v.len() {
            4 => (Complex64::new(v[0], 0.0), &v[1..]),
            5 => (Complex64::new(v[0], v[1]), &v[2..]),
            _ => return Err(parse_err(lineno, "expected weight,alpha,beta,gamma")),
        };
        let e = EulerAngles::new(angles[0], angles[1], angles[2])
            .map_err(|e| parse_err(lineno, e.to_string()))?;
        taps.push(FirTap {
            weight,
            rotation: Rotation::from_euler(&e),
        });
    }
    if taps.is_empty() {
        return domain("taps file contains no taps");
    }
    Ok(taps)
}
