//! Coefficient vectors, magnitude/phase decomposition and analytic spectra.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, RowDVector};
use num_complex::Complex64;

use crate::error::{domain, parse_err, Result, SphError};
use crate::harmonics::{ln_factorial, norm_const};
use crate::sphere::{gauss_legendre, header_usize, header_value, parse_f64, parse_header};

const ZERO_NORM: f64 = 1e-14;

/// The row vector `F_ℓ = [F_ℓ^{-ℓ}, …, F_ℓ^0, …, F_ℓ^ℓ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicVector {
    degree: usize,
    coeffs: RowDVector<Complex64>,
}

impl HarmonicVector {
    pub fn zeros(degree: usize) -> Self {
        Self {
            degree,
            coeffs: RowDVector::zeros(2 * degree + 1),
        }
    }

    pub fn from_row(coeffs: RowDVector<Complex64>) -> Result<Self> {
        let n = coeffs.len();
        if n % 2 == 0 {
            return domain(format!("harmonic vector length {n} is not odd"));
        }
        Ok(Self {
            degree: n / 2,
            coeffs,
        })
    }

    pub fn from_vec(values: Vec<Complex64>) -> Result<Self> {
        Self::from_row(RowDVector::from_vec(values))
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn as_row(&self) -> &RowDVector<Complex64> {
        &self.coeffs
    }

    pub fn get(&self, m: i64) -> Complex64 {
        self.coeffs[(m + self.degree as i64) as usize]
    }

    pub fn set(&mut self, m: i64, v: Complex64) {
        self.coeffs[(m + self.degree as i64) as usize] = v;
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.coeffs.iter()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            degree: self.degree,
            coeffs: self.coeffs.map(|c| c * s),
        }
    }

    /// Row-vector times matrix, `F_ℓ M`.
    pub fn mul_matrix(&self, m: &DMatrix<Complex64>) -> Self {
        assert_eq!(m.nrows(), self.coeffs.len(), "matrix dimension must be 2ℓ+1");
        Self {
            degree: m.ncols() / 2,
            coeffs: &self.coeffs * m,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.degree, other.degree);
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest deviation from `F^{-m} = (-1)^m (F^m)^*`.
    pub fn conjugate_symmetry_error(&self) -> f64 {
        let l = self.degree as i64;
        (0..=l)
            .map(|m| {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                (self.get(-m) - sign * self.get(m).conj()).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// The vector `Q_ℓ = [0, …, 0, 1, 0, …, 0]` selecting the `m = 0` entry.
pub fn center_selector(degree: usize) -> HarmonicVector {
    let mut q = HarmonicVector::zeros(degree);
    q.set(0, Complex64::new(1.0, 0.0));
    q
}

/// Unit-norm phase vector `U_ℓ = F_ℓ / ‖F_ℓ‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(HarmonicVector);

impl PhaseVector {
    pub fn vector(&self) -> &HarmonicVector {
        &self.0
    }

    pub fn into_vector(self) -> HarmonicVector {
        self.0
    }
}

/// Splits `F_ℓ` into `(‖F_ℓ‖, U_ℓ)`. A vector with norm below 1e-14 gets
/// magnitude 0 and phase `Q_ℓ`.
pub fn magnitude_phase(f: &HarmonicVector) -> (f64, PhaseVector) {
    let mag = f.norm();
    if mag < ZERO_NORM {
        return (0.0, PhaseVector(center_selector(f.degree)));
    }
    (mag, PhaseVector(f.scale(Complex64::new(1.0 / mag, 0.0))))
}

/// Coefficient vectors `F_0, …, F_{L-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    vectors: Vec<HarmonicVector>,
    real: bool,
}

impl Spectrum {
    pub fn zeros(bandwidth: usize) -> Self {
        Self {
            vectors: (0..bandwidth).map(HarmonicVector::zeros).collect(),
            real: false,
        }
    }

    /// Builds a spectrum; vector `ℓ` must have degree `ℓ`. When `real` is set
    /// the conjugate symmetry of a real function is checked to 1e-10.
    pub fn from_vectors(vectors: Vec<HarmonicVector>, real: bool) -> Result<Self> {
        for (l, v) in vectors.iter().enumerate() {
            if v.degree != l {
                return domain(format!("vector {l} has degree {}", v.degree));
            }
        }
        let s = Self { vectors, real: false };
        if real {
            let err = s.conjugate_symmetry_error();
            if err > 1e-10 {
                return domain(format!("spectrum flagged real but symmetry error is {err:e}"));
            }
        }
        Ok(Self { real, ..s })
    }

    pub fn bandwidth(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Sets the realness flag if the coefficients satisfy conjugate symmetry to 1e-10.
    pub fn mark_real_if_symmetric(&mut self) -> bool {
        self.real = self.conjugate_symmetry_error() <= 1e-10;
        self.real
    }

    pub fn vectors(&self) -> &[HarmonicVector] {
        &self.vectors
    }

    pub fn vector(&self, l: usize) -> &HarmonicVector {
        &self.vectors[l]
    }

    pub fn vector_mut(&mut self, l: usize) -> &mut HarmonicVector {
        &mut self.vectors[l]
    }

    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        self.vectors[l].get(m)
    }

    pub fn set(&mut self, l: usize, m: i64, v: Complex64) {
        self.vectors[l].set(m, v);
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.vectors.iter().map(HarmonicVector::norm).collect()
    }

    pub fn conjugate_symmetry_error(&self) -> f64 {
        self.vectors
            .iter()
            .map(HarmonicVector::conjugate_symmetry_error)
            .fold(0.0, f64::max)
    }

    /// Entrywise maximum difference over the common bandwidth.
    pub fn max_abs_diff(&self, other: &Spectrum) -> f64 {
        self.vectors
            .iter()
            .zip(&other.vectors)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vectors
            .iter()
            .flat_map(|v| v.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// `a·self + b·other` over equal bandwidths.
    pub fn linear_combination(&self, a: Complex64, other: &Spectrum, b: Complex64) -> Result<Self> {
        check_same_bandwidth(self, other)?;
        let vectors = self
            .vectors
            .iter()
            .zip(&other.vectors)
            .map(|(x, y)| HarmonicVector {
                degree: x.degree,
                coeffs: x.coeffs.map(|c| c * a) + y.coeffs.map(|c| c * b),
            })
            .collect();
        let real = self.real && other.real && a.im == 0.0 && b.im == 0.0;
        Ok(Self { vectors, real })
    }

    /// Keeps degrees `ℓ < bandwidth`.
    pub fn truncated(&self, bandwidth: usize) -> Self {
        Self {
            vectors: self.vectors.iter().take(bandwidth).cloned().collect(),
            real: self.real,
        }
    }

    /// Writes the `#sph-coeff v1` text format: a header line, then one
    /// `ℓ,m,re,im` line per coefficient with 17 significant digits.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "#sph-coeff v1 L={} real={}",
            self.bandwidth(),
            u8::from(self.real)
        )?;
        for (l, v) in self.vectors.iter().enumerate() {
            let li = l as i64;
            for m in -li..=li {
                let c = v.get(m);
                writeln!(w, "{l},{m},{:.16e},{:.16e}", c.re, c.im)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty coefficient file"))?;
        let header = header?;
        let kv = parse_header(&header, "#sph-coeff", 1)?;
        let bandwidth = header_usize(&kv, "L", 1)?;
        let real = match header_value(&kv, "real", 1)? {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(1, format!("real flag must be 0 or 1, got {other}"))),
        };
        let mut s = Spectrum::zeros(bandwidth);
        let mut seen = vec![false; bandwidth * bandwidth];
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(parse_err(lineno, "expected ℓ,m,re,im"));
            }
            let l: usize = f[0]
                .trim()
                .parse()
                .map_err(|_| parse_err(lineno, "bad degree"))?;
            let m: i64 = f[1]
                .trim()
                .parse()
                .map_err(|_| parse_err(lineno, "bad order"))?;
            if l >= bandwidth || m.unsigned_abs() as usize > l {
                return Err(parse_err(lineno, format!("index ({l},{m}) out of range")));
            }
            let v = Complex64::new(parse_f64(f[2], lineno)?, parse_f64(f[3], lineno)?);
            let slot = l * l + (m + l as i64) as usize;
            if seen[slot] {
                return Err(parse_err(lineno, format!("duplicate coefficient ({l},{m})")));
            }
            seen[slot] = true;
            s.set(l, m, v);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            let l = (missing as f64).sqrt() as usize;
            return Err(parse_err(0, format!("missing coefficients at degree {l}")));
        }
        if real {
            Spectrum::from_vectors(s.vectors, true)
        } else {
            Ok(s)
        }
    }
}

pub(crate) fn check_same_bandwidth(a: &Spectrum, b: &Spectrum) -> Result<()> {
    if a.bandwidth() != b.bandwidth() {
        return Err(SphError::BandwidthMismatch {
            left: a.bandwidth(),
            right: b.bandwidth(),
        });
    }
    Ok(())
}

/// Spectrum of the delta function at the north pole: `F_ℓ^0 = c_ℓ^0`.
pub fn delta_spectrum(bandwidth: usize) -> Spectrum {
    let mut s = Spectrum::zeros(bandwidth);
    for l in 0..bandwidth {
        s.set(l, 0, Complex64::new(norm_const(l, 0).expect("m = 0"), 0.0));
    }
    s.real = true;
    s
}

/// `I_{ℓ+1/2}(κ) / I_{1/2}(κ)` for `ℓ = 0..L-1`.
///
/// Uses the half-integer-order recurrence `i_{ℓ-1} − i_{ℓ+1} = (2ℓ+1)/κ · i_ℓ`
/// run backwards as a continued fraction for `i_ℓ / i_{ℓ-1}`; no
/// exponentials are formed, so the ratios stay finite for any `κ > 0`.
pub fn bessel_half_ratios(kappa: f64, bandwidth: usize) -> Result<Vec<f64>> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return domain(format!("concentration must be positive, got {kappa}"));
    }
    if bandwidth == 0 {
        return Ok(Vec::new());
    }
    let top = bandwidth + kappa.ceil() as usize + 100;
    let mut succ = vec![0.0; bandwidth];
    let mut r = 0.0;
    for l in (1..=top).rev() {
        r = kappa / ((2 * l + 1) as f64 + kappa * r);
        if l < bandwidth {
            succ[l] = r;
        }
    }
    let mut out = Vec::with_capacity(bandwidth);
    let mut acc = 1.0;
    out.push(acc);
    for &s in &succ[1..] {
        acc *= s;
        out.push(acc);
    }
    Ok(out)
}

pub fn bessel_half_ratio(l: usize, kappa: f64) -> Result<f64> {
    Ok(bessel_half_ratios(kappa, l + 1)?[l])
}

/// Fisher–von Mises density `κ/(4π sinh κ) e^{κ cos β}` centred on the north pole.
pub fn fisher_von_mises_density(kappa: f64, beta: f64) -> f64 {
    // κ e^{κ(cos β − 1)} / (2π (1 − e^{−2κ})), overflow-free form
    kappa * (kappa * (beta.cos() - 1.0)).exp() / (2.0 * PI * -(-2.0 * kappa).exp_m1())
}

/// Spherical-harmonic coefficients of the Fisher–von Mises density by
/// Gauss–Legendre quadrature of `∫ f(u) Y_ℓ^0(u)* du`.
///
/// The Legendre factor is integrated by parts `ℓ` times (Rodrigues), giving
/// `κ^ℓ / (2^ℓ ℓ!) ∫ e^{κx} (1 − x²)^ℓ dx`. The integrand is positive, so
/// the quadrature keeps its relative accuracy at degrees where the
/// coefficients are far below the density's own scale.
///
/// Analytically these equal `c_ℓ^0 · I_{ℓ+1/2}(κ)/I_{1/2}(κ)`; see
/// [`bessel_half_ratios`] for the ratio alone.
pub fn fisher_von_mises_spectrum(kappa: f64, bandwidth: usize) -> Result<Spectrum> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return domain(format!("concentration must be positive, got {kappa}"));
    }
    let n = bandwidth + 2 * kappa.ceil() as usize + 64;
    let (x, w) = gauss_legendre(n);
    // terms w_i e^{κ(x_i − 1)} (1 − x_i²)^ℓ, advanced one degree at a time
    let mut terms: Vec<f64> = x.iter().zip(&w).map(|(&xi, &wi)| wi * (kappa * (xi - 1.0)).exp()).collect();
    let scale = kappa / (2.0 * PI * -(-2.0 * kappa).exp_m1());
    let mut s = Spectrum::zeros(bandwidth);
    for l in 0..bandwidth {
        if l > 0 {
            for (t, &xi) in terms.iter_mut().zip(&x) {
                *t *= 1.0 - xi * xi;
            }
        }
        let integral: f64 = terms.iter().sum();
        let log_front = l as f64 * (0.5 * kappa).ln() - ln_factorial(l);
        let c0 = norm_const(l, 0).expect("m = 0");
        let v = 2.0 * PI * c0 * scale * (log_front + integral.ln()).exp();
        s.set(l, 0, Complex64::new(v, 0.0));
    }
    s.real = true;
    Ok(s)
}

/// Replaces each `F_ℓ` by `‖F_ℓ‖ Q_ℓ`; the result synthesizes to a function
/// symmetric about the north pole.
pub fn magnitude_only_spectrum(f: &Spectrum) -> Spectrum {
    let vectors = f
        .vectors
        .iter()
        .map(|v| center_selector(v.degree).scale(Complex64::new(v.norm(), 0.0)))
        .collect();
    Spectrum { vectors, real: true }
}

/// Magnitudes of `f` with the phases of `g`: `‖F_ℓ‖ U_ℓ(G)`.
pub fn phase_swap(f: &Spectrum, g: &Spectrum) -> Result<Spectrum> {
    check_same_bandwidth(f, g)?;
    let vectors = f
        .vectors
        .iter()
        .zip(&g.vectors)
        .map(|(fv, gv)| {
            let (_, phase) = magnitude_phase(gv);
            phase.into_vector().scale(Complex64::new(fv.norm(), 0.0))
        })
        .collect();
    let mut s = Spectrum {
        vectors,
        real: false,
    };
    if g.real {
        s.mark_real_if_symmetric();
    }
    Ok(s)
}

/// Degrees-of-freedom accounting for a real function with degrees `ℓ ≤ L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofCounts {
    pub max_degree: u64,
    pub total: u64,
    pub magnitude_constrained: u64,
    pub phase_constrained: u64,
}

impl DofCounts {
    /// Exact fraction constrained by phase, `L / (L+1)`.
    pub fn phase_fraction(&self) -> (u64, u64) {
        (self.phase_constrained, self.total)
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.max_degree as f64 / (self.max_degree + 1) as f64
    }
}

/// Counts for degrees `0..=L`: `(L+1)²` total, `L+1` fixed by magnitudes,
/// `L(L+1)` by phases. `real_valued = false` doubles every count.
pub fn dof_counts(max_degree: u64, real_valued: bool) -> DofCounts {
    let k = if real_valued { 1 } else { 2 };
    DofCounts {
        max_degree,
        total: k * (max_degree + 1) * (max_degree + 1),
        magnitude_constrained: k * (max_degree + 1),
        phase_constrained: k * max_degree * (max_degree + 1),
    }
}
