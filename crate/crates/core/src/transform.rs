//! Forward and inverse spherical harmonic transforms on tensor-product grids.
//!
//! Both directions are separable: a sum over orders `m` along each `α` row
//! followed by a sum over degrees with the normalized Legendre table of that
//! row's colatitude.

use std::io::{BufRead, Read, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, parse_err, Result, SphError};
use crate::harmonics::{column_from_table, legendre_table, LegendreTable};
use crate::spectrum::{HarmonicVector, Spectrum};
use crate::sphere::{
    header_usize, header_value, parse_f64, parse_header, GridScheme, SphereGrid, UnitVector,
};

/// Complex samples of a function at every node of a [`SphereGrid`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    grid: SphereGrid,
    values: Vec<Complex64>,
}

impl SampledField {
    pub fn new(grid: SphereGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SphError::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: SphereGrid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Samples `f(β, α)` at every node.
    pub fn from_fn<F>(grid: SphereGrid, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let (b, a) = grid.node(idx);
                f(b, a)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.n_alpha() + j]
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &SampledField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `∫ |f|² du` by the grid quadrature.
    pub fn energy(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        self.grid.integrate_real(&sq)
    }

    /// Index of the node with the largest real part.
    pub fn argmax_real(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| {
                if v.re > bv {
                    (i, v.re)
                } else {
                    (bi, bv)
                }
            })
            .0
    }

    /// Largest spread `max_α − min_α` of the real part over any `β` row.
    pub fn alpha_variation(&self) -> f64 {
        self.values
            .chunks(self.grid.n_alpha())
            .map(|row| {
                let (lo, hi) = row
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v.re), hi.max(v.re))
                    });
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    /// Writes the `#sph-grid v1` CSV format: one `β` row per line, real values
    /// or `re,im` pairs. `scheme=` and `complex=` header fields describe the
    /// quadrature rule and value layout.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let complex = !self.is_real();
        writeln!(
            w,
            "#sph-grid v1 n_beta={} n_alpha={} scheme={} complex={}",
            self.grid.n_beta(),
            self.grid.n_alpha(),
            self.grid.scheme().name(),
            u8::from(complex)
        )?;
        let mut line = String::new();
        for row in self.values.chunks(self.grid.n_alpha()) {
            line.clear();
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                if complex {
                    line.push_str(&format!("{:.16e},{:.16e}", v.re, v.im));
                } else {
                    line.push_str(&format!("{:.16e}", v.re));
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads the `#sph-grid v1` format. Without a `scheme=` field the grid is
    /// taken to be equiangular, and without `complex=1` values are real.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty field file"))?;
        let header = header?;
        let kv = parse_header(&header, "#sph-grid", 1)?;
        let n_beta = header_usize(&kv, "n_beta", 1)?;
        let n_alpha = header_usize(&kv, "n_alpha", 1)?;
        let scheme = match header_value(&kv, "scheme", 1) {
            Ok(s) => GridScheme::parse(s).ok_or_else(|| parse_err(1, format!("unknown scheme '{s}'")))?,
            Err(_) => GridScheme::Equiangular,
        };
        let complex = matches!(header_value(&kv, "complex", 1), Ok("1"));
        let grid = SphereGrid::new(scheme, n_beta, n_alpha)?;
        let per_row = if complex { 2 * n_alpha } else { n_alpha };
        let mut values = Vec::with_capacity(grid.len());
        let mut rows = 0;
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums = line
                .split(',')
                .map(|s| parse_f64(s, lineno))
                .collect::<Result<Vec<f64>>>()?;
            if nums.len() != per_row {
                return Err(parse_err(
                    lineno,
                    format!("expected {per_row} values, found {}", nums.len()),
                ));
            }
            if complex {
                values.extend(nums.chunks(2).map(|p| Complex64::new(p[0], p[1])));
            } else {
                values.extend(nums.iter().map(|&v| Complex64::new(v, 0.0)));
            }
            rows += 1;
        }
        if rows != n_beta {
            return Err(parse_err(0, format!("expected {n_beta} rows, found {rows}")));
        }
        Self::new(grid, values)
    }
}

// e^{-jmα_j} for m = -(L-1)..L-1 (row m + L - 1) and every grid longitude.
fn alpha_phases(grid: &SphereGrid, bandwidth: usize) -> DMatrix<Complex64> {
    let lmax = bandwidth as i64 - 1;
    let alphas = grid.alpha_nodes();
    DMatrix::from_fn((2 * lmax + 1).max(0) as usize, alphas.len(), |r, j| {
        let m = r as i64 - lmax;
        Complex64::from_polar(1.0, -(m as f64) * alphas[j])
    })
}

fn row_tables(grid: &SphereGrid, bandwidth: usize) -> Vec<LegendreTable> {
    grid.beta_nodes()
        .par_iter()
        .map(|b| legendre_table(bandwidth, b.cos()))
        .collect()
}

/// `f(u) = Σ_{ℓ<L} F_ℓ Y_ℓ(u)` at every node of `grid`.
pub fn synthesize(f: &Spectrum, grid: &SphereGrid) -> SampledField {
    let bandwidth = f.bandwidth();
    let n_alpha = grid.n_alpha();
    if bandwidth == 0 {
        return SampledField {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        };
    }
    let lmax = bandwidth as i64 - 1;
    let phases = alpha_phases(grid, bandwidth);
    let values: Vec<Complex64> = grid
        .beta_nodes()
        .par_iter()
        .flat_map_iter(|b| {
            let table = legendre_table(bandwidth, b.cos());
            let per_m: Vec<Complex64> = (-lmax..=lmax)
                .map(|m| {
                    (m.unsigned_abs() as usize..bandwidth)
                        .map(|l| f.get(l, m) * table.get_signed(l, m))
                        .sum()
                })
                .collect();
            (0..n_alpha)
                .map(|j| {
                    per_m
                        .iter()
                        .enumerate()
                        .map(|(r, s)| s * phases[(r, j)])
                        .sum::<Complex64>()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    SampledField {
        grid: grid.clone(),
        values,
    }
}

/// `f(u) = Σ_{ℓ<L} F_ℓ Y_ℓ(u)` at a single point.
pub fn evaluate(f: &Spectrum, u: &UnitVector) -> Complex64 {
    let bandwidth = f.bandwidth();
    let (_, alpha) = u.angles();
    let table = legendre_table(bandwidth, u.z);
    (0..bandwidth)
        .map(|l| {
            let y = column_from_table(&table, l, alpha);
            f.vector(l)
                .iter()
                .zip(y.values())
                .map(|(a, b)| a * b)
                .sum::<Complex64>()
        })
        .sum()
}

// a_m(i) = α-weight · Σ_j f_ij e^{+jmα_j}, stored as row i, column m + L - 1.
fn alpha_sums(f: &SampledField, phases: &DMatrix<Complex64>) -> Vec<Vec<Complex64>> {
    let grid = &f.grid;
    let n_alpha = grid.n_alpha();
    let wa = grid.alpha_weight();
    f.values
        .par_chunks(n_alpha)
        .map(|row| {
            (0..phases.nrows())
                .map(|r| {
                    wa * row
                        .iter()
                        .enumerate()
                        .map(|(j, v)| v * phases[(r, j)].conj())
                        .sum::<Complex64>()
                })
                .collect()
        })
        .collect()
}

/// `F_ℓ^m = Σ_i w_i f(u_i) Y_ℓ^m(u_i)*` over the grid nodes.
pub fn analyze_quadrature(f: &SampledField, bandwidth: usize) -> Result<Spectrum> {
    let grid = &f.grid;
    if !grid.supports(bandwidth) {
        return Err(SphError::Undersampled {
            bandwidth,
            n_beta: grid.n_beta(),
            n_alpha: grid.n_alpha(),
        });
    }
    if bandwidth == 0 {
        return Ok(Spectrum::zeros(0));
    }
    let lmax = bandwidth as i64 - 1;
    let phases = alpha_phases(grid, bandwidth);
    let sums = alpha_sums(f, &phases);
    let tables = row_tables(grid, bandwidth);
    let vectors: Vec<HarmonicVector> = (0..bandwidth)
        .into_par_iter()
        .map(|l| {
            let li = l as i64;
            let coeffs = (-li..=li)
                .map(|m| {
                    let col = (m + lmax) as usize;
                    grid.beta_weights()
                        .iter()
                        .zip(&tables)
                        .zip(&sums)
                        .map(|((w, t), a)| *w * t.get_signed(l, m) * a[col])
                        .sum()
                })
                .collect();
            HarmonicVector::from_vec(coeffs).expect("odd length")
        })
        .collect();
    Ok(finish(vectors, f.is_real()))
}

fn finish(vectors: Vec<HarmonicVector>, real_input: bool) -> Spectrum {
    let mut s = Spectrum::from_vectors(vectors, false).expect("degrees in order");
    if real_input {
        s.mark_real_if_symmetric();
    }
    s
}

/// Choice of forward transform.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum AnalysisMethod {
    #[default]
    Quadrature,
    Irf { window: Option<Vec<f64>> },
}

pub fn analyze(f: &SampledField, bandwidth: usize, method: &AnalysisMethod) -> Result<Spectrum> {
    match method {
        AnalysisMethod::Quadrature => analyze_quadrature(f, bandwidth),
        AnalysisMethod::Irf { window } => analyze_irf(f, bandwidth, window.as_deref()),
    }
}

/// Heat-kernel damping `e^{-ℓ(ℓ+1)σ}` for use as an IRF window.
pub fn heat_kernel_window(bandwidth: usize, sigma: f64) -> Vec<f64> {
    (0..bandwidth)
        .map(|l| (-((l * (l + 1)) as f64) * sigma).exp())
        .collect()
}

/// Iterative residual fitting.
///
/// For `ℓ = 0, 1, …, L−1` the degree-`ℓ` harmonics are fitted to the current
/// residual by weighted least squares (weights = quadrature weights), then
/// `window[ℓ]` times the fit is subtracted from the residual and added to the
/// coefficients. `window = None` means 1 at every degree.
pub fn analyze_irf(f: &SampledField, bandwidth: usize, window: Option<&[f64]>) -> Result<Spectrum> {
    let grid = &f.grid;
    if grid.len() < (bandwidth + 1) * (bandwidth + 1) {
        return domain(format!(
            "{} nodes cannot support IRF at bandwidth {bandwidth}",
            grid.len()
        ));
    }
    if let Some(w) = window {
        if w.len() < bandwidth {
            return domain(format!("window has {} entries, need {bandwidth}", w.len()));
        }
    }
    if bandwidth == 0 {
        return Ok(Spectrum::zeros(0));
    }
    let lmax = bandwidth as i64 - 1;
    let n_alpha = grid.n_alpha();
    let phases = alpha_phases(grid, bandwidth);
    let tables = row_tables(grid, bandwidth);
    let wa = grid.alpha_weight();
    // Σ_j w_α e^{j k α_j} for k = m − n ∈ [-2(L-1), 2(L-1)]
    let alpha_gram: Vec<Complex64> = (-2 * lmax..=2 * lmax)
        .map(|k| {
            grid.alpha_nodes()
                .iter()
                .map(|&a| Complex64::from_polar(wa, k as f64 * a))
                .sum()
        })
        .collect();
    let mut residual = f.values.clone();
    let mut vectors = Vec::with_capacity(bandwidth);
    for l in 0..bandwidth {
        let li = l as i64;
        let size = 2 * l + 1;
        let gram = DMatrix::from_fn(size, size, |r, c| {
            let (m, n) = (r as i64 - li, c as i64 - li);
            let beta_part: f64 = grid
                .beta_weights()
                .iter()
                .zip(&tables)
                .map(|(w, t)| w * t.get_signed(l, m) * t.get_signed(l, n))
                .sum();
            beta_part * alpha_gram[(m - n + 2 * lmax) as usize]
        });
        let rhs_field = SampledField {
            grid: grid.clone(),
            values: std::mem::take(&mut residual),
        };
        let sums = alpha_sums(&rhs_field, &phases);
        residual = rhs_field.values;
        let rhs = DVector::from_fn(size, |r, _| {
            let m = r as i64 - li;
            let col = (m + lmax) as usize;
            grid.beta_weights()
                .iter()
                .zip(&tables)
                .zip(&sums)
                .map(|((w, t), a)| *w * t.get_signed(l, m) * a[col])
                .sum()
        });
        let coeffs = solve_hermitian(gram, rhs, l)?;
        let scale = window.map_or(1.0, |w| w[l]);
        let coeffs = coeffs * Complex64::new(scale, 0.0);
        residual
            .par_chunks_mut(n_alpha)
            .zip(tables.par_iter())
            .for_each(|(row, t)| {
                let per_m: Vec<Complex64> = (-li..=li)
                    .map(|m| coeffs[(m + li) as usize] * t.get_signed(l, m))
                    .collect();
                for (j, v) in row.iter_mut().enumerate() {
                    let fit: Complex64 = per_m
                        .iter()
                        .enumerate()
                        .map(|(r, s)| s * phases[((r as i64 - li + lmax) as usize, j)])
                        .sum();
                    *v -= fit;
                }
            });
        vectors.push(HarmonicVector::from_vec(coeffs.iter().copied().collect())?);
    }
    Ok(finish(vectors, f.is_real()))
}

// Solves the normal equations G c = b, refusing designs whose Gram matrix is
// numerically singular.
fn solve_hermitian(gram: DMatrix<Complex64>, rhs: DVector<Complex64>, degree: usize) -> Result<DVector<Complex64>> {
    let eig = gram.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= 1e-10 * max {
        return Err(SphError::RankDeficient { degree });
    }
    let chol = gram.cholesky().ok_or(SphError::RankDeficient { degree })?;
    Ok(chol.solve(&rhs))
}

/// An 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

impl GrayImage {
    /// Reads binary (`P5`) or ASCII (`P2`) PGM.
    pub fn read_pgm<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut pos = 0;
        let mut token = |bytes: &[u8]| -> Result<String> {
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(parse_err(0, "truncated PGM header"));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };
        let magic = token(&bytes)?;
        let num = |s: String| -> Result<usize> {
            s.parse().map_err(|_| parse_err(0, format!("bad PGM header value '{s}'")))
        };
        let width = num(token(&bytes)?)?;
        let height = num(token(&bytes)?)?;
        let maxval = num(token(&bytes)?)?;
        if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
            return Err(parse_err(0, "invalid PGM dimensions or maxval"));
        }
        let count = width * height;
        let pixels: Vec<u16> = match magic.as_str() {
            "P5" => {
                let data = &bytes[(pos + 1).min(bytes.len())..];
                let bpp = if maxval < 256 { 1 } else { 2 };
                if data.len() < count * bpp {
                    return Err(parse_err(0, "truncated PGM pixel data"));
                }
                if bpp == 1 {
                    data[..count].iter().map(|&b| b as u16).collect()
                } else {
                    data[..2 * count]
                        .chunks(2)
                        .map(|p| u16::from_be_bytes([p[0], p[1]]))
                        .collect()
                }
            }
            "P2" => (0..count)
                .map(|_| {
                    token(&bytes)?
                        .parse::<u16>()
                        .map_err(|_| parse_err(0, "bad PGM pixel value"))
                })
                .collect::<Result<_>>()?,
            other => return Err(parse_err(0, format!("unsupported PGM magic '{other}'"))),
        };
        if pixels.iter().any(|&p| p as usize > maxval) {
            return Err(parse_err(0, "pixel value exceeds maxval"));
        }
        Ok(Self {
            width,
            height,
            maxval: maxval as u16,
            pixels,
        })
    }

    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P5\n{} {}\n{}\n", self.width, self.height, self.maxval)?;
        if self.maxval < 256 {
            w.write_all(&self.pixels.iter().map(|&p| p as u8).collect::<Vec<_>>())?;
        } else {
            for p in &self.pixels {
                w.write_all(&p.to_be_bytes())?;
            }
        }
        Ok(())
    }

    /// Samples on an equiangular grid with one `β` row per image row (top row
    /// = north) and one `α` column per image column, scaled to `[0, 1]` by
    /// `maxval`.
    pub fn to_field(&self) -> Result<SampledField> {
        let grid = SphereGrid::equiangular(self.height, self.width)?;
        let scale = 1.0 / self.maxval as f64;
        let values: Vec<f64> = self.pixels.iter().map(|&p| p as f64 * scale).collect();
        SampledField::from_real(grid, &values)
    }
}

/// Outcome of rendering a field to 8 bits.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub image: GrayImage,
    /// The field was constant, so the image is uniform mid-gray.
    pub degenerate: bool,
}

/// Maps the real part of `f` linearly to 0..=255, using `range` or the
/// field's own min/max. Rows are `β` rows, top = north.
pub fn render_field(f: &SampledField, range: Option<(f64, f64)>) -> Rendered {
    let re = f.real_parts();
    let (lo, hi) = range.unwrap_or_else(|| {
        re.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    });
    let degenerate = !(hi - lo > 0.0) || !(hi - lo).is_finite();
    let pixels = re
        .iter()
        .map(|&v| {
            if degenerate {
                128
            } else {
                (((v - lo) / (hi - lo)).clamp(0.0, 1.0) * 255.0).round() as u16
            }
        })
        .collect();
    Rendered {
        image: GrayImage {
            width: f.grid.n_alpha(),
            height: f.grid.n_beta(),
            maxval: 255,
            pixels,
        },
        degenerate,
    }
}
