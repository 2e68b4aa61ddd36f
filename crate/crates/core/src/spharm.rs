//! Filtering closed surfaces through their coordinate spectra.
//!
//! A genus-zero surface parameterized over the sphere is three real functions
//! `x(u), y(u), z(u)`. Stacking their coefficient vectors gives a
//! `3×(2ℓ+1)` matrix per degree, and any transfer function filters the
//! surface by right multiplication, exactly as for a scalar spectrum.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{parse_err, Result, SphError};
use crate::filtering::{apply, TransferFunction};
use crate::harmonics::eval_y_column;
use crate::spectrum::Spectrum;
use crate::sphere::{header_usize, header_value, parse_f64, parse_header, GridScheme, SphereGrid};
use crate::transform::{analyze, synthesize, AnalysisMethod, SampledField};

/// Coordinate spectra of a surface; row `r` of every degree is coordinate `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpharmSpectrum {
    coords: [Spectrum; 3],
}

impl SpharmSpectrum {
    pub fn from_coordinates(x: Spectrum, y: Spectrum, z: Spectrum) -> Result<Self> {
        let l = x.bandwidth();
        for s in [&y, &z] {
            if s.bandwidth() != l {
                return Err(SphError::BandwidthMismatch {
                    left: l,
                    right: s.bandwidth(),
                });
            }
        }
        Ok(Self { coords: [x, y, z] })
    }

    pub fn zeros(bandwidth: usize) -> Self {
        Self {
            coords: [
                Spectrum::zeros(bandwidth),
                Spectrum::zeros(bandwidth),
                Spectrum::zeros(bandwidth),
            ],
        }
    }

    pub fn bandwidth(&self) -> usize {
        self.coords[0].bandwidth()
    }

    pub fn coordinate(&self, r: usize) -> &Spectrum {
        &self.coords[r]
    }

    /// The `3×(2ℓ+1)` matrix `𝓕_ℓ`.
    pub fn matrix(&self, l: usize) -> DMatrix<Complex64> {
        let n = 2 * l + 1;
        DMatrix::from_fn(3, n, |r, c| self.coords[r].vector(l).as_row()[c])
    }

    pub fn max_abs_diff(&self, other: &SpharmSpectrum) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn conjugate_symmetry_error(&self) -> f64 {
        self.coords
            .iter()
            .map(Spectrum::conjugate_symmetry_error)
            .fold(0.0, f64::max)
    }
}

/// Three coordinate fields sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSamples {
    pub x: SampledField,
    pub y: SampledField,
    pub z: SampledField,
}

impl SurfaceSamples {
    pub fn new(x: SampledField, y: SampledField, z: SampledField) -> Result<Self> {
        if x.grid() != y.grid() || x.grid() != z.grid() {
            return Err(SphError::GridMismatch(
                "coordinate fields are sampled on different grids".into(),
            ));
        }
        Ok(Self { x, y, z })
    }

    pub fn grid(&self) -> &SphereGrid {
        self.x.grid()
    }

    /// Real parts of the coordinates, one point per grid node.
    pub fn points(&self) -> Vec<Vector3<f64>> {
        self.x
            .values()
            .iter()
            .zip(self.y.values())
            .zip(self.z.values())
            .map(|((x, y), z)| Vector3::new(x.re, y.re, z.re))
            .collect()
    }

    /// All points coincide with the origin.
    pub fn is_degenerate(&self) -> bool {
        self.points().iter().all(|p| p.norm() == 0.0)
    }

    /// Quadrature estimate of the variance of the distance from the
    /// surface's centroid.
    pub fn radial_variance(&self) -> f64 {
        let grid = self.grid();
        let pts = self.points();
        let total = 4.0 * PI;
        let weights = grid.weights();
        let centroid = pts
            .iter()
            .zip(&weights)
            .fold(Vector3::zeros(), |acc, (p, w)| acc + p * *w)
            / total;
        let radii: Vec<f64> = pts.iter().map(|p| (p - centroid).norm()).collect();
        let mean = radii.iter().zip(&weights).map(|(r, w)| r * w).sum::<f64>() / total;
        radii
            .iter()
            .zip(&weights)
            .map(|(r, w)| w * (r - mean) * (r - mean))
            .sum::<f64>()
            / total
    }

    /// Writes one `x,y,z` line per node under a
    /// `#sph-coords v1 n_beta=<> n_alpha=<> scheme=<>` header.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let g = self.grid();
        writeln!(
            w,
            "#sph-coords v1 n_beta={} n_alpha={} scheme={}",
            g.n_beta(),
            g.n_alpha(),
            g.scheme().name()
        )?;
        for p in self.points() {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", p.x, p.y, p.z)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty coordinate file"))?;
        let header = header?;
        let kv = parse_header(&header, "#sph-coords", 1)?;
        let n_beta = header_usize(&kv, "n_beta", 1)?;
        let n_alpha = header_usize(&kv, "n_alpha", 1)?;
        let scheme = match header_value(&kv, "scheme", 1) {
            Ok(s) => GridScheme::parse(s).ok_or_else(|| parse_err(1, format!("unknown scheme '{s}'")))?,
            Err(_) => GridScheme::Equiangular,
        };
        let grid = SphereGrid::new(scheme, n_beta, n_alpha)?;
        let mut cols: [Vec<f64>; 3] = Default::default();
        for (idx, line) in lines {
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
            if v.len() != 3 {
                return Err(parse_err(lineno, "expected x,y,z"));
            }
            for (c, x) in cols.iter_mut().zip(v) {
                c.push(x);
            }
        }
        let [x, y, z] = cols;
        Self::new(
            SampledField::from_real(grid.clone(), &x)?,
            SampledField::from_real(grid.clone(), &y)?,
            SampledField::from_real(grid, &z)?,
        )
    }
}

/// Analyzes each coordinate field separately.
pub fn spharm_analyze(s: &SurfaceSamples, bandwidth: usize, method: &AnalysisMethod) -> Result<SpharmSpectrum> {
    SpharmSpectrum::from_coordinates(
        analyze(&s.x, bandwidth, method)?,
        analyze(&s.y, bandwidth, method)?,
        analyze(&s.z, bandwidth, method)?,
    )
}

/// `𝓖_ℓ = 𝓕_ℓ H(ℓ)`.
pub fn spharm_filter(s: &SpharmSpectrum, h: &TransferFunction) -> Result<SpharmSpectrum> {
    if h.bandwidth() < s.bandwidth() {
        return Err(SphError::BandwidthMismatch {
            left: s.bandwidth(),
            right: h.bandwidth(),
        });
    }
    let [x, y, z] = &s.coords;
    SpharmSpectrum::from_coordinates(apply(h, x), apply(h, y), apply(h, z))
}

pub fn spharm_synthesize(s: &SpharmSpectrum, grid: &SphereGrid) -> SurfaceSamples {
    let [x, y, z] = &s.coords;
    SurfaceSamples {
        x: synthesize(x, grid),
        y: synthesize(y, grid),
        z: synthesize(z, grid),
    }
}

/// Triangle mesh with 0-based vertex indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn area(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let (a, b, c) = (self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum()
    }

    pub fn write_obj<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {:.10} {:.10} {:.10}", v.x, v.y, v.z)?;
        }
        for f in &self.faces {
            writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
        Ok(())
    }
}

fn pole_point(s: &SpharmSpectrum, beta: f64) -> Vector3<f64> {
    let mut p = [0.0; 3];
    for (r, out) in p.iter_mut().enumerate() {
        *out = (0..s.bandwidth())
            .map(|l| {
                let y = eval_y_column(l, beta, 0.0).expect("pole colatitude");
                s.coords[r]
                    .vector(l)
                    .iter()
                    .zip(y.values())
                    .map(|(f, y)| f * y)
                    .sum::<Complex64>()
                    .re
            })
            .sum();
    }
    Vector3::new(p[0], p[1], p[2])
}

/// Closed mesh from the grid samples plus both poles. Grid cells become two
/// triangles each and the polar caps are fans; faces are wound so normals
/// point outward for a positively oriented parameterization.
pub fn spharm_mesh(s: &SpharmSpectrum, grid: &SphereGrid) -> Mesh {
    let samples = spharm_synthesize(s, grid);
    let (nb, na) = (grid.n_beta(), grid.n_alpha());
    let mut vertices = samples.points();
    let north = vertices.len();
    vertices.push(pole_point(s, 0.0));
    let south = vertices.len();
    vertices.push(pole_point(s, PI));
    let at = |i: usize, j: usize| i * na + j % na;
    let mut faces = Vec::with_capacity(2 * nb * na);
    for j in 0..na {
        faces.push([north, at(0, j), at(0, j + 1)]);
        for i in 0..nb.saturating_sub(1) {
            faces.push([at(i, j), at(i + 1, j), at(i, j + 1)]);
            faces.push([at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
        faces.push([south, at(nb - 1, j + 1), at(nb - 1, j)]);
    }
    Mesh { vertices, faces }
}

/// Random real spectrum with coefficients uniform in `[-1, 1]` (conjugate
/// symmetric), damped by `1/(1+ℓ)^decay`.
pub fn random_real_spectrum(bandwidth: usize, decay: f64, seed: u64) -> Spectrum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Spectrum::zeros(bandwidth);
    for l in 0..bandwidth {
        let scale = (1.0 + l as f64).powf(-decay);
        s.set(l, 0, Complex64::new(scale * rng.gen_range(-1.0..1.0), 0.0));
        for m in 1..=l as i64 {
            let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale;
            s.set(l, m, v);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            s.set(l, -m, v.conj() * sign);
        }
    }
    s.mark_real_if_symmetric();
    s
}

/// Unit sphere with radius `1 + amplitude·b(u)`, where `b` is a random real
/// bandwidth-`bump_bandwidth` field (degrees ≥ 1) scaled so `max |b| = 1` on
/// the grid.
pub fn bumpy_sphere(grid: &SphereGrid, bump_bandwidth: usize, amplitude: f64, seed: u64) -> SurfaceSamples {
    let mut spec = random_real_spectrum(bump_bandwidth, 0.0, seed);
    if bump_bandwidth > 0 {
        spec.set(0, 0, Complex64::new(0.0, 0.0));
    }
    let b = synthesize(&spec, grid);
    let peak = b.values().iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    let scale = if peak > 0.0 { amplitude / peak } else { 0.0 };
    let coord = |k: usize| {
        let values: Vec<f64> = (0..grid.len())
            .map(|idx| {
                let u = grid.unit_vector(idx).as_vector();
                (1.0 + scale * b.values()[idx].re) * u[k]
            })
            .collect();
        SampledField::from_real(grid.clone(), &values).expect("grid sized")
    };
    SurfaceSamples {
        x: coord(0),
        y: coord(1),
        z: coord(2),
    }
}

/// The embedding `u ↦ u` of the unit sphere.
pub fn unit_sphere(grid: &SphereGrid) -> SurfaceSamples {
    bumpy_sphere(grid, 0, 0.0, 0)
}
