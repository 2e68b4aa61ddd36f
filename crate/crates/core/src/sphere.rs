//! Geometry on the sphere: Euler angles, rotations, unit vectors and
//! tensor-product quadrature grids.
//!
//! Rotations use the z-y-z Euler convention throughout:
//! `R(α, β, γ) = R_z(α) R_y(β) R_z(γ)`, acting on column vectors.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{BufRead, Write};

use nalgebra::{Matrix3, Vector3};

use crate::error::{domain, parse_err, Result, SphError};

const ORTHO_TOL: f64 = 1e-12;

/// z-y-z Euler angles. `alpha` and `gamma` are kept in `[0, 2π)`, `beta` in `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerAngles {
    pub const IDENTITY: EulerAngles = EulerAngles {
        alpha: 0.0,
        beta: 0.0,
        gamma: 0.0,
    };

    /// Normalizes `alpha` and `gamma` modulo 2π. A `beta` outside `[0, π]` is
    /// rejected: wrapping it would move the point to the other hemisphere.
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite()) {
            return domain("Euler angles must be finite");
        }
        check_colatitude(beta)?;
        Ok(Self {
            alpha: wrap_angle(alpha),
            beta,
            gamma: wrap_angle(gamma),
        })
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn check_colatitude(beta: f64) -> Result<()> {
    if !(0.0..=PI).contains(&beta) {
        return domain(format!("colatitude {beta} outside [0, π]"));
    }
    Ok(())
}

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitVector {
    pub const NORTH_POLE: UnitVector = UnitVector {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };

    /// `[cos α sin β, sin α sin β, cos β]`.
    pub fn from_angles(alpha: f64, beta: f64) -> Result<Self> {
        check_colatitude(beta)?;
        let (sb, cb) = beta.sin_cos();
        let (sa, ca) = alpha.sin_cos();
        Ok(Self {
            x: ca * sb,
            y: sa * sb,
            z: cb,
        })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalize(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0 && n.is_finite()) {
            return domain("cannot normalize a zero or non-finite vector");
        }
        Ok(Self {
            x: v.x / n,
            y: v.y / n,
            z: v.z / n,
        })
    }

    /// Colatitude and longitude `(β, α)`; `α = 0` at the poles.
    pub fn angles(&self) -> (f64, f64) {
        let rho = self.x.hypot(self.y);
        let beta = rho.atan2(self.z);
        let alpha = if rho == 0.0 {
            0.0
        } else {
            wrap_angle(self.y.atan2(self.x))
        };
        (beta, alpha)
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }
}

/// Convenience wrapper around [`UnitVector::from_angles`].
pub fn unit_vector(alpha: f64, beta: f64) -> Result<UnitVector> {
    UnitVector::from_angles(alpha, beta)
}

/// A proper rotation of R³ stored as an orthogonal matrix with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    matrix: Matrix3<f64>,
}

impl Rotation {
    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
        }
    }

    pub fn from_euler(e: &EulerAngles) -> Self {
        Self {
            matrix: rot_z(e.alpha) * rot_y(e.beta) * rot_z(e.gamma),
        }
    }

    /// Validates orthogonality and orientation of an arbitrary matrix.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let drift = (m * m.transpose() - Matrix3::identity()).abs().max();
        let det = m.determinant();
        if drift > ORTHO_TOL || (det - 1.0).abs() > ORTHO_TOL {
            return domain(format!(
                "matrix is not a rotation (orthogonality drift {drift:e}, det {det})"
            ));
        }
        Ok(Self { matrix: m })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
        }
    }

    /// Matrix product `self · other`, projected back onto SO(3) when
    /// floating-point drift exceeds 1e-12.
    pub fn compose(&self, other: &Rotation) -> Self {
        let m = self.matrix * other.matrix;
        let drift = (m * m.transpose() - Matrix3::identity()).abs().max();
        if drift > ORTHO_TOL {
            Self {
                matrix: polar_orthonormalize(m),
            }
        } else {
            Self { matrix: m }
        }
    }

    pub fn apply(&self, u: &UnitVector) -> UnitVector {
        let v = self.matrix * u.as_vector();
        UnitVector {
            x: v.x,
            y: v.y,
            z: v.z,
        }
    }

    /// Recovers z-y-z Euler angles. When `β ∈ {0, π}` only `α ± γ` is
    /// determined and `γ = 0` is chosen.
    pub fn to_euler(&self) -> EulerAngles {
        let m = &self.matrix;
        let sb = m[(0, 2)].hypot(m[(1, 2)]);
        let beta = sb.atan2(m[(2, 2)]);
        let (alpha, gamma) = if sb > 1e-14 {
            (m[(1, 2)].atan2(m[(0, 2)]), m[(2, 1)].atan2(-m[(2, 0)]))
        } else if m[(2, 2)] > 0.0 {
            (m[(1, 0)].atan2(m[(0, 0)]), 0.0)
        } else {
            ((-m[(1, 0)]).atan2(-m[(0, 0)]), 0.0)
        };
        EulerAngles {
            alpha: wrap_angle(alpha),
            beta: beta.clamp(0.0, PI),
            gamma: wrap_angle(gamma),
        }
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = self.to_euler();
        write!(f, "R(α={:.6}, β={:.6}, γ={:.6})", e.alpha, e.beta, e.gamma)
    }
}

pub fn rotation_from_euler(e: &EulerAngles) -> Rotation {
    Rotation::from_euler(e)
}

pub fn compose(r: &Rotation, s: &Rotation) -> Rotation {
    r.compose(s)
}

fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn rot_y(b: f64) -> Matrix3<f64> {
    let (s, c) = b.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

// Nearest orthogonal matrix U Vᵀ from the SVD.
fn polar_orthonormalize(m: Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut q = u * v_t;
    if q.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        q = u * v_t;
    }
    q
}

/// Quadrature rule used in colatitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScheme {
    /// Gauss–Legendre nodes in `cos β`: `n` nodes integrate polynomials of degree `2n − 1`.
    GaussLegendre,
    /// Midpoint-equiangular nodes `β_i = (i + ½)π/n` with Fejér first-rule
    /// weights: exact for polynomials of degree `n − 1` in `cos β`.
    Equiangular,
}

impl GridScheme {
    pub fn name(&self) -> &'static str {
        match self {
            GridScheme::GaussLegendre => "gauss-legendre",
            GridScheme::Equiangular => "equiangular",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gauss-legendre" | "gl" => Some(GridScheme::GaussLegendre),
            "equiangular" | "eq" => Some(GridScheme::Equiangular),
            _ => None,
        }
    }
}

/// A tensor-product grid on the sphere. Nodes are indexed row-major with
/// `β` rows (north to south) and `α` columns `α_j = 2πj / n_alpha`.
///
/// `beta_weights[i]` already contains the `sin β dβ` measure, so that
/// `Σ_i Σ_j beta_weights[i] · alpha_weight ≈ 4π`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    scheme: GridScheme,
    beta_nodes: Vec<f64>,
    beta_weights: Vec<f64>,
    alpha_nodes: Vec<f64>,
    alpha_weight: f64,
}

impl SphereGrid {
    pub fn new(scheme: GridScheme, n_beta: usize, n_alpha: usize) -> Result<Self> {
        if n_beta == 0 || n_alpha == 0 {
            return domain("grid needs at least one node in each direction");
        }
        let (beta_nodes, beta_weights) = match scheme {
            GridScheme::GaussLegendre => {
                let (x, w) = gauss_legendre(n_beta);
                // x ascending → β descending; reverse so β runs north to south
                let beta = x.iter().rev().map(|x| x.clamp(-1.0, 1.0).acos()).collect();
                (beta, w.into_iter().rev().collect())
            }
            GridScheme::Equiangular => fejer_first(n_beta),
        };
        Ok(Self {
            scheme,
            beta_nodes,
            beta_weights,
            alpha_nodes: (0..n_alpha).map(|j| TAU * j as f64 / n_alpha as f64).collect(),
            alpha_weight: TAU / n_alpha as f64,
        })
    }

    pub fn gauss_legendre(n_beta: usize, n_alpha: usize) -> Result<Self> {
        Self::new(GridScheme::GaussLegendre, n_beta, n_alpha)
    }

    pub fn equiangular(n_beta: usize, n_alpha: usize) -> Result<Self> {
        Self::new(GridScheme::Equiangular, n_beta, n_alpha)
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn n_beta(&self) -> usize {
        self.beta_nodes.len()
    }

    pub fn n_alpha(&self) -> usize {
        self.alpha_nodes.len()
    }

    pub fn len(&self) -> usize {
        self.n_beta() * self.n_alpha()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn beta_nodes(&self) -> &[f64] {
        &self.beta_nodes
    }

    pub fn alpha_nodes(&self) -> &[f64] {
        &self.alpha_nodes
    }

    pub fn beta_weights(&self) -> &[f64] {
        &self.beta_weights
    }

    pub fn alpha_weight(&self) -> f64 {
        self.alpha_weight
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j < self.n_alpha());
        self.beta_weights[i] * self.alpha_weight
    }

    /// All node weights in row-major order.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.len());
        for &wb in &self.beta_weights {
            w.extend(std::iter::repeat_n(wb * self.alpha_weight, self.n_alpha()));
        }
        w
    }

    /// `(β, α)` of node `idx`.
    pub fn node(&self, idx: usize) -> (f64, f64) {
        let (i, j) = (idx / self.n_alpha(), idx % self.n_alpha());
        (self.beta_nodes[i], self.alpha_nodes[j])
    }

    pub fn unit_vector(&self, idx: usize) -> UnitVector {
        let (b, a) = self.node(idx);
        UnitVector::from_angles(a, b).expect("grid nodes lie in [0, π]")
    }

    /// Largest bandwidth `L` for which products `Y_ℓ^m (Y_p^n)*`, `ℓ, p < L`,
    /// are integrated exactly.
    pub fn max_exact_bandwidth(&self) -> usize {
        let by_beta = match self.scheme {
            GridScheme::GaussLegendre => self.n_beta(),
            GridScheme::Equiangular => (self.n_beta() + 1) / 2,
        };
        by_beta.min((self.n_alpha() + 1) / 2)
    }

    pub fn supports(&self, bandwidth: usize) -> bool {
        bandwidth <= self.max_exact_bandwidth()
    }

    pub fn integrate_real(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len(), "value count must match grid");
        values
            .chunks(self.n_alpha())
            .zip(&self.beta_weights)
            .map(|(row, wb)| wb * row.iter().sum::<f64>())
            .sum::<f64>()
            * self.alpha_weight
    }

    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let mut total = 0.0;
        for (&b, &wb) in self.beta_nodes.iter().zip(&self.beta_weights) {
            let row: f64 = self.alpha_nodes.iter().map(|&a| f(b, a)).sum();
            total += wb * row;
        }
        total * self.alpha_weight
    }

    /// Plain-text serialization: a header line followed by one `beta,i,node,weight`
    /// row per colatitude and one `alpha,j,node,weight` row per longitude.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "#sph-quad v1 n_beta={} n_alpha={} scheme={}",
            self.n_beta(),
            self.n_alpha(),
            self.scheme.name()
        )?;
        for (i, (b, wb)) in self.beta_nodes.iter().zip(&self.beta_weights).enumerate() {
            writeln!(w, "beta,{i},{b:.16e},{wb:.16e}")?;
        }
        for (j, a) in self.alpha_nodes.iter().enumerate() {
            writeln!(w, "alpha,{j},{a:.16e},{:.16e}", self.alpha_weight)?;
        }
        Ok(())
    }

    /// Reads a grid written by [`SphereGrid::write_to`]. Nodes and weights are
    /// taken from the file and checked against the regenerated rule.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty grid file"))?;
        let header = header?;
        let kv = parse_header(&header, "#sph-quad", 1)?;
        let n_beta = header_usize(&kv, "n_beta", 1)?;
        let n_alpha = header_usize(&kv, "n_alpha", 1)?;
        let scheme = header_value(&kv, "scheme", 1)
            .and_then(|s| GridScheme::parse(s).ok_or_else(|| parse_err(1, "unknown scheme")))?;
        let mut grid = Self::new(scheme, n_beta, n_alpha)?;
        let (mut nb, mut na) = (0, 0);
        for (lineno, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(parse_err(lineno + 1, "expected 4 fields"));
            }
            let idx: usize = fields[1]
                .parse()
                .map_err(|_| parse_err(lineno + 1, "bad index"))?;
            let node = parse_f64(fields[2], lineno + 1)?;
            let weight = parse_f64(fields[3], lineno + 1)?;
            match fields[0] {
                "beta" if idx < n_beta => {
                    grid.beta_nodes[idx] = node;
                    grid.beta_weights[idx] = weight;
                    nb += 1;
                }
                "alpha" if idx < n_alpha => {
                    grid.alpha_nodes[idx] = node;
                    grid.alpha_weight = weight;
                    na += 1;
                }
                _ => return Err(parse_err(lineno + 1, "unknown row kind or index")),
            }
        }
        if nb != n_beta || na != n_alpha {
            return Err(parse_err(0, "row count does not match header"));
        }
        if !grid.beta_nodes.windows(2).all(|w| w[0] < w[1])
            || !grid.alpha_nodes.windows(2).all(|w| w[0] < w[1])
        {
            return Err(parse_err(0, "grid nodes must be strictly increasing"));
        }
        Ok(grid)
    }
}

/// Grid sized for bandwidth `L`: Gauss–Legendre with `oversample·L` nodes in
/// each direction.
pub fn make_grid(bandwidth: usize, oversample: usize) -> Result<SphereGrid> {
    if bandwidth < 1 {
        return domain("bandwidth must be at least 1");
    }
    if oversample < 2 {
        return domain("oversample factor must be at least 2");
    }
    let n = oversample * bandwidth;
    SphereGrid::gauss_legendre(n, n)
}

/// Gauss–Legendre nodes (ascending) and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn fejer_first(n: usize) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let nodes: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * PI / nf).collect();
    let weights = nodes
        .iter()
        .map(|&theta| {
            let s: f64 = (1..=n / 2)
                .map(|j| {
                    let jf = j as f64;
                    (2.0 * jf * theta).cos() / (4.0 * jf * jf - 1.0)
                })
                .sum();
            2.0 / nf * (1.0 - 2.0 * s)
        })
        .collect();
    (nodes, weights)
}

pub(crate) fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("invalid number '{}'", s.trim())))
}

/// Splits `#tag v1 k=v k=v` into its key/value pairs after checking the tag.
pub(crate) fn parse_header<'a>(
    header: &'a str,
    tag: &str,
    line: usize,
) -> Result<Vec<(&'a str, &'a str)>> {
    let mut parts = header.split_whitespace();
    if parts.next() != Some(tag) {
        return Err(parse_err(line, format!("expected header '{tag}'")));
    }
    if parts.next() != Some("v1") {
        return Err(parse_err(line, "unsupported format version"));
    }
    Ok(parts.filter_map(|p| p.split_once('=')).collect())
}

pub(crate) fn header_value<'a>(kv: &[(&str, &'a str)], key: &str, line: usize) -> Result<&'a str> {
    kv.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| parse_err(line, format!("missing header field '{key}'")))
}

pub(crate) fn header_usize(kv: &[(&str, &str)], key: &str, line: usize) -> Result<usize> {
    header_value(kv, key, line)?
        .parse()
        .map_err(|_| SphError::Parse {
            line,
            msg: format!("header field '{key}' is not an integer"),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_vector_examples() {
        let n = unit_vector(0.0, 0.0).unwrap();
        assert_abs_diff_eq!(n.z, 1.0);
        let x = unit_vector(0.0, PI / 2.0).unwrap();
        assert_abs_diff_eq!(x.x, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x.z, 0.0, epsilon = 1e-15);
        let y = unit_vector(PI / 2.0, PI / 2.0).unwrap();
        assert_abs_diff_eq!(y.y, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y.x, 0.0, epsilon = 1e-15);
        assert!(unit_vector(0.0, -0.1).is_err());
        assert!(unit_vector(0.0, PI + 1e-9).is_err());
    }

    #[test]
    fn euler_normalization() {
        let e = EulerAngles::new(-PI / 2.0, 0.3, 5.0 * PI).unwrap();
        assert_abs_diff_eq!(e.alpha, 1.5 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(e.gamma, PI, epsilon = 1e-14);
        assert!(EulerAngles::new(0.0, 4.0, 0.0).is_err());
        assert!(EulerAngles::new(f64::NAN, 1.0, 0.0).is_err());
    }

    #[test]
    fn rotation_examples() {
        let id = Rotation::from_euler(&EulerAngles::IDENTITY);
        assert_abs_diff_eq!((id.matrix() - Matrix3::identity()).abs().max(), 0.0);

        let rz = Rotation::from_euler(&EulerAngles::new(PI / 2.0, 0.0, 0.0).unwrap());
        let ex = rz.apply(&UnitVector { x: 1.0, y: 0.0, z: 0.0 });
        assert_abs_diff_eq!(ex.y, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ex.x, 0.0, epsilon = 1e-15);

        // direct matrix product oracle for R_y(π/32) n
        let b = PI / 32.0;
        let r1 = Rotation::from_euler(&EulerAngles::new(0.0, b, 0.0).unwrap());
        let p = r1.apply(&UnitVector::NORTH_POLE);
        let oracle = Matrix3::new(b.cos(), 0.0, b.sin(), 0.0, 1.0, 0.0, -b.sin(), 0.0, b.cos())
            * Vector3::new(0.0, 0.0, 1.0);
        assert_abs_diff_eq!(p.x, oracle.x, epsilon = 1e-15);
        assert_abs_diff_eq!(p.x, b.sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(p.z, b.cos(), epsilon = 1e-15);
    }

    #[test]
    fn compose_examples() {
        let r = Rotation::from_euler(&EulerAngles::new(0.4, 1.1, 2.0).unwrap());
        let same = compose(&r, &Rotation::identity());
        assert_abs_diff_eq!((same.matrix() - r.matrix()).abs().max(), 0.0, epsilon = 1e-15);
        let id = compose(&r, &r.inverse());
        assert!((id.matrix() - Matrix3::identity()).abs().max() < 1e-12);

        let (a1, a2) = (0.7, 1.9);
        let z1 = Rotation::from_euler(&EulerAngles::new(a1, 0.0, 0.0).unwrap());
        let z2 = Rotation::from_euler(&EulerAngles::new(a2, 0.0, 0.0).unwrap());
        let z12 = Rotation::from_euler(&EulerAngles::new(a1 + a2, 0.0, 0.0).unwrap());
        let prod = compose(&z1, &z2);
        assert!((prod.matrix() - z12.matrix()).abs().max() < 1e-14);
    }

    #[test]
    fn compose_reorthonormalizes_drift() {
        let mut m = *Rotation::from_euler(&EulerAngles::new(0.3, 0.2, 0.1).unwrap()).matrix();
        m[(0, 0)] += 1e-9;
        let r = Rotation { matrix: m };
        let c = r.compose(&Rotation::identity());
        let drift = (c.matrix() * c.matrix().transpose() - Matrix3::identity()).abs().max();
        assert!(drift < 1e-14);
        assert!((c.matrix().determinant() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn from_matrix_rejects_reflection() {
        let m = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(Rotation::from_matrix(m).is_err());
    }

    #[test]
    fn euler_round_trip_including_gimbal_lock() {
        for &(a, b, g) in &[
            (0.3, 1.2, 4.0),
            (5.0, 0.0, 0.0),
            (1.0, PI, 0.0),
            (0.0, 1e-3, 2.0),
            (2.0, PI - 1e-3, 3.0),
        ] {
            let e = EulerAngles::new(a, b, g).unwrap();
            let r = Rotation::from_euler(&e);
            let back = Rotation::from_euler(&r.to_euler());
            assert!((back.matrix() - r.matrix()).abs().max() < 1e-12, "{e:?}");
        }
        // gimbal convention
        let r = Rotation::from_euler(&EulerAngles::new(1.0, 0.0, 0.5).unwrap());
        let e = r.to_euler();
        assert_eq!(e.gamma, 0.0);
        assert_abs_diff_eq!(e.alpha, 1.5, epsilon = 1e-14);
    }

    #[test]
    fn grid_integrates_constant() {
        for scheme in [GridScheme::GaussLegendre, GridScheme::Equiangular] {
            for n in [1, 2, 7, 16, 33] {
                let g = SphereGrid::new(scheme, n, 2 * n).unwrap();
                let total: f64 = g.weights().iter().sum();
                assert_abs_diff_eq!(total, 4.0 * PI, epsilon = 1e-9);
                assert!(g.beta_nodes().windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        let (x, w) = gauss_legendre(6);
        for k in 0..12 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert_abs_diff_eq!(q, exact, epsilon = 1e-14);
        }
    }

    #[test]
    fn fejer_polynomial_exactness() {
        let n = 9;
        let (theta, w) = fejer_first(n);
        for k in 0..n as i32 {
            let q: f64 = theta.iter().zip(&w).map(|(t, w)| w * t.cos().powi(k)).sum();
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert_abs_diff_eq!(q, exact, epsilon = 1e-14);
        }
    }

    #[test]
    fn make_grid_validation() {
        assert!(make_grid(0, 2).is_err());
        assert!(make_grid(4, 1).is_err());
        let g = make_grid(5, 2).unwrap();
        assert!(g.n_beta() >= 10 && g.n_alpha() >= 10);
        assert!(g.supports(5));
    }

    #[test]
    fn exact_bandwidth_by_scheme() {
        assert_eq!(SphereGrid::gauss_legendre(8, 15).unwrap().max_exact_bandwidth(), 8);
        assert_eq!(SphereGrid::gauss_legendre(8, 13).unwrap().max_exact_bandwidth(), 7);
        assert_eq!(SphereGrid::equiangular(128, 256).unwrap().max_exact_bandwidth(), 64);
    }

    #[test]
    fn grid_text_round_trip() {
        for scheme in [GridScheme::GaussLegendre, GridScheme::Equiangular] {
            let g = SphereGrid::new(scheme, 6, 11).unwrap();
            let mut buf = Vec::new();
            g.write_to(&mut buf).unwrap();
            let back = SphereGrid::read_from(&buf[..]).unwrap();
            assert_eq!(back, g);
        }
        let bad = b"#sph-quad v1 n_beta=2 n_alpha=2 scheme=gl\nbeta,0,0.1,1.0\n";
        assert!(SphereGrid::read_from(&bad[..]).is_err());
    }
}
