//! Wigner little-d and big-D matrices.
//!
//! Row and column indices run `m, n = -ℓ..ℓ` top-to-bottom and left-to-right,
//! so matrix entry `(m + ℓ, n + ℓ)` holds `D_ℓ^{mn}`. With
//! `D_ℓ^{mn}(α, β, γ) = e^{-jmα} d_ℓ^{mn}(β) e^{-jnγ}` these matrices satisfy
//! `D_ℓ(RS) = D_ℓ(R) D_ℓ(S)` and `Y_ℓ(Ru) = D_ℓ(R) Y_ℓ(u)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::harmonics::ln_factorial;
use crate::sphere::{EulerAngles, Rotation};

/// Real orthogonal matrix `d_ℓ(β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LittleD {
    degree: usize,
    data: DMatrix<f64>,
}

impl LittleD {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// `d_ℓ^{mn}` for signed orders.
    pub fn get(&self, m: i64, n: i64) -> f64 {
        let l = self.degree as i64;
        self.data[((m + l) as usize, (n + l) as usize)]
    }
}

/// Unitary matrix `D_ℓ(R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerMatrix {
    degree: usize,
    data: DMatrix<Complex64>,
}

impl WignerMatrix {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn get(&self, m: i64, n: i64) -> Complex64 {
        let l = self.degree as i64;
        self.data[((m + l) as usize, (n + l) as usize)]
    }
}

// d^j_{mn}(β) at j = max(|m|, |n|), from the closed forms of the edge rows and
// columns. Computed in log space so that large binomials do not overflow.
fn seed(j: i64, m: i64, n: i64, cos_half: f64, sin_half: f64) -> f64 {
    // (sign, exponent of cos(β/2), exponent of sin(β/2), binomial lower index)
    let (sign_exp, pc, ps, k) = if m.abs() >= n.abs() {
        if m == j {
            (j - n, j + n, j - n, j + n)
        } else {
            (0, j - n, j + n, j + n)
        }
    } else if n == j {
        (0, j + m, j - m, j + m)
    } else {
        (j + m, j - m, j + m, j + m)
    };
    let log_binom = 0.5
        * (ln_factorial((2 * j) as usize)
            - ln_factorial(k as usize)
            - ln_factorial((2 * j - k) as usize));
    let mut sign = if sign_exp.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let mut log_mag = log_binom;
    for (base, exp) in [(cos_half, pc), (sin_half, ps)] {
        if exp == 0 {
            continue;
        }
        if base == 0.0 {
            return 0.0;
        }
        if base < 0.0 && exp % 2 == 1 {
            sign = -sign;
        }
        log_mag += exp as f64 * base.abs().ln();
    }
    sign * log_mag.exp()
}

/// All little-d matrices `d_0(β), …, d_{L-1}(β)`.
///
/// Each entry is obtained from the three-term recursion in `ℓ` at fixed
/// `(m, n)`, seeded at `ℓ = max(|m|, |n|)`:
///
/// ```text
/// d^{ℓ+1} = (ℓ+1)(2ℓ+1) / sqrt(((ℓ+1)²-m²)((ℓ+1)²-n²))
///           · [ (cos β - mn/(ℓ(ℓ+1))) d^ℓ - sqrt((ℓ²-m²)(ℓ²-n²)) / (ℓ(2ℓ+1)) d^{ℓ-1} ]
/// ```
pub fn little_d_all(bandwidth: usize, beta: f64) -> Vec<LittleD> {
    let mut out: Vec<LittleD> = (0..bandwidth)
        .map(|l| LittleD {
            degree: l,
            data: DMatrix::zeros(2 * l + 1, 2 * l + 1),
        })
        .collect();
    if bandwidth == 0 {
        return out;
    }
    if beta == 0.0 {
        for d in &mut out {
            d.data.fill_with_identity();
        }
        return out;
    }
    let (sin_half, cos_half) = (0.5 * beta).sin_cos();
    let cb = beta.cos();
    let lmax = bandwidth as i64 - 1;
    for m in -lmax..=lmax {
        for n in -lmax..=lmax {
            let j0 = m.abs().max(n.abs());
            let mut prev = 0.0;
            let mut cur = seed(j0, m, n, cos_half, sin_half);
            out[j0 as usize].data[((m + j0) as usize, (n + j0) as usize)] = cur;
            let (mf, nf) = (m as f64, n as f64);
            for l in j0..lmax {
                let lf = l as f64;
                let l1 = lf + 1.0;
                let next = if l == 0 {
                    cb * cur
                } else {
                    let a = l1 * (2.0 * lf + 1.0) / ((l1 * l1 - mf * mf) * (l1 * l1 - nf * nf)).sqrt();
                    let b = ((lf * lf - mf * mf) * (lf * lf - nf * nf)).sqrt() / (lf * (2.0 * lf + 1.0));
                    a * ((cb - mf * nf / (lf * l1)) * cur - b * prev)
                };
                prev = cur;
                cur = next;
                let li = l + 1;
                out[li as usize].data[((m + li) as usize, (n + li) as usize)] = cur;
            }
        }
    }
    out
}

pub fn little_d(l: usize, beta: f64) -> LittleD {
    little_d_all(l + 1, beta).pop().expect("bandwidth ≥ 1")
}

fn assemble(d: &LittleD, e: &EulerAngles) -> WignerMatrix {
    let l = d.degree as i64;
    let size = 2 * d.degree + 1;
    let phase_a: Vec<Complex64> = (-l..=l)
        .map(|m| Complex64::from_polar(1.0, -(m as f64) * e.alpha))
        .collect();
    let phase_g: Vec<Complex64> = (-l..=l)
        .map(|n| Complex64::from_polar(1.0, -(n as f64) * e.gamma))
        .collect();
    let data = DMatrix::from_fn(size, size, |r, c| phase_a[r] * d.data[(r, c)] * phase_g[c]);
    WignerMatrix {
        degree: d.degree,
        data,
    }
}

/// `D_ℓ^{mn}(α, β, γ) = e^{-jmα} d_ℓ^{mn}(β) e^{-jnγ}`.
pub fn wigner_d(l: usize, e: &EulerAngles) -> WignerMatrix {
    assemble(&little_d(l, e.beta), e)
}

/// `D_0(R), …, D_{L-1}(R)` sharing one little-d recursion.
pub fn wigner_d_all(bandwidth: usize, e: &EulerAngles) -> Vec<WignerMatrix> {
    little_d_all(bandwidth, e.beta)
        .iter()
        .map(|d| assemble(d, e))
        .collect()
}

/// `D_ℓ(R)` via the Euler angles of `R` (γ = 0 at gimbal lock).
pub fn wigner_d_from_rotation(l: usize, r: &Rotation) -> WignerMatrix {
    wigner_d(l, &r.to_euler())
}

pub fn wigner_d_all_from_rotation(bandwidth: usize, r: &Rotation) -> Vec<WignerMatrix> {
    wigner_d_all(bandwidth, &r.to_euler())
}
