//! Associated Legendre functions and complex spherical harmonics.
//!
//! Conventions:
//! - `P_ℓ^m` carries the Condon–Shortley phase `(-1)^m`.
//! - `Y_ℓ^m(β, α) = c_ℓ^m P_ℓ^m(cos β) e^{-jmα}` (note the negative exponent).
//! - `Y_ℓ^{-m} = (-1)^m (Y_ℓ^m)^*`.
//!
//! With these choices `Y_ℓ^m(β, α) = c_ℓ^0 D_ℓ^{m0}(α, β, 0)` holds for the
//! Wigner matrices in [`crate::wigner`].

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::sphere::UnitVector;

/// `ln(n!)`, exact summation for small `n` and Stirling series beyond.
pub fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n <= 256 {
        return (2..=n).map(|k| (k as f64).ln()).sum();
    }
    let x = n as f64 + 1.0;
    // ln Γ(x) Stirling series, accurate to ~1e-15 relative for x > 256
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x
        + 0.5 * (2.0 * PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// Unnormalized associated Legendre function `P_ℓ^m(x)` for `0 ≤ m ≤ ℓ`,
/// including the Condon–Shortley phase.
///
/// Computed by upward recursion in `ℓ` from the diagonal term
/// `P_m^m = (-1)^m (2m-1)!! (1-x²)^{m/2}`. Overflows for `m` beyond ~150;
/// use [`legendre_table`] for normalized values at high degree.
pub fn assoc_legendre(l: usize, m: usize, x: f64) -> Result<f64> {
    if m > l {
        return domain(format!("order {m} exceeds degree {l}"));
    }
    if !(-1.0..=1.0).contains(&x) {
        return domain(format!("argument {x} outside [-1, 1]"));
    }
    let s = (1.0 - x * x).sqrt();
    let mut pmm = 1.0;
    for k in 0..m {
        pmm *= -((2 * k + 1) as f64) * s;
    }
    if l == m {
        return Ok(pmm);
    }
    let mut pm1 = x * (2 * m + 1) as f64 * pmm;
    for ll in (m + 2)..=l {
        let p = (x * (2 * ll - 1) as f64 * pm1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pm1;
        pm1 = p;
    }
    Ok(pm1)
}

/// `c_ℓ^m = sqrt((2ℓ+1)/(4π) · (ℓ-m)!/(ℓ+m)!)`, evaluated in log space.
/// Negative `m` follows the same formula.
pub fn norm_const(l: usize, m: i64) -> Result<f64> {
    if m.unsigned_abs() as usize > l {
        return domain(format!("|order| {m} exceeds degree {l}"));
    }
    let lm = (l as i64 - m) as usize;
    let lp = (l as i64 + m) as usize;
    let log_ratio = ln_factorial(lm) - ln_factorial(lp);
    Ok(((2 * l + 1) as f64 / (4.0 * PI)).sqrt() * (0.5 * log_ratio).exp())
}

/// Normalized Legendre values `c_ℓ^m P_ℓ^m(x)` for `0 ≤ m ≤ ℓ < bandwidth`,
/// stored triangularly. Stable well past `ℓ = 1000`.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    bandwidth: usize,
    values: Vec<f64>,
}

impl LegendreTable {
    #[inline]
    fn index(l: usize, m: usize) -> usize {
        l * (l + 1) / 2 + m
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// `c_ℓ^m P_ℓ^m(x)` for `m ≥ 0`.
    #[inline]
    pub fn get(&self, l: usize, m: usize) -> f64 {
        debug_assert!(m <= l && l < self.bandwidth);
        self.values[Self::index(l, m)]
    }

    /// `c_ℓ^m P_ℓ^m(x)` for signed `m`, using `c_ℓ^{-m} P_ℓ^{-m} = (-1)^m c_ℓ^m P_ℓ^m`.
    #[inline]
    pub fn get_signed(&self, l: usize, m: i64) -> f64 {
        let v = self.get(l, m.unsigned_abs() as usize);
        if m < 0 && m % 2 != 0 {
            -v
        } else {
            v
        }
    }
}

/// Builds the normalized Legendre table at `x = cos β`.
pub fn legendre_table(bandwidth: usize, x: f64) -> LegendreTable {
    let n = bandwidth * (bandwidth + 1) / 2;
    let mut values = vec![0.0; n];
    if bandwidth == 0 {
        return LegendreTable { bandwidth, values };
    }
    let x = x.clamp(-1.0, 1.0);
    let s = (1.0 - x * x).sqrt();
    // diagonal: c_m^m P_m^m = (-1)^m sqrt((2m+1)/(4π) (2m)!/(2^m m!)^2) s^m
    let mut diag = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..bandwidth {
        if m > 0 {
            let mf = m as f64;
            diag *= -s * ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt();
        }
        values[LegendreTable::index(m, m)] = diag;
        if m + 1 < bandwidth {
            values[LegendreTable::index(m + 1, m)] = x * (2.0 * m as f64 + 3.0).sqrt() * diag;
        }
        for l in (m + 2)..bandwidth {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                .sqrt();
            values[LegendreTable::index(l, m)] = a
                * (x * values[LegendreTable::index(l - 1, m)]
                    - b * values[LegendreTable::index(l - 2, m)]);
        }
    }
    LegendreTable { bandwidth, values }
}

/// `Y_ℓ^m(β, α) = c_ℓ^m P_ℓ^m(cos β) e^{-jmα}`.
pub fn eval_y(l: usize, m: i64, beta: f64, alpha: f64) -> Result<Complex64> {
    if m.unsigned_abs() as usize > l {
        return domain(format!("|order| {m} exceeds degree {l}"));
    }
    if !(0.0..=PI).contains(&beta) {
        return domain(format!("colatitude {beta} outside [0, π]"));
    }
    let table = legendre_table(l + 1, beta.cos());
    Ok(table.get_signed(l, m) * Complex64::from_polar(1.0, -(m as f64) * alpha))
}

/// The column `Y_ℓ(u) = [Y_ℓ^{-ℓ}(u), …, Y_ℓ^ℓ(u)]ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicColumn {
    degree: usize,
    values: Vec<Complex64>,
}

impl HarmonicColumn {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Entry for order `m ∈ [-ℓ, ℓ]`.
    pub fn get(&self, m: i64) -> Complex64 {
        self.values[(m + self.degree as i64) as usize]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

pub fn eval_y_column(l: usize, beta: f64, alpha: f64) -> Result<HarmonicColumn> {
    if !(0.0..=PI).contains(&beta) {
        return domain(format!("colatitude {beta} outside [0, π]"));
    }
    let table = legendre_table(l + 1, beta.cos());
    Ok(column_from_table(&table, l, alpha))
}

pub fn eval_y_column_at(l: usize, u: &UnitVector) -> HarmonicColumn {
    let (_, alpha) = u.angles();
    let table = legendre_table(l + 1, u.z);
    column_from_table(&table, l, alpha)
}

pub(crate) fn column_from_table(table: &LegendreTable, l: usize, alpha: f64) -> HarmonicColumn {
    let li = l as i64;
    let values = (-li..=li)
        .map(|m| table.get_signed(l, m) * Complex64::from_polar(1.0, -(m as f64) * alpha))
        .collect();
    HarmonicColumn { degree: l, values }
}
