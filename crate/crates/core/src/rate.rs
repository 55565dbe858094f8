//! Equalization, effective noise, computation rates, recoverability over a
//! prime field, and fronthaul accounting.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeff::GaussianIntegerVector;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_sqrt, weighted_inner};

/// Default prime for the finite-field recoverability test.
pub const DEFAULT_PRIME: u64 = 257;

/// Eigenvalue ratio below which a side-information Gram matrix counts as singular.
const GRAM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub per_ue_rates: Vec<f64>,
    pub sum_rate: f64,
    pub effective_noises: Vec<f64>,
    pub fronthaul_symbols_per_use: u64,
}

impl RateReport {
    pub fn new(per_ue_rates: Vec<f64>, effective_noises: Vec<f64>, fronthaul_symbols_per_use: u64) -> Self {
        let sum_rate = per_ue_rates.iter().sum();
        Self {
            per_ue_rates,
            sum_rate,
            effective_noises,
            fronthaul_symbols_per_use,
        }
    }
}

/// `max(log2(p / noise), 0)`; zero power carries no rate.
pub fn log_plus(power: f64, noise: f64) -> f64 {
    if power <= 0.0 {
        return 0.0;
    }
    let noise = noise.max(f64::MIN_POSITIVE);
    (power / noise).log2().max(0.0)
}

/// MMSE equalization factor `b = g^H P a / (1 + g^H P g)`.
pub fn mmse_factor(p_diag: &[f64], g: &[Complex64], a: &GaussianIntegerVector) -> Complex64 {
    let a = a.to_complex();
    let num = weighted_inner(g, p_diag, &a);
    let den = 1.0 + weighted_inner(g, p_diag, g).re;
    num / den
}

/// Effective noise of Eq. (4) for an arbitrary scalar equalizer `b`:
/// `sum_l P_l |b g_l - a_l|^2 + |b|^2`.
pub fn effective_noise_with_factor(p_diag: &[f64], g: &[Complex64], a: &GaussianIntegerVector, b: Complex64) -> f64 {
    let residual: f64 = (0..g.len()).map(|l| p_diag[l] * (b * g[l] - a.get(l)).norm_sqr()).sum();
    residual + b.norm_sqr()
}

/// Minimum effective noise for parallel computation,
/// `a^H P a - |a^H P g|^2 / (1 + g^H P g)`.
pub fn effective_noise_parallel(p_diag: &[f64], g: &[Complex64], a: &GaussianIntegerVector) -> f64 {
    let (mut quad, mut cross, mut gain) = (0.0, Complex64::new(0.0, 0.0), 0.0);
    for l in 0..g.len() {
        let p = p_diag[l];
        if p == 0.0 {
            continue;
        }
        let al = a.get(l);
        quad += p * al.norm_sqr();
        cross += al.conj() * g[l] * p;
        gain += p * g[l].norm_sqr();
    }
    (quad - cross.norm_sqr() / (1.0 + gain)).max(0.0)
}

/// `(P^-1 + g g^H)^-1` via the inversion-free identity; valid for zero powers.
pub fn mmse_error_matrix(p_diag: &[f64], g: &[Complex64]) -> DMatrix<Complex64> {
    let n = g.len();
    let den = 1.0 + weighted_inner(g, p_diag, g).re;
    DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j {
            Complex64::new(p_diag[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        diag - g[i] * g[j].conj() * (p_diag[i] * p_diag[j] / den)
    })
}

/// `a^H (P^-1 + g g^H)^-1 a` by explicit matrix inversion. Requires every
/// power to be positive; used as an independent reference.
pub fn effective_noise_by_inverse(p_diag: &[f64], g: &[Complex64], a: &GaussianIntegerVector) -> Option<f64> {
    let n = g.len();
    if p_diag.iter().any(|&p| p <= 0.0) {
        return None;
    }
    let m = DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j {
            Complex64::new(1.0 / p_diag[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        diag + g[i] * g[j].conj()
    });
    let inv = m.try_inverse()?;
    let av = nalgebra::DVector::from_vec(a.to_complex());
    Some((av.adjoint() * inv * av)[(0, 0)].re)
}

fn coefficient_columns(rows: &[GaussianIntegerVector], n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, rows.len(), |i, j| rows[j].get(i))
}

/// Effective noise of combination `a` when the combinations in `a_prev` are
/// already decoded and available as side information:
/// `|| (I - F B (B^H F^H F B)^-1 B^H F^H) F a ||^2` with `F^H F = (P^-1 + g g^H)^-1`
/// and `B` holding the previous coefficient vectors as columns.
pub fn effective_noise_successive(
    p_diag: &[f64],
    g: &[Complex64],
    a: &GaussianIntegerVector,
    a_prev: &[GaussianIntegerVector],
) -> Result<f64> {
    if a_prev.is_empty() {
        return Ok(effective_noise_parallel(p_diag, g, a));
    }
    successive_projector_noise(p_diag, g, a, a_prev, true)
}

/// Shared implementation. With `strict == false` a singular Gram matrix is
/// handled with a pseudo-inverse instead of an error.
pub(crate) fn successive_projector_noise(
    p_diag: &[f64],
    g: &[Complex64],
    a: &GaussianIntegerVector,
    a_prev: &[GaussianIntegerVector],
    strict: bool,
) -> Result<f64> {
    let n = g.len();
    let q = mmse_error_matrix(p_diag, g);
    let f = hermitian_sqrt(&q);
    let b = coefficient_columns(a_prev, n);
    let fb = &f * &b;
    let gram = fb.adjoint() * &fb;
    let eig = gram.clone().symmetric_eigen();
    // Eigenvalues are judged against the scale the Gram would have if every
    // side row saw the full error matrix, so rounding residue from rows that
    // live only on zero-power users is not mistaken for information.
    let col_max = (0..b.ncols()).map(|j| b.column(j).norm_squared()).fold(0.0, f64::max);
    let floor = GRAM_TOL * q.trace().re.max(0.0) * col_max;
    let singular = eig.eigenvalues.iter().any(|&e| e <= floor);
    if singular && strict {
        return Err(Error::SingularSideInformation);
    }
    let k = gram.nrows();
    let mut dinv = DMatrix::<Complex64>::zeros(k, k);
    for i in 0..k {
        let e = eig.eigenvalues[i];
        if e > floor {
            dinv[(i, i)] = Complex64::new(1.0 / e, 0.0);
        }
    }
    let gram_inv = &eig.eigenvectors * dinv * eig.eigenvectors.adjoint();
    let proj = DMatrix::<Complex64>::identity(n, n) - &fb * gram_inv * fb.adjoint();
    let fa = &f * nalgebra::DVector::from_vec(a.to_complex());
    let v = proj * fa;
    Ok(v.norm_squared())
}

/// Per-UE rates for parallel computation: each UE tolerates the largest noise
/// among the selected combinations that involve it.
pub fn ue_rates_parallel(p_diag: &[f64], g_rows: &[Vec<Complex64>], a_rows: &[GaussianIntegerVector]) -> RateReport {
    let l = p_diag.len();
    let noises: Vec<f64> = g_rows
        .iter()
        .zip(a_rows)
        .map(|(g, a)| effective_noise_parallel(p_diag, g, a))
        .collect();
    let rates = (0..l)
        .map(|ue| {
            let worst = a_rows
                .iter()
                .zip(&noises)
                .filter(|(a, _)| a.is_nonzero_at(ue))
                .map(|(_, &s)| s)
                .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |m| m.max(s))));
            worst.map_or(0.0, |s| log_plus(p_diag[ue], s))
        })
        .collect();
    RateReport::new(rates, noises, fronthaul_load(Scheme::Parallel, a_rows.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    Parallel,
    Successive,
}

/// Fronthaul symbols per channel use for `m_selected` forwarding APs.
pub fn fronthaul_load(scheme: Scheme, m_selected: usize) -> u64 {
    let m = m_selected as u64;
    match scheme {
        Scheme::Parallel => 2 * m,
        Scheme::Successive => 4 * m,
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

fn inv_mod(x: u64, p: u64) -> u64 {
    pow_mod(x, p - 2, p)
}

/// Row-reduced echelon basis over `Z_p`; returns `(rows, pivot columns)`.
fn echelon_mod_p(mut rows: Vec<Vec<u64>>, p: u64) -> (Vec<Vec<u64>>, Vec<usize>) {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(sel) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(r, sel);
        let inv = inv_mod(rows[r][c], p);
        for x in rows[r].iter_mut() {
            *x = *x * inv % p;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c] != 0 {
                let f = rows[i][c];
                let pivot = rows[r].clone();
                for (x, y) in rows[i].iter_mut().zip(&pivot) {
                    *x = (*x + p - f * y % p) % p;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    (rows, pivots)
}

/// Stacked real matrix `[[Q^R, -Q^I], [Q^I, Q^R]]` reduced mod `p`.
pub fn stacked_mod_p(a_matrix: &[GaussianIntegerVector], p: u64) -> Vec<Vec<u64>> {
    let l = a_matrix.first().map_or(0, GaussianIntegerVector::len);
    let m = |x: i64| x.rem_euclid(p as i64) as u64;
    let top = a_matrix.iter().map(|a| {
        a.re.iter()
            .map(|&x| m(x))
            .chain(a.im.iter().map(|&y| m(-y)))
            .collect::<Vec<_>>()
    });
    let bottom = a_matrix.iter().map(|a| {
        a.im.iter()
            .map(|&y| m(y))
            .chain(a.re.iter().map(|&x| m(x)))
            .collect::<Vec<_>>()
    });
    let rows: Vec<Vec<u64>> = top.chain(bottom).collect();
    debug_assert!(rows.iter().all(|r| r.len() == 2 * l));
    rows
}

/// For each UE, whether the unit vector selecting its message lies in the row
/// space of the stacked coefficient matrix over `Z_p`.
pub fn recoverable(a_matrix: &[GaussianIntegerVector], prime_p: u64) -> Result<Vec<bool>> {
    if !is_prime(prime_p) {
        return Err(Error::NotPrime(prime_p));
    }
    let l = a_matrix.first().map_or(0, GaussianIntegerVector::len);
    let (basis, pivots) = echelon_mod_p(stacked_mod_p(a_matrix, prime_p), prime_p);
    let in_span = |target: usize| -> bool {
        let mut v = vec![0u64; 2 * l];
        v[target] = 1;
        for (row, &c) in basis.iter().zip(&pivots) {
            if v[c] != 0 {
                let f = v[c];
                for j in 0..v.len() {
                    v[j] = (v[j] + prime_p - f * row[j] % prime_p) % prime_p;
                }
            }
        }
        v.iter().all(|&x| x == 0)
    };
    Ok((0..l).map(in_span).collect())
}
