//! Per-AP integer coefficient selection.
//!
//! Each AP picks a Gaussian-integer vector `a` that minimizes the effective
//! noise `a^H (P^-1 + g g^H)^-1 a`. The real and imaginary parts are found
//! separately by relaxing the integer program to a quadratic program whose
//! solution with the largest entry pinned to `k` is `k` times the `k = 1`
//! solution; each scaled solution is rounded and the best candidate wins.

use std::cmp::Ordering;

use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rate::effective_noise_parallel;

/// Upper cap on the number of scaled candidates examined per real part.
pub const K_MAX: u64 = 10_000;

const TIE_TOL: f64 = 1e-12;

/// Gaussian-integer vector stored as separate real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GaussianIntegerVector {
    pub re: Vec<i64>,
    pub im: Vec<i64>,
}

impl GaussianIntegerVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            re: vec![0; len],
            im: vec![0; len],
        }
    }

    pub fn unit(len: usize, index: usize) -> Self {
        let mut v = Self::zeros(len);
        v.re[index] = 1;
        v
    }

    pub fn from_parts(re: Vec<i64>, im: Vec<i64>) -> Self {
        assert_eq!(re.len(), im.len(), "real and imaginary parts differ in length");
        Self { re, im }
    }

    pub fn from_real(re: Vec<i64>) -> Self {
        let im = vec![0; re.len()];
        Self { re, im }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.re.iter().chain(&self.im).all(|&x| x == 0)
    }

    pub fn is_nonzero_at(&self, l: usize) -> bool {
        self.re[l] != 0 || self.im[l] != 0
    }

    pub fn get(&self, l: usize) -> Complex64 {
        Complex64::new(self.re[l] as f64, self.im[l] as f64)
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        (0..self.len()).map(|l| self.get(l)).collect()
    }

    /// Multiplies every entry by the Gaussian integer `c_re + i c_im`.
    pub fn scaled(&self, c_re: i64, c_im: i64) -> Self {
        let (re, im) = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&x, &y)| (x * c_re - y * c_im, x * c_im + y * c_re))
            .unzip();
        Self { re, im }
    }

    /// Associate (multiple by a unit of `Z[i]`) whose first nonzero entry has a
    /// positive real part and a nonnegative imaginary part.
    pub fn canonical(&self) -> Self {
        let Some(l) = (0..self.len()).find(|&l| self.is_nonzero_at(l)) else {
            return self.clone();
        };
        let (x, y) = (self.re[l], self.im[l]);
        if x > 0 && y >= 0 {
            self.clone()
        } else if x <= 0 && y > 0 {
            self.scaled(0, -1)
        } else if x < 0 && y <= 0 {
            self.scaled(-1, 0)
        } else {
            self.scaled(0, 1)
        }
    }

    fn lex_cmp(&self, other: &Self) -> Ordering {
        self.re.cmp(&other.re).then_with(|| self.im.cmp(&other.im))
    }
}

/// Signed permutation `S` such that `S g` is nonnegative and nondecreasing.
///
/// `perm[i]` is the source index placed at position `i`; `signs[j]` is the sign
/// applied to source index `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedPermutation {
    pub perm: Vec<usize>,
    pub signs: Vec<i8>,
}

impl SignedPermutation {
    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            signs: vec![1; n],
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn apply<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Neg<Output = T>,
    {
        self.perm
            .iter()
            .map(|&j| if self.signs[j] < 0 { -x[j] } else { x[j] })
            .collect()
    }

    pub fn invert<T>(&self, y: &[T]) -> Vec<T>
    where
        T: Copy + Default + std::ops::Neg<Output = T>,
    {
        let mut x = vec![T::default(); y.len()];
        for (i, &j) in self.perm.iter().enumerate() {
            x[j] = if self.signs[j] < 0 { -y[i] } else { y[i] };
        }
        x
    }
}

/// Sign-flips and sorts a real channel so that it becomes nonnegative and
/// nondecreasing. Ties keep their original order.
pub fn normalize_channel(g: &[f64]) -> (SignedPermutation, Vec<f64>) {
    let signs: Vec<i8> = g.iter().map(|&x| if x < 0.0 { -1 } else { 1 }).collect();
    let mut perm: Vec<usize> = (0..g.len()).collect();
    perm.sort_by(|&a, &b| g[a].abs().total_cmp(&g[b].abs()));
    let s = SignedPermutation { perm, signs };
    let sorted = s.apply(g);
    (s, sorted)
}

/// `floor(lambda_max(I + g P g^T)) = floor(1 + g^T P g)`, at least 1.
pub fn candidate_bound(p_diag: &[f64], g_sorted: &[f64]) -> u64 {
    let quad: f64 = p_diag.iter().zip(g_sorted).map(|(&p, &g)| p.max(0.0) * g * g).sum();
    let k = (1.0 + quad).floor();
    if k.is_finite() {
        (k as u64).max(1)
    } else {
        u64::MAX
    }
}

/// `a^T (P^-1 + g g^T)^-1 a` for a real channel, in inversion-free form.
/// Entries of `a` on zero-power users contribute nothing.
pub fn real_objective(p_diag: &[f64], g: &[f64], a: &[i64]) -> f64 {
    let den = 1.0 + p_diag.iter().zip(g).map(|(&p, &x)| p * x * x).sum::<f64>();
    let (quad, cross) = a.iter().zip(p_diag).zip(g).fold((0.0, 0.0), |(q, c), ((&ai, &p), &x)| {
        let ai = ai as f64;
        (q + p * ai * ai, c + p * ai * x)
    });
    (quad - cross * cross / den).max(0.0)
}

fn canonical_real(mut a: Vec<i64>) -> Vec<i64> {
    if a.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
        a.iter_mut().for_each(|x| *x = -*x);
    }
    a
}

/// Keeps the best `(objective, vector)` seen so far under the tie rule.
struct Best<V> {
    obj: f64,
    vec: Option<V>,
}

impl<V> Best<V> {
    fn new() -> Self {
        Self {
            obj: f64::INFINITY,
            vec: None,
        }
    }

    fn offer(&mut self, obj: f64, v: V, lex: impl Fn(&V, &V) -> Ordering) {
        let scale = obj.abs().max(self.obj.abs()).max(f64::MIN_POSITIVE);
        let better = match &self.vec {
            None => true,
            Some(cur) => {
                if (obj - self.obj).abs() <= TIE_TOL * scale {
                    lex(&v, cur) == Ordering::Less
                } else {
                    obj < self.obj
                }
            }
        };
        if better {
            self.obj = obj;
            self.vec = Some(v);
        }
    }
}

fn active_indices(p_diag: &[f64], allowed: Option<&[bool]>) -> Vec<usize> {
    (0..p_diag.len())
        .filter(|&l| p_diag[l] > 0.0 && allowed.is_none_or(|m| m[l]))
        .collect()
}

/// Real-valued coefficient selection for one AP.
pub fn select_real_coeff(p_diag: &[f64], g_real: &[f64]) -> Result<Vec<i64>> {
    select_real_coeff_masked(p_diag, g_real, None)
}

/// Like [`select_real_coeff`], but users outside `allowed` are forced to a
/// zero coefficient (they still count as interference).
pub fn select_real_coeff_masked(p_diag: &[f64], g_real: &[f64], allowed: Option<&[bool]>) -> Result<Vec<i64>> {
    let l = p_diag.len();
    if g_real.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            got: g_real.len(),
        });
    }
    if let Some(m) = allowed {
        if m.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                got: m.len(),
            });
        }
    }
    let active = active_indices(p_diag, allowed);
    if active.is_empty() {
        return Err(Error::NoActivePower);
    }
    let n = active.len();
    let p_act: Vec<f64> = active.iter().map(|&i| p_diag[i]).collect();
    let g_act: Vec<f64> = active.iter().map(|&i| g_real[i]).collect();
    let (perm, g_bar) = normalize_channel(&g_act);
    let p_bar = perm.apply_perm_only(&p_act);

    let scatter = |sorted: &[i64]| -> Vec<i64> {
        let local = perm.invert(sorted);
        let mut full = vec![0i64; l];
        for (k, &i) in active.iter().enumerate() {
            full[i] = local[k];
        }
        canonical_real(full)
    };
    let objective = |a: &[i64]| real_objective(p_diag, g_real, a);
    let lex = |a: &Vec<i64>, b: &Vec<i64>| a.cmp(b);

    let mut best = Best::new();
    for &i in &active {
        let mut e = vec![0i64; l];
        e[i] = 1;
        best.offer(objective(&e), e, lex);
    }
    if n == 1 {
        return Ok(best.vec.expect("at least one candidate"));
    }

    // G = (P^-1 + g g^T)^-1 restricted to the active users, in sorted order.
    // The denominator carries the full received power so that users masked out
    // of the combination still act as interference.
    let den = 1.0 + p_diag.iter().zip(g_real).map(|(&p, &x)| p * x * x).sum::<f64>();
    let u: Vec<f64> = p_bar.iter().zip(&g_bar).map(|(&p, &x)| p * x).collect();
    let gm = DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { p_bar[i] } else { 0.0 };
        diag - u[i] * u[j] / den
    });
    let g11 = gm.view((0, 0), (n - 1, n - 1)).into_owned();
    let g12: DVector<f64> = gm.view((0, n - 1), (n - 1, 1)).column(0).into_owned();
    let Some(chol) = g11.cholesky() else {
        warn!("coefficient QP: singular leading block, using unit vectors only");
        return Ok(best.vec.expect("at least one candidate"));
    };
    let r = -chol.solve(&g12);
    let base: Vec<f64> = r.iter().cloned().chain(std::iter::once(1.0)).collect();
    let base_obj = {
        let b = DVector::from_column_slice(&base);
        (b.transpose() * &gm * &b)[(0, 0)].max(0.0)
    };

    let full_bound = candidate_bound(&p_bar, &g_bar);
    let k_bound = full_bound.min(K_MAX);
    for k in 1..=k_bound {
        let kf = k as f64;
        // Any integer vector whose largest sorted entry equals k costs at least
        // k^2 times the relaxed optimum.
        if kf * kf * base_obj > best.obj * (1.0 + 1e-9) {
            break;
        }
        if k == K_MAX && full_bound > K_MAX {
            warn!("coefficient bound {full_bound} capped at {K_MAX}");
        }
        let sorted: Vec<i64> = base[..n - 1]
            .iter()
            .map(|&x| (kf * x).round() as i64)
            .chain(std::iter::once(k as i64))
            .collect();
        let cand = scatter(&sorted);
        best.offer(objective(&cand), cand, lex);
    }
    Ok(best.vec.expect("at least one candidate"))
}

impl SignedPermutation {
    /// Reorders without applying signs (used for nonnegative side data such as powers).
    fn apply_perm_only(&self, x: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&j| x[j]).collect()
    }
}

/// Real and imaginary coefficient parts chosen independently from `Re(g)` and
/// `Im(g)`. A part whose channel is identically zero on the allowed users is
/// returned as the zero vector.
pub fn real_imag_parts(p_diag: &[f64], g: &[Complex64], allowed: Option<&[bool]>) -> Result<(Vec<i64>, Vec<i64>)> {
    let active = active_indices(p_diag, allowed);
    if active.is_empty() {
        return Err(Error::NoActivePower);
    }
    let part = |proj: fn(&Complex64) -> f64| -> Result<Vec<i64>> {
        let gr: Vec<f64> = g.iter().map(proj).collect();
        if active.iter().all(|&i| gr[i] == 0.0) {
            Ok(vec![0; g.len()])
        } else {
            select_real_coeff_masked(p_diag, &gr, allowed)
        }
    };
    Ok((part(|z| z.re)?, part(|z| z.im)?))
}

/// Gaussian-integer coefficient vector for one AP.
pub fn select_coeff_complex(p_diag: &[f64], g: &[Complex64]) -> Result<GaussianIntegerVector> {
    select_coeff_complex_masked(p_diag, g, None)
}

/// Complex selection restricted to the `allowed` users.
///
/// The combined vector `re + i im`, each part alone, and every unit vector are
/// scored with the complex effective noise; the minimum wins.
pub fn select_coeff_complex_masked(
    p_diag: &[f64],
    g: &[Complex64],
    allowed: Option<&[bool]>,
) -> Result<GaussianIntegerVector> {
    let l = p_diag.len();
    if g.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            got: g.len(),
        });
    }
    let (re, im) = real_imag_parts(p_diag, g, allowed)?;
    let zeros = vec![0i64; l];
    let mut candidates = vec![
        GaussianIntegerVector::from_parts(re.clone(), im.clone()),
        GaussianIntegerVector::from_parts(re, zeros.clone()),
        GaussianIntegerVector::from_parts(zeros, im),
    ];
    candidates.extend(
        active_indices(p_diag, allowed)
            .into_iter()
            .map(|i| GaussianIntegerVector::unit(l, i)),
    );

    let mut best = Best::new();
    for c in candidates.into_iter().filter(|c| !c.is_zero()) {
        let c = c.canonical();
        best.offer(effective_noise_parallel(p_diag, g, &c), c, |a, b| a.lex_cmp(b));
    }
    Ok(best.vec.expect("unit vectors are always candidates"))
}

/// Exhaustive minimizer of `a^T (P^-1 + g g^T)^-1 a` over nonzero integer
/// vectors with entries in `[-k, k]`. Test oracle; at most four users.
pub fn exhaustive_coeff_oracle(p_diag: &[f64], g_real: &[f64], k: u64) -> Result<Vec<i64>> {
    let l = p_diag.len();
    if l > 4 {
        return Err(Error::OracleTooLarge(l));
    }
    if g_real.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            got: g_real.len(),
        });
    }
    let active: Vec<usize> = (0..l).filter(|&i| p_diag[i] > 0.0).collect();
    if active.is_empty() {
        return Err(Error::NoActivePower);
    }
    let n = active.len();
    // Explicit inverse, independent of the inversion-free path used above.
    let inv_p = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 / p_diag[active[i]] } else { 0.0 });
    let gv = DVector::from_iterator(n, active.iter().map(|&i| g_real[i]));
    let gm = (inv_p + &gv * gv.transpose())
        .try_inverse()
        .expect("P^-1 + g g^T is positive definite");

    let k = k as i64;
    let span = (2 * k + 1) as u64;
    let total = span.pow(n as u32);
    let mut best = Best::new();
    let mut local = vec![0i64; n];
    for code in 0..total {
        let mut c = code;
        for x in local.iter_mut() {
            *x = (c % span) as i64 - k;
            c /= span;
        }
        if local.iter().all(|&x| x == 0) {
            continue;
        }
        let av = DVector::from_iterator(n, local.iter().map(|&x| x as f64));
        let obj = (av.transpose() * &gm * &av)[(0, 0)];
        let mut full = vec![0i64; l];
        for (j, &i) in active.iter().enumerate() {
            full[i] = local[j];
        }
        best.offer(obj, canonical_real(full), |a: &Vec<i64>, b: &Vec<i64>| a.cmp(b));
    }
    Ok(best.vec.expect("search space contains nonzero vectors"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_sorted_input_is_identity() {
        let (s, v) = normalize_channel(&[1.0, 2.0, 3.0]);
        assert_eq!(s, SignedPermutation::identity(3));
        assert_eq!(v, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn normalize_flips_then_sorts() {
        let (s, v) = normalize_channel(&[-3.0, 1.0]);
        assert_eq!(s.signs, vec![-1, 1]);
        assert_eq!(s.perm, vec![1, 0]);
        assert_eq!(v, vec![1.0, 3.0]);
        assert_eq!(s.invert(&v), vec![-3.0, 1.0]);
    }

    #[test]
    fn bound_examples() {
        assert_eq!(candidate_bound(&[0.0, 0.0], &[1.0, 5.0]), 1);
        assert_eq!(candidate_bound(&[3.0], &[2.0]), 13);
    }

    #[test]
    fn scalar_channel_selects_one() {
        assert_eq!(select_real_coeff(&[5.0], &[2.0]).unwrap(), vec![1]);
        assert_eq!(select_real_coeff(&[5.0], &[-2.0]).unwrap(), vec![1]);
        assert_eq!(exhaustive_coeff_oracle(&[5.0], &[2.0], 3).unwrap(), vec![1]);
    }

    #[test]
    fn zero_power_users_get_zero_coefficient() {
        let a = select_real_coeff(&[0.0, 10.0, 10.0], &[3.0, 1.0, 1.0]).unwrap();
        assert_eq!(a[0], 0);
        assert!(a.iter().any(|&x| x != 0));
        assert_eq!(select_real_coeff(&[0.0, 0.0], &[1.0, 1.0]), Err(Error::NoActivePower));
    }

    #[test]
    fn qp_solution_matches_rank_one_closed_form() {
        // For G = P - u u^T / den the leading-block solve reduces to
        // r_i = p_n g_n g_i / (den - sum_{i<n} p_i g_i^2).
        let p = [0.7, 1.3, 2.0];
        let g = [0.5, 1.5, 2.5];
        let den = 1.0 + p.iter().zip(&g).map(|(p, g)| p * g * g).sum::<f64>();
        let s1 = p[0] * g[0] * g[0] + p[1] * g[1] * g[1];
        let r: Vec<f64> = (0..2).map(|i| p[2] * g[2] * g[i] / (den - s1)).collect();
        // With a strong channel the k = 1..K candidates include round(k r).
        let a = select_real_coeff(&p, &g).unwrap();
        let best = real_objective(&p, &g, &a);
        for k in 1..=candidate_bound(&p, &g) as i64 {
            let c: Vec<i64> = r.iter().map(|x| (k as f64 * x).round() as i64).chain([k]).collect();
            assert!(best <= real_objective(&p, &g, &c) + 1e-12);
        }
    }

    #[test]
    fn canonical_associate_rules() {
        let v = GaussianIntegerVector::from_parts(vec![0, -2], vec![0, 1]);
        let c = v.canonical();
        assert!(c.re[1] > 0 && c.im[1] >= 0);
        for (cr, ci) in [(1, 0), (0, 1), (-1, 0), (0, -1)] {
            assert_eq!(v.scaled(cr, ci).canonical(), c);
        }
    }

    #[test]
    fn oracle_rejects_large_problems() {
        assert_eq!(
            exhaustive_coeff_oracle(&[1.0; 5], &[1.0; 5], 1),
            Err(Error::OracleTooLarge(5))
        );
    }

    #[test]
    fn complex_with_zero_channel_ties_to_lexicographic_minimum() {
        // All unit vectors cost the same; (0, 0, 1) is lexicographically smallest.
        let g = vec![Complex64::new(0.0, 0.0); 3];
        let a = select_coeff_complex(&[1.0, 1.0, 1.0], &g).unwrap();
        assert_eq!(a, GaussianIntegerVector::unit(3, 2));
    }
}
