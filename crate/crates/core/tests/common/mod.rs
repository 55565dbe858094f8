#![allow(dead_code)]

use ecf::coeff::GaussianIntegerVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cn(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * (scale / 2f64.sqrt())
}

pub fn channel(rng: &mut ChaCha8Rng, l: usize, scale: f64) -> Vec<Complex64> {
    (0..l).map(|_| cn(rng, scale)).collect()
}

pub fn powers(rng: &mut ChaCha8Rng, l: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..l).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn gaussian_int(rng: &mut ChaCha8Rng, l: usize, k: i64) -> GaussianIntegerVector {
    loop {
        let re = (0..l).map(|_| rng.random_range(-k..=k)).collect();
        let im = (0..l).map(|_| rng.random_range(-k..=k)).collect();
        let v = GaussianIntegerVector::from_parts(re, im);
        if !v.is_zero() {
            return v;
        }
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                go(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Best total of `sum_m c[perm[m]][m]` over all permutations.
pub fn brute_force_assignment(c: &[Vec<f64>]) -> f64 {
    permutations(c.len())
        .iter()
        .map(|perm| perm.iter().enumerate().map(|(m, &r)| c[r][m]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest effective noise on a dense grid over the two-user simplex.
pub fn grid_min_max_noise(
    a_rows: &[GaussianIntegerVector],
    g_rows: &[Vec<Complex64>],
    p_total: f64,
    points: usize,
) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=points {
        let p1 = p_total * i as f64 / points as f64;
        let p = [p1, p_total - p1];
        let v = ecf::power::max_parallel_noise(&p, a_rows, g_rows);
        if v < best.0 {
            best = (v, p1);
        }
    }
    best
}

/// Independent Gauss-Jordan rank over `Z_p`.
pub fn rank_mod_p(rows: &[Vec<u64>], p: u64) -> usize {
    let mut m: Vec<Vec<u64>> = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..m.len()).find(|&r| !m[r][col].is_multiple_of(p)) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = pow_mod(m[rank][col], p - 2, p);
        for x in m[rank].iter_mut() {
            *x = *x * inv % p;
        }
        for r in 0..m.len() {
            if r != rank && m[r][col] != 0 {
                let f = m[r][col];
                let pivot = m[rank].clone();
                for (x, y) in m[r].iter_mut().zip(&pivot) {
                    *x = (*x + p - f * y % p) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}
