//! Transmit power control on the shared-budget simplex.
//!
//! Parallel computation minimizes the largest effective noise among the
//! selected combinations. The min-max problem is rewritten with two scalars
//! `r` (bound on `a^H P a`) and `s` (lower bound on the signal term) and a
//! brute-force scan over `(r, s)` asks, at each grid point, whether some
//! allocation satisfies
//!
//! ```text
//! sum_l |a_ml|^2 p_l <= r                       for every AP m
//! (1/2) p^T J_m p - s v_m^T p - s >= 0          for every AP m
//! sum_l p_l = Pt,  p >= 0
//! ```
//!
//! with `(1/2) p^T J_m p = (sum_l |a_ml| |g_ml| p_l)^2`. Feasibility points are
//! searched by replacing the square with its supporting line at the current
//! iterate (an inner approximation), solving the resulting linear program, and
//! repeating from several starting allocations.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT::NonnegativeConeT,
    SupportedConeT::ZeroConeT,
};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::coeff::GaussianIntegerVector;
use crate::error::{Error, Result};
use crate::rate::effective_noise_parallel;
use crate::rng::{derive_seed, stream_rng, Stream};

/// Absolute tolerance for witness constraint checks (noise-normalized units).
pub const WITNESS_TOL: f64 = 1e-8;
/// Relative tolerance on the total-power equality.
pub const SIMPLEX_TOL: f64 = 1e-9;
/// Powers below this fraction of the budget are snapped to zero.
pub const SNAP_FRACTION: f64 = 1e-12;
const LP_MAX_ITER: u32 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub p: Vec<f64>,
    pub total: f64,
}

impl PowerAllocation {
    pub fn new(p: Vec<f64>, total: f64) -> Result<Self> {
        let a = Self { p, total };
        if !a.is_valid() {
            return Err(Error::InvalidParameter {
                name: "power allocation",
                reason: "powers must be nonnegative and sum to the budget".into(),
            });
        }
        Ok(a)
    }

    pub fn equal(l: usize, total: f64) -> Self {
        Self {
            p: vec![total / l as f64; l],
            total,
        }
    }

    /// Equal split over the users flagged in `support`.
    pub fn equal_over(support: &[bool], total: f64) -> Self {
        let n = support.iter().filter(|&&s| s).count().max(1);
        let p = support
            .iter()
            .map(|&s| if s { total / n as f64 } else { 0.0 })
            .collect();
        Self { p, total }
    }

    /// Clamps negatives, zeroes powers below `SNAP_FRACTION * total` and
    /// rescales onto the budget.
    pub fn snapped(p: &[f64], total: f64) -> Self {
        let mut p: Vec<f64> = p
            .iter()
            .map(|&x| if x < SNAP_FRACTION * total { 0.0 } else { x })
            .collect();
        let sum: f64 = p.iter().sum();
        if sum > 0.0 {
            p.iter_mut().for_each(|x| *x *= total / sum);
        }
        Self { p, total }
    }

    pub fn is_valid(&self) -> bool {
        let sum: f64 = self.p.iter().sum();
        self.p.iter().all(|&x| x >= 0.0 && x.is_finite())
            && (sum - self.total).abs() <= SIMPLEX_TOL * self.total.abs().max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityOutcome {
    Feasible(PowerAllocation),
    /// Proven infeasible by a linear outer relaxation.
    Infeasible,
    /// No witness found within the search budget.
    Unknown,
}

impl FeasibilityOutcome {
    pub fn witness(&self) -> Option<&PowerAllocation> {
        match self {
            FeasibilityOutcome::Feasible(p) => Some(p),
            _ => None,
        }
    }
}

/// Multi-start budget for the nonconvex subproblems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverBudget {
    pub starts: usize,
    pub iterations: usize,
    /// Bisection steps on `s` after the grid scan (0 keeps the plain grid).
    pub refine: usize,
    pub seed: u64,
}

impl Default for SolverBudget {
    fn default() -> Self {
        Self {
            starts: 16,
            iterations: 50,
            refine: 16,
            seed: 0,
        }
    }
}

/// Users with a nonzero coefficient in at least one row.
pub fn used_users(a_rows: &[GaussianIntegerVector], l: usize) -> Vec<bool> {
    (0..l).map(|ue| a_rows.iter().any(|a| a.is_nonzero_at(ue))).collect()
}

/// Extremes of `max_m a_m^H P a_m` over the simplex of the used users:
/// `r_max = max_m Pt max_l |a_ml|^2`, `r_min = max_m Pt min_l |a_ml|^2`.
pub fn r_bounds(a_rows: &[GaussianIntegerVector], p_total: f64) -> (f64, f64) {
    let l = a_rows.first().map_or(0, GaussianIntegerVector::len);
    let used = used_users(a_rows, l);
    let mut r_min = 0.0f64;
    let mut r_max = 0.0f64;
    for a in a_rows {
        let w: Vec<f64> = (0..l).filter(|&ue| used[ue]).map(|ue| a.get(ue).norm_sqr()).collect();
        if w.is_empty() {
            continue;
        }
        let hi = w.iter().cloned().fold(f64::MIN, f64::max);
        let lo = w.iter().cloned().fold(f64::MAX, f64::min);
        r_max = r_max.max(p_total * hi);
        r_min = r_min.max(p_total * lo);
    }
    (r_min, r_max)
}

/// Default scan steps: forty `r` values and four `s` values per `r` step.
pub fn default_steps(r_min: f64, r_max: f64) -> (f64, f64) {
    let span = r_max - r_min;
    let r_step = if span > 0.0 { span / 40.0 } else { r_max / 40.0 };
    (r_step, r_step / 4.0)
}

enum LpOutcome {
    Solved(Vec<f64>),
    /// Certified primal infeasible.
    Infeasible,
    Failed,
}

/// Dense `min c^T x` subject to equality and `<=` rows, solved by interior point.
struct Lp {
    n: usize,
    c: Vec<f64>,
    eq: Vec<(Vec<f64>, f64)>,
    le: Vec<(Vec<f64>, f64)>,
}

impl Lp {
    fn new(n: usize) -> Self {
        Self {
            n,
            c: vec![0.0; n],
            eq: Vec::new(),
            le: Vec::new(),
        }
    }

    fn eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.eq.push((row, rhs));
    }

    fn le(&mut self, row: Vec<f64>, rhs: f64) {
        self.le.push((row, rhs));
    }

    fn solve(&self) -> LpOutcome {
        let rows: Vec<&Vec<f64>> = self.eq.iter().chain(&self.le).map(|(r, _)| r).collect();
        let b: Vec<f64> = self.eq.iter().chain(&self.le).map(|&(_, v)| v).collect();
        let a = CscMatrix::from(rows);
        let p = CscMatrix::<f64>::zeros((self.n, self.n));
        let cones = [ZeroConeT(self.eq.len()), NonnegativeConeT(self.le.len())];
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(LP_MAX_ITER)
            .build()
            .expect("static solver settings are valid");
        let Ok(mut solver) = DefaultSolver::new(&p, &self.c, &a, &b, &cones, settings) else {
            return LpOutcome::Failed;
        };
        solver.solve();
        match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => LpOutcome::Solved(solver.solution.x.clone()),
            SolverStatus::PrimalInfeasible => LpOutcome::Infeasible,
            _ => LpOutcome::Failed,
        }
    }
}

/// Per-row data of the feasibility problem, restricted to used users.
struct RowData {
    /// `|a_ml|^2`
    alpha: Vec<f64>,
    /// `|a_ml| |g_ml|`
    w: Vec<f64>,
    /// `|g_ml|^2`
    v: Vec<f64>,
}

struct Problem2 {
    rows: Vec<RowData>,
    users: Vec<usize>,
    l: usize,
    p_total: f64,
}

impl Problem2 {
    fn new(a_rows: &[GaussianIntegerVector], g_rows: &[Vec<Complex64>], p_total: f64) -> Self {
        let l = a_rows.first().map_or(0, GaussianIntegerVector::len);
        let used = used_users(a_rows, l);
        let users: Vec<usize> = (0..l).filter(|&u| used[u]).collect();
        let rows = a_rows
            .iter()
            .zip(g_rows)
            .map(|(a, g)| RowData {
                alpha: users.iter().map(|&u| a.get(u).norm_sqr()).collect(),
                w: users.iter().map(|&u| a.get(u).norm() * g[u].norm()).collect(),
                v: users.iter().map(|&u| g[u].norm_sqr()).collect(),
            })
            .collect();
        Self {
            rows,
            users,
            l,
            p_total,
        }
    }

    fn expand(&self, local: &[f64]) -> PowerAllocation {
        let mut p = vec![0.0; self.l];
        for (k, &u) in self.users.iter().enumerate() {
            p[u] = local[k];
        }
        PowerAllocation::snapped(&p, self.p_total)
    }

    fn dot(x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// Base LP over `p` (and `tau` when `with_tau`): simplex plus the linear
    /// `r` constraints.
    fn base_lp(&self, r: f64, with_tau: bool) -> Lp {
        let n = self.users.len();
        let mut lp = Lp::new(n + with_tau as usize);
        let mut sum = vec![1.0; n];
        if with_tau {
            sum.push(0.0);
            let mut cap = vec![0.0; n + 1];
            cap[n] = 1.0;
            lp.le(cap, 1.0);
        }
        lp.eq(sum, self.p_total);
        for k in 0..n {
            let mut e = vec![0.0; lp.n];
            e[k] = -1.0;
            lp.le(e, 0.0);
        }
        for row in &self.rows {
            let mut e = row.alpha.clone();
            e.resize(lp.n, 0.0);
            lp.le(e, r);
        }
        lp
    }

    /// Outer relaxation: the concave map `u -> sqrt(s (1 + u))` lies above its
    /// chord over the attainable range of `u = v^T p`, so any feasible point
    /// satisfies `w^T p >= chord(v^T p)`. Infeasibility of this LP proves the
    /// original problem infeasible.
    fn outer_infeasible(&self, r: f64, s: f64) -> bool {
        let mut lp = self.base_lp(r, false);
        for row in &self.rows {
            let u_lo = self.p_total * row.v.iter().cloned().fold(f64::MAX, f64::min);
            let u_hi = self.p_total * row.v.iter().cloned().fold(f64::MIN, f64::max);
            let f = |u: f64| (s * (1.0 + u)).sqrt();
            let slope = if u_hi > u_lo {
                (f(u_hi) - f(u_lo)) / (u_hi - u_lo)
            } else {
                0.0
            };
            // w^T p - slope * v^T p >= f(u_lo) - slope * u_lo, with a small
            // allowance so solver round-off never rejects a feasible problem.
            let rhs = f(u_lo) - slope * u_lo;
            let e = row.w.iter().zip(&row.v).map(|(w, v)| slope * v - w).collect();
            lp.le(e, -(rhs - 1e-9 * rhs.abs().max(1.0)));
        }
        matches!(lp.solve(), LpOutcome::Infeasible)
    }

    fn satisfies(&self, r: f64, s: f64, local: &[f64]) -> bool {
        self.rows.iter().all(|row| {
            let x = Self::dot(&row.w, local);
            Self::dot(&row.alpha, local) <= r + WITNESS_TOL && x * x - s * Self::dot(&row.v, local) - s >= -WITNESS_TOL
        })
    }

    /// One linearized step from `p0`: maximize the smallest normalized slack.
    fn linearized_step(&self, r: f64, s: f64, p0: &[f64]) -> Option<(Vec<f64>, f64)> {
        let n = self.users.len();
        let mut lp = self.base_lp(r, true);
        lp.c[n] = -1.0;
        for row in &self.rows {
            let x0 = Self::dot(&row.w, p0);
            let scale = (x0 * x0 + s * (1.0 + Self::dot(&row.v, p0))).max(1e-300);
            // 2 x0 w^T p - s v^T p - tau * scale >= x0^2 + s
            let mut e: Vec<f64> = (0..n).map(|k| (s * row.v[k] - 2.0 * x0 * row.w[k]) / scale).collect();
            e.push(1.0);
            lp.le(e, -(x0 * x0 + s) / scale);
        }
        let LpOutcome::Solved(x) = lp.solve() else {
            return None;
        };
        let mut p: Vec<f64> = x[..n].iter().map(|v| v.max(0.0)).collect();
        let sum: f64 = p.iter().sum();
        if sum <= 0.0 {
            return None;
        }
        p.iter_mut().for_each(|x| *x *= self.p_total / sum);
        Some((p, x[n]))
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let e: Vec<f64> = (0..self.users.len()).map(|_| Exp1.sample(rng)).collect();
        let sum: f64 = e.iter().sum();
        e.iter().map(|x| x * self.p_total / sum).collect()
    }
}

fn query_seed(base: u64, r: f64, s: f64) -> u64 {
    derive_seed(base, &[r.to_bits(), s.to_bits()])
}

/// Searches for an allocation satisfying the `(r, s)` feasibility system.
/// Channel rows enter only through their magnitudes.
pub fn feasibility_point(
    r: f64,
    s: f64,
    a_rows: &[GaussianIntegerVector],
    g_rows: &[Vec<Complex64>],
    p_total: f64,
    budget: &SolverBudget,
) -> FeasibilityOutcome {
    let prob = Problem2::new(a_rows, g_rows, p_total);
    feasibility_with(&prob, r, s, budget)
}

fn feasibility_with(prob: &Problem2, r: f64, s: f64, budget: &SolverBudget) -> FeasibilityOutcome {
    let n = prob.users.len();
    if n == 0 {
        return FeasibilityOutcome::Infeasible;
    }
    if prob.outer_infeasible(r, s) {
        return FeasibilityOutcome::Infeasible;
    }
    let mut rng = stream_rng(query_seed(budget.seed, r, s), Stream::Solver);
    for start in 0..budget.starts.max(1) {
        let mut p = if start == 0 {
            vec![prob.p_total / n as f64; n]
        } else {
            prob.random_start(&mut rng)
        };
        if prob.satisfies(r, s, &p) {
            return FeasibilityOutcome::Feasible(prob.expand(&p));
        }
        let mut last_tau = f64::NEG_INFINITY;
        for _ in 0..budget.iterations {
            let Some((next, tau)) = prob.linearized_step(r, s, &p) else {
                break;
            };
            p = next;
            if prob.satisfies(r, s, &p) {
                let alloc = prob.expand(&p);
                // Snapping may move the point; keep it only if it still passes.
                let local: Vec<f64> = prob.users.iter().map(|&u| alloc.p[u]).collect();
                if prob.satisfies(r, s, &local) {
                    return FeasibilityOutcome::Feasible(alloc);
                }
            }
            if tau <= last_tau + 1e-9 {
                break;
            }
            last_tau = tau;
        }
    }
    FeasibilityOutcome::Unknown
}

/// Independent witness check written directly in the quadratic form with the
/// explicit matrix `J_m`. Returns the first violated constraint, if any.
pub fn check_feasible(
    r: f64,
    s: f64,
    p: &[f64],
    a_rows: &[GaussianIntegerVector],
    g_rows: &[Vec<Complex64>],
    p_total: f64,
) -> Option<String> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| x < 0.0) || (sum - p_total).abs() > SIMPLEX_TOL * p_total {
        return Some("power outside the simplex".into());
    }
    for (m, (a, g)) in a_rows.iter().zip(g_rows).enumerate() {
        let l = a.len();
        let c1: f64 = (0..l).map(|i| a.get(i).norm_sqr() * p[i]).sum();
        if c1 > r + WITNESS_TOL {
            return Some(format!("row {m}: a^H P a = {c1} exceeds r = {r}"));
        }
        let mut quad = 0.0;
        for i in 0..l {
            for j in 0..l {
                let jij = 2.0 * a.get(i).norm() * g[i].norm() * a.get(j).norm() * g[j].norm();
                quad += 0.5 * p[i] * jij * p[j];
            }
        }
        let vp: f64 = (0..l).map(|i| g[i].norm_sqr() * p[i]).sum();
        let c2 = quad - s * vp - s;
        if c2 < -WITNESS_TOL {
            return Some(format!("row {m}: signal constraint short by {}", -c2));
        }
    }
    None
}

/// Largest parallel effective noise over the rows.
pub fn max_parallel_noise(p: &[f64], a_rows: &[GaussianIntegerVector], g_rows: &[Vec<Complex64>]) -> f64 {
    a_rows
        .iter()
        .zip(g_rows)
        .map(|(a, g)| effective_noise_parallel(p, g, a))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParallelPower {
    pub allocation: PowerAllocation,
    /// Largest effective noise at `allocation`, evaluated on `g_rows`.
    pub t: f64,
    /// No witness was found; `allocation` is the equal split over used users.
    pub fallback: bool,
    pub feasibility_calls: usize,
}

/// Scans `r` downward from `r_max`. For each `r` the largest feasible `s` on
/// the grid `r - j s_step` is located by bisection, since feasibility is
/// monotone in `s`. The scan stops once `r` is infeasible even at the smallest
/// grid value of `s`. Every witness, plus the equal split, is scored by the
/// true largest effective noise and the best is returned.
pub fn optimize_parallel(
    a_rows: &[GaussianIntegerVector],
    g_rows: &[Vec<Complex64>],
    p_total: f64,
    r_step: f64,
    s_step: f64,
    budget: &SolverBudget,
) -> Result<ParallelPower> {
    if a_rows.is_empty() || a_rows.len() != g_rows.len() {
        return Err(Error::DimensionMismatch {
            expected: a_rows.len(),
            got: g_rows.len(),
        });
    }
    if !(r_step > 0.0 && s_step > 0.0 && p_total > 0.0) {
        return Err(Error::InvalidParameter {
            name: "step",
            reason: "steps and budget must be positive".into(),
        });
    }
    let l = a_rows[0].len();
    let used = used_users(a_rows, l);
    if !used.iter().any(|&u| u) {
        return Err(Error::NoActivePower);
    }
    // A single used user leaves one point on the simplex.
    if used.iter().filter(|&&u| u).count() == 1 {
        let allocation = PowerAllocation::equal_over(&used, p_total);
        return Ok(ParallelPower {
            t: max_parallel_noise(&allocation.p, a_rows, g_rows),
            allocation,
            fallback: false,
            feasibility_calls: 0,
        });
    }
    let prob = Problem2::new(a_rows, g_rows, p_total);
    let (r_min, r_max) = r_bounds(a_rows, p_total);
    let mut witnesses: Vec<PowerAllocation> = Vec::new();
    let mut calls = 0usize;
    // Feasibility of the pair (r, s = r - t).
    let mut query = |r: f64, t: f64, witnesses: &mut Vec<PowerAllocation>| -> bool {
        calls += 1;
        match feasibility_with(&prob, r, (r - t).max(0.0), budget) {
            FeasibilityOutcome::Feasible(w) => {
                witnesses.push(w);
                true
            }
            _ => false,
        }
    };
    // Smallest grid index j (t = j s_step) found feasible, and its r.
    let mut best_grid: Option<(usize, f64)> = None;
    let mut r = r_max;
    loop {
        let j_max = (r / s_step).floor() as usize;
        if j_max >= 1 {
            if !query(r, j_max as f64 * s_step, &mut witnesses) {
                break;
            }
            let (mut lo, mut hi) = (1usize, j_max);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if query(r, mid as f64 * s_step, &mut witnesses) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            if best_grid.is_none_or(|(j, _)| hi < j) {
                best_grid = Some((hi, r));
            }
        }
        r -= r_step;
        if r <= r_min {
            break;
        }
    }
    // The grid resolves t only to s_step; bisect between the best feasible
    // grid point and the next one down, which is what a finer s grid at that
    // r would converge to.
    if let Some((j, r)) = best_grid {
        let (mut lo, mut hi) = ((j - 1) as f64 * s_step, j as f64 * s_step);
        for _ in 0..budget.refine {
            let mid = 0.5 * (lo + hi);
            if query(r, mid, &mut witnesses) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let fallback = witnesses.is_empty();
    witnesses.push(PowerAllocation::equal_over(&used, p_total));
    let mut best: Option<(f64, PowerAllocation)> = None;
    for w in witnesses {
        let t = max_parallel_noise(&w.p, a_rows, g_rows);
        if best.as_ref().is_none_or(|(bt, _)| t < *bt) {
            best = Some((t, w));
        }
    }
    let (t, allocation) = best.expect("equal split is always a candidate");
    Ok(ParallelPower {
        allocation,
        t,
        fallback,
        feasibility_calls: calls,
    })
}

/// `optimize_parallel` with the default grid.
pub fn optimize_parallel_default(
    a_rows: &[GaussianIntegerVector],
    g_rows: &[Vec<Complex64>],
    p_total: f64,
    budget: &SolverBudget,
) -> Result<ParallelPower> {
    let (r_min, r_max) = r_bounds(a_rows, p_total);
    let (r_step, s_step) = default_steps(r_min, r_max);
    optimize_parallel(a_rows, g_rows, p_total, r_step, s_step, budget)
}

/// Euclidean projection onto `{p >= 0, sum p = total}`.
pub fn project_simplex(y: &[f64], total: f64) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - total) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn noise_gradient(p: &[f64], g: &[Complex64], a: &GaussianIntegerVector) -> Vec<f64> {
    let ac = a.to_complex();
    let c: Complex64 = (0..p.len()).map(|l| ac[l].conj() * p[l] * g[l]).sum();
    let d: f64 = 1.0 + (0..p.len()).map(|l| p[l] * g[l].norm_sqr()).sum::<f64>();
    (0..p.len())
        .map(|l| {
            let cross = 2.0 * (c.conj() * ac[l].conj() * g[l]).re;
            ac[l].norm_sqr() - (cross * d - c.norm_sqr() * g[l].norm_sqr()) / (d * d)
        })
        .collect()
}

/// Minimizes a single combination's effective noise over the simplex by
/// projected gradient descent with Armijo backtracking, multi-started.
pub fn optimize_single_combination(
    a: &GaussianIntegerVector,
    g: &[Complex64],
    p_total: f64,
    budget: &SolverBudget,
) -> Result<(PowerAllocation, f64)> {
    let l = a.len();
    if g.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            got: g.len(),
        });
    }
    if l == 0 || p_total <= 0.0 {
        return Err(Error::NoActivePower);
    }
    let f = |p: &[f64]| effective_noise_parallel(p, g, a);
    let mut rng = stream_rng(derive_seed(budget.seed, &[l as u64]), Stream::Solver);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in 0..budget.starts.max(1) {
        let mut p = if start == 0 {
            vec![p_total / l as f64; l]
        } else {
            let e: Vec<f64> = (0..l).map(|_| Exp1.sample(&mut rng)).collect();
            let sum: f64 = e.iter().sum();
            e.iter().map(|x| x * p_total / sum).collect()
        };
        let mut fp = f(&p);
        for _ in 0..budget.iterations.max(1) * 4 {
            let grad = noise_gradient(&p, g, a);
            let gmax = grad.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if gmax == 0.0 {
                break;
            }
            let mut eta = p_total / gmax;
            let mut moved = false;
            for _ in 0..40 {
                let cand = project_simplex(
                    &p.iter().zip(&grad).map(|(x, d)| x - eta * d).collect::<Vec<_>>(),
                    p_total,
                );
                let decrease: f64 = grad
                    .iter()
                    .zip(p.iter().zip(&cand))
                    .map(|(d, (x, y))| d * (x - y))
                    .sum();
                let fc = f(&cand);
                if fc <= fp - 1e-4 * decrease && decrease > 0.0 {
                    let step: f64 = p.iter().zip(&cand).map(|(x, y)| (x - y).abs()).sum();
                    p = cand;
                    moved = step > 1e-12 * p_total && fp - fc > 1e-15 * fp.abs();
                    fp = fc;
                    break;
                }
                eta *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if best.as_ref().is_none_or(|(bf, _)| fp < *bf) {
            best = Some((fp, p));
        }
    }
    let (fp, p) = best.expect("at least one start");
    let alloc = PowerAllocation::snapped(&p, p_total);
    let fa = f(&alloc.p);
    let _ = fp;
    Ok((alloc, fa))
}
