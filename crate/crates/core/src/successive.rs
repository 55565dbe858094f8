//! Successive computation: decoding order of combinations, UE-to-step
//! assignment and per-UE rates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeff::GaussianIntegerVector;
use crate::error::{Error, Result};
use crate::hungarian::max_weight_assignment;
use crate::linalg::numerical_rank;
use crate::power::{optimize_single_combination, PowerAllocation, SolverBudget};
use crate::rate::{effective_noise_parallel, fronthaul_load, log_plus, successive_projector_noise, RateReport, Scheme};

#[derive(Debug, Clone, PartialEq)]
pub struct DecodingPlan {
    /// Row indices into the selected coefficient rows, in decoding order.
    pub order: Vec<usize>,
    /// Coefficient rows in decoding order; the first `m` form the side
    /// information available at step `m + 1`.
    pub rows: Vec<GaussianIntegerVector>,
    pub power: PowerAllocation,
    pub step_noises: Vec<f64>,
}

impl DecodingPlan {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn side_info(&self, step: usize) -> &[GaussianIntegerVector] {
        &self.rows[..step]
    }

    /// Same order and power, noises recomputed on `g_rows` (indexed like the
    /// rows the plan was built from). Used when the plan was built from
    /// large-scale surrogates but rates are evaluated on the true channel.
    pub fn reevaluated(&self, g_rows: &[Vec<Complex64>]) -> Result<Self> {
        let step_noises = (0..self.len())
            .map(|m| step_noise(&self.power.p, &g_rows[self.order[m]], &self.rows[m], self.side_info(m)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            step_noises,
            ..self.clone()
        })
    }
}

fn step_noise(p: &[f64], g: &[Complex64], a: &GaussianIntegerVector, prev: &[GaussianIntegerVector]) -> Result<f64> {
    if prev.is_empty() {
        Ok(effective_noise_parallel(p, g, a))
    } else {
        // Zero-power users make the side-information Gram singular even for
        // independent rows; a pseudo-inverse is the right projector there.
        successive_projector_noise(p, g, a, prev, false)
    }
}

/// Rank of `rows` restricted to the columns flagged in `active`.
fn rank_on(rows: &[GaussianIntegerVector], active: &[bool]) -> usize {
    let cols: Vec<usize> = (0..active.len()).filter(|&c| active[c]).collect();
    let c: Vec<Vec<Complex64>> = rows.iter().map(|r| cols.iter().map(|&j| r.get(j)).collect()).collect();
    numerical_rank(&c, cols.len())
}

fn check_rows(a_rows: &[GaussianIntegerVector], g_rows: &[Vec<Complex64>]) -> Result<()> {
    if a_rows.is_empty() {
        return Err(Error::NoActivePower);
    }
    if a_rows.len() != g_rows.len() {
        return Err(Error::DimensionMismatch {
            expected: a_rows.len(),
            got: g_rows.len(),
        });
    }
    Ok(())
}

/// Greedy completion of a plan whose first row and power are fixed: at each
/// step the remaining row with the smallest successive noise that raises the
/// rank is decoded next.
fn complete_plan(
    a_rows: &[GaussianIntegerVector],
    g_rows: &[Vec<Complex64>],
    first: usize,
    power: PowerAllocation,
) -> Result<DecodingPlan> {
    // Zero-power users carry no message; once the side information spans the
    // active users' columns every further combination is already known.
    let active: Vec<bool> = power.p.iter().map(|&p| p > 0.0).collect();
    // The first row may itself be switched off entirely by the frozen power;
    // it is still decoded first but contributes no rank.
    let target = rank_on(a_rows, &active);
    let mut order = vec![first];
    let mut rows = vec![a_rows[first].clone()];
    let mut rank = rank_on(&rows, &active);
    let mut step_noises = vec![effective_noise_parallel(&power.p, &g_rows[first], &a_rows[first])];
    while rank < target {
        let mut cands = Vec::new();
        for m in 0..a_rows.len() {
            if order.contains(&m) {
                continue;
            }
            cands.push((step_noise(&power.p, &g_rows[m], &a_rows[m], &rows)?, m));
        }
        cands.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut taken = false;
        for (noise, m) in cands {
            rows.push(a_rows[m].clone());
            if rank_on(&rows, &active) > rank {
                rank += 1;
                order.push(m);
                step_noises.push(noise);
                taken = true;
                break;
            }
            rows.pop();
        }
        if !taken {
            return Err(Error::RankUnreachable { target, achieved: rank });
        }
    }
    Ok(DecodingPlan {
        order,
        rows,
        power,
        step_noises,
    })
}

/// Decoding order with power taken from the first combination's own
/// single-combination optimum, then frozen.
pub fn order_combinations(
    a_rows: &[GaussianIntegerVector],
    g_rows: &[Vec<Complex64>],
    p_total: f64,
    budget: &SolverBudget,
) -> Result<DecodingPlan> {
    check_rows(a_rows, g_rows)?;
    let mut best: Option<(f64, usize, PowerAllocation)> = None;
    for (m, (a, g)) in a_rows.iter().zip(g_rows).enumerate() {
        if a.is_zero() {
            continue;
        }
        let (p, s) = optimize_single_combination(a, g, p_total, budget)?;
        if best.as_ref().is_none_or(|(bs, _, _)| s < *bs) {
            best = Some((s, m, p));
        }
    }
    let (_, first, power) = best.ok_or(Error::NoActivePower)?;
    complete_plan(a_rows, g_rows, first, power)
}

/// Decoding order under a given, fixed power allocation.
pub fn order_combinations_with_power(
    a_rows: &[GaussianIntegerVector],
    g_rows: &[Vec<Complex64>],
    power: &PowerAllocation,
) -> Result<DecodingPlan> {
    check_rows(a_rows, g_rows)?;
    let first = a_rows
        .iter()
        .zip(g_rows)
        .enumerate()
        .filter(|(_, (a, _))| !a.is_zero())
        .map(|(m, (a, g))| (effective_noise_parallel(&power.p, g, a), m))
        .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)))
        .ok_or(Error::NoActivePower)?
        .1;
    complete_plan(a_rows, g_rows, first, power.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UeOrder {
    ReceivedPower,
    ChannelNorm,
    Hungarian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccMode {
    Literal,
    Conservative,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// UE decoded at each step; `None` when no eligible UE was left.
    pub ue_of_step: Vec<Option<usize>>,
}

impl Assignment {
    pub fn is_complete(&self) -> bool {
        self.ue_of_step.iter().all(Option::is_some)
    }
}

/// Literal-mode rate matrix `C[l][m]`: rate of UE `l` if decoded at step `m`,
/// zero when the step's combination does not involve the UE.
pub fn rate_matrix(plan: &DecodingPlan, l: usize) -> Vec<Vec<f64>> {
    (0..l)
        .map(|ue| {
            (0..plan.len())
                .map(|m| {
                    if plan.rows[m].is_nonzero_at(ue) {
                        log_plus(plan.power.p[ue], plan.step_noises[m])
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Maps UEs to decoding steps. `gains` are the rows used for the
/// received-power and norm criteria (true channel or large-scale surrogate),
/// indexed like the rows the plan was built from.
pub fn assign_ues(plan: &DecodingPlan, strategy: UeOrder, gains: &[Vec<Complex64>]) -> Assignment {
    let l = plan.power.p.len();
    let steps = plan.len();
    let mut taken = vec![false; l];
    let ue_of_step = match strategy {
        UeOrder::ReceivedPower => (0..steps)
            .map(|m| {
                let g = &gains[plan.order[m]];
                let pick = (0..l)
                    .filter(|&ue| !taken[ue] && plan.rows[m].is_nonzero_at(ue))
                    .map(|ue| (plan.power.p[ue] * g[ue].norm_sqr(), ue))
                    .fold(None, |best: Option<(f64, usize)>, c| match best {
                        Some(b) if b.0 >= c.0 => Some(b),
                        _ => Some(c),
                    })
                    .map(|(_, ue)| ue);
                if let Some(ue) = pick {
                    taken[ue] = true;
                }
                pick
            })
            .collect(),
        UeOrder::ChannelNorm => {
            let mut by_norm: Vec<(f64, usize)> = (0..l)
                .map(|ue| {
                    (
                        plan.order.iter().map(|&r| gains[r][ue].norm_sqr()).sum::<f64>().sqrt(),
                        ue,
                    )
                })
                .collect();
            by_norm.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
            (0..steps)
                .map(|m| {
                    let pick = by_norm
                        .iter()
                        .map(|&(_, ue)| ue)
                        .find(|&ue| !taken[ue] && plan.rows[m].is_nonzero_at(ue));
                    if let Some(ue) = pick {
                        taken[ue] = true;
                    }
                    pick
                })
                .collect()
        }
        UeOrder::Hungarian => {
            let c = rate_matrix(plan, l);
            let n = l.max(steps);
            let padded: Vec<Vec<f64>> = (0..n)
                .map(|ue| {
                    (0..n)
                        .map(|m| if ue < l && m < steps { c[ue][m] } else { 0.0 })
                        .collect()
                })
                .collect();
            let row_of_col = max_weight_assignment(&padded);
            (0..steps)
                .map(|m| {
                    let ue = row_of_col[m];
                    (ue < l && plan.rows[m].is_nonzero_at(ue)).then_some(ue)
                })
                .collect()
        }
    };
    Assignment { ue_of_step }
}

/// Per-UE rates of a successive plan. Unassigned UEs get rate zero.
pub fn succ_rates(plan: &DecodingPlan, assignment: &Assignment, mode: SuccMode) -> RateReport {
    let l = plan.power.p.len();
    let mut rates = vec![0.0; l];
    for (m, ue) in assignment.ue_of_step.iter().enumerate() {
        let Some(ue) = *ue else { continue };
        let noise = match mode {
            SuccMode::Literal => plan.step_noises[m],
            SuccMode::Conservative => (0..=m)
                .filter(|&j| plan.rows[j].is_nonzero_at(ue))
                .map(|j| plan.step_noises[j])
                .fold(plan.step_noises[m], f64::max),
        };
        rates[ue] = log_plus(plan.power.p[ue], noise);
    }
    RateReport::new(
        rates,
        plan.step_noises.clone(),
        fronthaul_load(Scheme::Successive, plan.len()),
    )
}
