//! Scheme registry and the end-to-end per-realization pipelines.
//!
//! Parallel family: coefficients at equal power, AP selection down to `L`
//! full-rank rows, optional power control, rates on the true channel.
//! Successive family adds a decoding plan and a UE-to-step assignment.

use std::cell::OnceCell;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::baselines::mrc_sum_rate;
use crate::coeff::{select_coeff_complex_masked, GaussianIntegerVector};
use crate::error::{Error, Result};
use crate::geometry::ChannelRealization;
use crate::power::{optimize_parallel_default, PowerAllocation, SolverBudget};
use crate::rate::{effective_noise_parallel, recoverable, ue_rates_parallel, RateReport, DEFAULT_PRIME};
use crate::selection::{coefficient_rank, greedy_select_partial, lsf_scores, orphaned_ues, ue_centric_cap};
use crate::successive::{
    assign_ues, order_combinations, order_combinations_with_power, succ_rates, DecodingPlan, SuccMode, UeOrder,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Cf,
    Mrc,
    Para,
    /// `None` defers to [`PipelineOptions::ue_order`].
    Succ(Option<UeOrder>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeSpec {
    pub family: Family,
    pub aps: bool,
    pub lsf: bool,
}

impl FromStr for SchemeSpec {
    type Err = Error;

    fn from_str(name: &str) -> Result<Self> {
        let unknown = || Error::UnknownScheme(name.to_string());
        let upper = name.trim().to_ascii_uppercase();
        let mut rest = upper.as_str();
        let (mut aps, mut lsf) = (false, false);
        loop {
            if let Some(r) = rest.strip_prefix("APS-") {
                if aps {
                    return Err(unknown());
                }
                aps = true;
                rest = r;
            } else if let Some(r) = rest.strip_prefix("LSF-") {
                if lsf {
                    return Err(unknown());
                }
                lsf = true;
                rest = r;
            } else {
                break;
            }
        }
        let family = match rest {
            "CF" => Family::Cf,
            "MRC" => Family::Mrc,
            "PARA" => Family::Para,
            "SUCC" => Family::Succ(None),
            "SUCC-RP" => Family::Succ(Some(UeOrder::ReceivedPower)),
            "SUCC-NORM" => Family::Succ(Some(UeOrder::ChannelNorm)),
            "SUCC-HUNGARIAN" => Family::Succ(Some(UeOrder::Hungarian)),
            _ => return Err(unknown()),
        };
        let ok = match family {
            Family::Mrc => !aps && !lsf,
            Family::Cf => !lsf,
            _ => true,
        };
        if !ok {
            return Err(unknown());
        }
        Ok(Self { family, aps, lsf })
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.aps {
            f.write_str("APS-")?;
        }
        if self.lsf {
            f.write_str("LSF-")?;
        }
        f.write_str(match self.family {
            Family::Cf => "CF",
            Family::Mrc => "MRC",
            Family::Para => "PARA",
            Family::Succ(None) => "SUCC",
            Family::Succ(Some(UeOrder::ReceivedPower)) => "SUCC-RP",
            Family::Succ(Some(UeOrder::ChannelNorm)) => "SUCC-NORM",
            Family::Succ(Some(UeOrder::Hungarian)) => "SUCC-HUNGARIAN",
        })
    }
}

/// Where the successive schemes take their (frozen) power allocation from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccPower {
    /// The min-max allocation of the parallel power control on the selected rows.
    Parallel,
    /// The single-combination optimum of the first decoded combination.
    FirstCombination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub prime: u64,
    pub ue_order: UeOrder,
    pub succ_mode: SuccMode,
    pub succ_power: SuccPower,
    /// UE-centric cap on the number of UEs each AP may combine.
    pub cap: Option<usize>,
    pub budget: SolverBudget,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            prime: DEFAULT_PRIME,
            ue_order: UeOrder::Hungarian,
            succ_mode: SuccMode::Literal,
            succ_power: SuccPower::Parallel,
            cap: None,
            budget: SolverBudget::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    /// Power control found no witness and fell back to equal power.
    pub power_fallback: bool,
    /// The coefficient rows could not reach rank `L`.
    pub rank_deficient: bool,
    /// The UE-centric cap left some UE without a serving AP.
    pub orphaned: bool,
    /// Some decoding step had no eligible UE left.
    pub partial_assignment: bool,
}

impl Flags {
    pub fn any(&self) -> bool {
        self.power_fallback || self.rank_deficient || self.orphaned || self.partial_assignment
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    pub report: RateReport,
    pub power: PowerAllocation,
    /// Selected AP indices (decoding order for successive schemes).
    pub selected: Vec<usize>,
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerMode {
    Equal,
    Instantaneous,
    LargeScale,
}

#[derive(Debug, Clone)]
struct Selection {
    /// Coefficient rows of the selected APs, in acceptance order.
    a_sel: Vec<GaussianIntegerVector>,
    selected: Vec<usize>,
    flags: Flags,
}

#[derive(Debug, Clone)]
struct Powered {
    power: PowerAllocation,
    fallback: bool,
}

/// Shared intermediate results for all schemes run on one realization, so
/// that e.g. PARA and the SUCC variants reuse one selection and one power
/// optimization.
pub struct TrialContext<'a> {
    ch: &'a ChannelRealization,
    p_total: f64,
    opts: &'a PipelineOptions,
    lsf_gains: OnceCell<Vec<Vec<Complex64>>>,
    selections: [OnceCell<Selection>; 2],
    powers: [OnceCell<Powered>; 4],
    plans: [OnceCell<(DecodingPlan, bool)>; 4],
}

impl<'a> TrialContext<'a> {
    pub fn new(ch: &'a ChannelRealization, p_total: f64, opts: &'a PipelineOptions) -> Self {
        Self {
            ch,
            p_total,
            opts,
            lsf_gains: OnceCell::new(),
            selections: Default::default(),
            powers: Default::default(),
            plans: Default::default(),
        }
    }

    fn lsf_gains(&self) -> &Vec<Vec<Complex64>> {
        self.lsf_gains.get_or_init(|| self.ch.lsf_gains())
    }

    fn equal_power(&self) -> PowerAllocation {
        PowerAllocation::equal(self.ch.num_ues(), self.p_total)
    }

    fn selection(&self, aps: bool) -> Result<&Selection> {
        let cell = &self.selections[aps as usize];
        if let Some(s) = cell.get() {
            return Ok(s);
        }
        let s = select_rows(self.ch, &self.equal_power(), aps, self.opts)?;
        Ok(cell.get_or_init(|| s))
    }

    /// Gains the CPU decides with: the true channel, or large-scale surrogates.
    fn known_gains(&self, aps: bool, lsf: bool) -> Result<Vec<Vec<Complex64>>> {
        let sel = self.selection(aps)?;
        Ok(if lsf {
            pick(self.lsf_gains(), &sel.selected)
        } else {
            pick(&self.ch.g, &sel.selected)
        })
    }

    fn parallel_power(&self, aps: bool, lsf: bool) -> Result<&Powered> {
        let cell = &self.powers[2 * aps as usize + lsf as usize];
        if let Some(p) = cell.get() {
            return Ok(p);
        }
        let sel = self.selection(aps)?;
        let gains = self.known_gains(aps, lsf)?;
        let res = optimize_parallel_default(&sel.a_sel, &gains, self.p_total, &self.opts.budget)?;
        let p = Powered {
            power: res.allocation,
            fallback: res.fallback,
        };
        Ok(cell.get_or_init(|| p))
    }

    /// Decoding plan built from the CPU's knowledge, plus the power-fallback flag.
    fn plan(&self, aps: bool, lsf: bool) -> Result<&(DecodingPlan, bool)> {
        let cell = &self.plans[2 * aps as usize + lsf as usize];
        if let Some(p) = cell.get() {
            return Ok(p);
        }
        let sel = self.selection(aps)?;
        let gains = self.known_gains(aps, lsf)?;
        let plan = match self.opts.succ_power {
            SuccPower::Parallel => {
                let pw = self.parallel_power(aps, lsf)?;
                (
                    order_combinations_with_power(&sel.a_sel, &gains, &pw.power)?,
                    pw.fallback,
                )
            }
            SuccPower::FirstCombination => (
                order_combinations(&sel.a_sel, &gains, self.p_total, &self.opts.budget)?,
                false,
            ),
        };
        Ok(cell.get_or_init(|| plan))
    }

    pub fn run_parallel(&self, aps: bool, mode: PowerMode) -> Result<SchemeOutcome> {
        let sel = self.selection(aps)?;
        let mut flags = sel.flags;
        let power = match mode {
            PowerMode::Equal => self.equal_power(),
            PowerMode::Instantaneous | PowerMode::LargeScale => {
                let pw = self.parallel_power(aps, mode == PowerMode::LargeScale)?;
                flags.power_fallback = pw.fallback;
                pw.power.clone()
            }
        };
        let g_sel = pick(&self.ch.g, &sel.selected);
        let mut report = ue_rates_parallel(&power.p, &g_sel, &sel.a_sel);
        enforce_recoverability(&mut report, &sel.a_sel, self.opts.prime)?;
        Ok(SchemeOutcome {
            report,
            power,
            selected: sel.selected.clone(),
            flags,
        })
    }

    /// Successive computation. Under `lsf` every decision (power, decoding
    /// order, assignment) uses large-scale surrogates; rates are evaluated on
    /// the true channel with those decisions.
    pub fn run_successive(&self, aps: bool, lsf: bool, order: UeOrder) -> Result<SchemeOutcome> {
        let sel = self.selection(aps)?;
        let mut flags = sel.flags;
        let (plan_known, fallback) = self.plan(aps, lsf)?;
        flags.power_fallback = *fallback;
        let gains = self.known_gains(aps, lsf)?;
        let assignment = assign_ues(plan_known, order, &gains);
        flags.partial_assignment = !assignment.is_complete();
        let true_plan;
        let plan = if lsf {
            true_plan = plan_known.reevaluated(&pick(&self.ch.g, &sel.selected))?;
            &true_plan
        } else {
            plan_known
        };
        let mut report = succ_rates(plan, &assignment, self.opts.succ_mode);
        enforce_recoverability(&mut report, &sel.a_sel, self.opts.prime)?;
        let selected = plan.order.iter().map(|&i| sel.selected[i]).collect();
        Ok(SchemeOutcome {
            report,
            power: plan.power.clone(),
            selected,
            flags,
        })
    }

    pub fn run(&self, spec: &SchemeSpec) -> Result<SchemeOutcome> {
        match spec.family {
            Family::Mrc => {
                let power = self.equal_power();
                let report = mrc_sum_rate(&self.ch.g, &power);
                Ok(SchemeOutcome {
                    report,
                    power,
                    selected: (0..self.ch.num_aps()).collect(),
                    flags: Flags::default(),
                })
            }
            Family::Cf => self.run_parallel(spec.aps, PowerMode::Equal),
            Family::Para => {
                let mode = if spec.lsf {
                    PowerMode::LargeScale
                } else {
                    PowerMode::Instantaneous
                };
                self.run_parallel(spec.aps, mode)
            }
            Family::Succ(order) => self.run_successive(spec.aps, spec.lsf, order.unwrap_or(self.opts.ue_order)),
        }
    }
}

/// Per-AP coefficients at equal power, then `L` full-rank rows. With AP
/// selection the rows are ranked by the large-scale score; without it by the
/// instantaneous effective noise of each combination. If the chosen
/// combinations cannot reach rank `L`, unselected APs are switched to
/// single-user combinations (same ranking rule) until they do.
fn select_rows(ch: &ChannelRealization, p0: &PowerAllocation, aps: bool, opts: &PipelineOptions) -> Result<Selection> {
    let l = ch.num_ues();
    let mut flags = Flags::default();
    let mask = match opts.cap {
        Some(c) => {
            let m = ue_centric_cap(&ch.beta.beta, c)?;
            flags.orphaned = !orphaned_ues(&m).is_empty();
            Some(m)
        }
        None => None,
    };
    let allowed = |m: usize, u: usize| mask.as_ref().is_none_or(|k| k[m][u]);
    let a_rows =
        ch.g.iter()
            .enumerate()
            .map(|(m, g)| select_coeff_complex_masked(&p0.p, g, mask.as_ref().map(|k| k[m].as_slice())))
            .collect::<Result<Vec<_>>>()?;
    let scores = if aps {
        lsf_scores(&ch.beta.beta, &a_rows)?
    } else {
        a_rows
            .iter()
            .zip(&ch.g)
            .map(|(a, g)| -effective_noise_parallel(&p0.p, g, a))
            .collect()
    };
    let mut selected = greedy_select_partial(&a_rows, &scores, l)?;
    let mut a_sel = pick(&a_rows, &selected);
    if selected.len() < l {
        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        for m in (0..ch.num_aps()).filter(|m| !selected.contains(m)) {
            for u in (0..l).filter(|&u| allowed(m, u)) {
                let e = GaussianIntegerVector::unit(l, u);
                let score = if aps {
                    let b = ch.beta.beta[m][u];
                    2.0 * b * b
                } else {
                    -effective_noise_parallel(&p0.p, &ch.g[m], &e)
                };
                cands.push((score, m, u));
            }
        }
        cands.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        for (_, m, u) in cands {
            if a_sel.len() == l {
                break;
            }
            if selected.contains(&m) {
                continue;
            }
            a_sel.push(GaussianIntegerVector::unit(l, u));
            if coefficient_rank(&a_sel) == a_sel.len() {
                selected.push(m);
            } else {
                a_sel.pop();
            }
        }
    }
    flags.rank_deficient = a_sel.len() < l;
    Ok(Selection { a_sel, selected, flags })
}

fn pick<T: Clone>(rows: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| rows[i].clone()).collect()
}

/// Zeroes the rates of UEs whose message is not recoverable from `a_sel`.
fn enforce_recoverability(report: &mut RateReport, a_sel: &[GaussianIntegerVector], prime: u64) -> Result<()> {
    let ok = recoverable(a_sel, prime)?;
    for (r, ok) in report.per_ue_rates.iter_mut().zip(ok) {
        if !ok {
            *r = 0.0;
        }
    }
    report.sum_rate = report.per_ue_rates.iter().sum();
    Ok(())
}

/// Parallel pipeline on a fresh context.
pub fn run_parallel(
    ch: &ChannelRealization,
    p_total: f64,
    aps: bool,
    mode: PowerMode,
    opts: &PipelineOptions,
) -> Result<SchemeOutcome> {
    TrialContext::new(ch, p_total, opts).run_parallel(aps, mode)
}

/// Runs one scheme on a fresh context.
pub fn run_scheme(
    spec: &SchemeSpec,
    ch: &ChannelRealization,
    p_total: f64,
    opts: &PipelineOptions,
) -> Result<SchemeOutcome> {
    TrialContext::new(ch, p_total, opts).run(spec)
}

/// Convenience: parses `name` and runs it.
pub fn run_named(name: &str, ch: &ChannelRealization, p_total: f64, opts: &PipelineOptions) -> Result<SchemeOutcome> {
    run_scheme(&name.parse()?, ch, p_total, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for n in [
            "CF",
            "APS-CF",
            "MRC",
            "PARA",
            "APS-PARA",
            "LSF-PARA",
            "APS-LSF-PARA",
            "SUCC",
            "SUCC-RP",
            "SUCC-NORM",
            "SUCC-HUNGARIAN",
            "APS-LSF-SUCC-HUNGARIAN",
            "LSF-SUCC-RP",
        ] {
            let s: SchemeSpec = n.parse().unwrap();
            assert_eq!(s.to_string(), n);
        }
        assert_eq!(
            "LSF-APS-PARA".parse::<SchemeSpec>().unwrap().to_string(),
            "APS-LSF-PARA"
        );
        for bad in ["ZF", "LSF-CF", "APS-MRC", "APS-APS-PARA", "SUCC-X"] {
            assert!(matches!(bad.parse::<SchemeSpec>(), Err(Error::UnknownScheme(_))));
        }
    }
}
