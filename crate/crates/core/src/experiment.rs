//! Monte-Carlo harness: scenarios, paired trials, CSV records and summaries.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    draw_channel, large_scale, place_uniform, ChannelRealization, DEFAULT_D_MIN, DEFAULT_NOISE_DBW,
    DEFAULT_SHADOW_SD_DB,
};
use crate::power::SolverBudget;
use crate::rate::{is_prime, DEFAULT_PRIME};
use crate::rng::{derive_seed, Stream};
use crate::schemes::{Flags, PipelineOptions, SchemeSpec, SuccPower, TrialContext};
use crate::successive::{SuccMode, UeOrder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<usize> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub m_aps: OneOrMany,
    pub l_ues: usize,
    pub side_m: f64,
    pub pt_watts: f64,
    pub noise_dbw: f64,
    pub shadow_sd_db: f64,
    pub d_min_m: f64,
    pub trials: usize,
    pub seed: u64,
    pub schemes: Vec<String>,
    pub ue_order: UeOrder,
    pub succ_mode: SuccMode,
    pub succ_power: SuccPower,
    pub cap: Option<usize>,
    pub prime: u64,
    pub solver_starts: usize,
    pub solver_iterations: usize,
    pub solver_refine: usize,
    /// Wall-clock times are written only when set; otherwise the column is 0
    /// so that output files stay bit-identical across runs.
    pub record_timing: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            m_aps: OneOrMany::Many(vec![20, 40, 60, 80, 100]),
            l_ues: 10,
            side_m: 1000.0,
            pt_watts: 0.2,
            noise_dbw: DEFAULT_NOISE_DBW,
            shadow_sd_db: DEFAULT_SHADOW_SD_DB,
            d_min_m: DEFAULT_D_MIN,
            trials: 200,
            seed: 1,
            schemes: ["CF", "MRC", "PARA", "APS-PARA"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            ue_order: UeOrder::Hungarian,
            succ_mode: SuccMode::Literal,
            succ_power: SuccPower::Parallel,
            cap: None,
            prime: DEFAULT_PRIME,
            solver_starts: 16,
            solver_iterations: 50,
            solver_refine: 16,
            record_timing: false,
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter {
            name: "config",
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<Vec<SchemeSpec>> {
        let invalid = |name: &'static str, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.into(),
            })
        };
        let ms = self.m_aps.values();
        if ms.is_empty() {
            return invalid("m_aps", "sweep must be nonempty");
        }
        if let Some(&m) = ms.iter().find(|&&m| m <= self.l_ues) {
            return Err(Error::InvalidNetworkSize {
                m_aps: m,
                l_ues: self.l_ues,
            });
        }
        if self.l_ues == 0 {
            return Err(Error::InvalidNetworkSize { m_aps: ms[0], l_ues: 0 });
        }
        if self.trials == 0 {
            return invalid("trials", "must be at least 1");
        }
        if self.schemes.is_empty() {
            return invalid("schemes", "must be nonempty");
        }
        if self.pt_watts.is_nan() || self.pt_watts <= 0.0 {
            return invalid("pt_watts", "must be positive");
        }
        if !is_prime(self.prime) {
            return Err(Error::NotPrime(self.prime));
        }
        if self.cap == Some(0) {
            return invalid("cap", "must be at least 1");
        }
        if self.solver_starts == 0 || self.solver_iterations == 0 {
            return invalid("solver", "starts and iterations must be positive");
        }
        self.schemes.iter().map(|s| s.parse()).collect()
    }

    fn pipeline_options(&self, trial_seed: u64) -> PipelineOptions {
        PipelineOptions {
            prime: self.prime,
            ue_order: self.ue_order,
            succ_mode: self.succ_mode,
            succ_power: self.succ_power,
            cap: self.cap,
            budget: SolverBudget {
                starts: self.solver_starts,
                iterations: self.solver_iterations,
                refine: self.solver_refine,
                seed: derive_seed(trial_seed, &[Stream::Solver as u64]),
            },
        }
    }

    /// Geometry and channel of one trial; depends only on `(seed, m, trial)`.
    pub fn realization(&self, m: usize, trial: usize) -> Result<(u64, ChannelRealization)> {
        let trial_seed = derive_seed(self.seed, &[m as u64, trial as u64]);
        let geom = place_uniform(m, self.l_ues, self.side_m, trial_seed)?;
        let lsmap = large_scale(&geom, self.shadow_sd_db, self.d_min_m, trial_seed)?;
        Ok((trial_seed, draw_channel(&lsmap, self.noise_dbw, trial_seed)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scheme: String,
    pub m: usize,
    pub l: usize,
    pub trial: usize,
    pub seed: u64,
    pub sum_rate: f64,
    pub per_ue_rates: Vec<f64>,
    pub fronthaul_symbols: u64,
    pub wall_ms: f64,
    pub flags: Flags,
}

fn run_trial(sc: &Scenario, specs: &[SchemeSpec], m: usize, trial: usize) -> Result<Vec<TrialRecord>> {
    let (seed, ch) = sc.realization(m, trial)?;
    let opts = sc.pipeline_options(seed);
    let ctx = TrialContext::new(&ch, sc.pt_watts, &opts);
    specs
        .iter()
        .map(|spec| {
            let t0 = Instant::now();
            let out = ctx.run(spec)?;
            let wall_ms = if sc.record_timing {
                t0.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            Ok(TrialRecord {
                scheme: spec.to_string(),
                m,
                l: sc.l_ues,
                trial,
                seed,
                sum_rate: out.report.sum_rate,
                per_ue_rates: out.report.per_ue_rates,
                fronthaul_symbols: out.report.fronthaul_symbols_per_use,
                wall_ms,
                flags: out.flags,
            })
        })
        .collect()
}

/// Runs every scheme on every `(m, trial)` realization. Trials run in
/// parallel; records come back ordered by `(m, trial, scheme)` with `m` and
/// schemes in scenario order.
pub fn run_scenario(sc: &Scenario) -> Result<Vec<TrialRecord>> {
    let specs = sc.validate()?;
    let jobs: Vec<(usize, usize)> = sc
        .m_aps
        .values()
        .into_iter()
        .flat_map(|m| (0..sc.trials).map(move |t| (m, t)))
        .collect();
    let chunks = jobs
        .par_iter()
        .map(|&(m, t)| {
            let r = run_trial(sc, &specs, m, t);
            log::debug!("trial m={m} t={t} done");
            r
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Formats with at most nine significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn write_csv<W: Write>(records: &[TrialRecord], l: usize, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header: Vec<String> = [
        "scheme",
        "m",
        "l",
        "trial",
        "seed",
        "sum_rate_bits",
        "fronthaul_symbols",
        "wall_ms",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=l).map(|i| format!("rate_ue_{i}")));
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![
            r.scheme.clone(),
            r.m.to_string(),
            r.l.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            fmt_sig(r.sum_rate),
            r.fronthaul_symbols.to_string(),
            fmt_sig(r.wall_ms),
        ];
        row.extend(r.per_ue_rates.iter().map(|&x| fmt_sig(x)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Quantile points of the empirical CDF: `sorted[ceil(q n) - 1]`.
pub fn cdf_point(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let k = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

pub const CDF_LEVELS: [f64; 11] = [0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagCounts {
    pub power_fallback: usize,
    pub rank_deficient: usize,
    pub orphaned: usize,
    pub partial_assignment: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub scheme: String,
    pub m: usize,
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
    pub mean_fronthaul_symbols: f64,
    /// `(q, value)` pairs, `q` ascending.
    pub cdf: Vec<(f64, f64)>,
    pub flags: FlagCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCell {
    pub scheme: String,
    pub baseline: String,
    pub m: usize,
    pub pairs: usize,
    pub ratio_of_means: f64,
    /// Mean of per-trial ratios over pairs with a positive baseline.
    pub mean_paired_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub groups: Vec<GroupStats>,
    pub ratios: Vec<RatioCell>,
}

impl Summary {
    pub fn group(&self, scheme: &str, m: usize) -> Option<&GroupStats> {
        self.groups.iter().find(|g| g.scheme == scheme && g.m == m)
    }

    pub fn ratio(&self, scheme: &str, baseline: &str, m: usize) -> Option<&RatioCell> {
        self.ratios
            .iter()
            .find(|r| r.scheme == scheme && r.baseline == baseline && r.m == m)
    }
}

/// Per-`(scheme, m)` statistics and paired ratio tables against CF and MRC
/// (and every scheme against itself). Groups are ordered by first appearance.
pub fn summarize(records: &[TrialRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::InvalidParameter {
            name: "records",
            reason: "nothing to summarize".into(),
        });
    }
    let mut keys: Vec<(String, usize)> = Vec::new();
    let mut by_key: BTreeMap<(String, usize), BTreeMap<usize, &TrialRecord>> = BTreeMap::new();
    for r in records {
        let k = (r.scheme.clone(), r.m);
        if !by_key.contains_key(&k) {
            keys.push(k.clone());
        }
        by_key.entry(k).or_default().insert(r.trial, r);
    }
    let groups = keys
        .iter()
        .map(|k| {
            let recs: Vec<&TrialRecord> = by_key[k].values().copied().collect();
            let n = recs.len();
            let mut xs: Vec<f64> = recs.iter().map(|r| r.sum_rate).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = if n > 1 {
                xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            xs.sort_by(f64::total_cmp);
            let count = |f: fn(&Flags) -> bool| recs.iter().filter(|r| f(&r.flags)).count();
            GroupStats {
                scheme: k.0.clone(),
                m: k.1,
                n,
                mean,
                stderr: (var / n as f64).sqrt(),
                min: xs[0],
                max: xs[n - 1],
                mean_fronthaul_symbols: recs.iter().map(|r| r.fronthaul_symbols as f64).sum::<f64>() / n as f64,
                cdf: CDF_LEVELS.iter().map(|&q| (q, cdf_point(&xs, q))).collect(),
                flags: FlagCounts {
                    power_fallback: count(|f| f.power_fallback),
                    rank_deficient: count(|f| f.rank_deficient),
                    orphaned: count(|f| f.orphaned),
                    partial_assignment: count(|f| f.partial_assignment),
                },
            }
        })
        .collect();
    let mut ratios = Vec::new();
    for k in &keys {
        let mut baselines: Vec<&str> = vec!["CF", "MRC"];
        if k.0 != "CF" && k.0 != "MRC" {
            baselines.push(&k.0);
        }
        for base in baselines {
            let Some(b) = by_key.get(&(base.to_string(), k.1)) else {
                continue;
            };
            let s = &by_key[k];
            let pairs: Vec<(f64, f64)> = s
                .iter()
                .filter_map(|(t, r)| b.get(t).map(|rb| (r.sum_rate, rb.sum_rate)))
                .collect();
            if pairs.is_empty() {
                continue;
            }
            let n = pairs.len() as f64;
            let (ss, bs) = pairs.iter().fold((0.0, 0.0), |(a, c), (x, y)| (a + x, c + y));
            let pos: Vec<f64> = pairs.iter().filter(|p| p.1 > 0.0).map(|(x, y)| x / y).collect();
            ratios.push(RatioCell {
                scheme: k.0.clone(),
                baseline: base.to_string(),
                m: k.1,
                pairs: pairs.len(),
                ratio_of_means: if bs > 0.0 { (ss / n) / (bs / n) } else { f64::NAN },
                mean_paired_ratio: if pos.is_empty() {
                    f64::NAN
                } else {
                    pos.iter().sum::<f64>() / pos.len() as f64
                },
            });
        }
    }
    Ok(Summary { groups, ratios })
}

pub fn write_summary<W: Write>(summary: &Summary, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, summary).map_err(|e| Error::Io(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}
