//! Reference schemes: compute-and-forward at equal power, maximum-ratio
//! combining, and fronthaul-capped rates.

use num_complex::Complex64;

use crate::error::Result;
use crate::geometry::ChannelRealization;
use crate::power::PowerAllocation;
use crate::rate::{fronthaul_load, RateReport, Scheme};
use crate::schemes::{run_parallel, PipelineOptions, PowerMode};

/// Compute-and-forward with every UE at `Pt / L`, optionally with AP
/// selection. Shares the parallel pipeline with the power scan disabled.
pub fn cf_equal_power(
    ch: &ChannelRealization,
    p_total: f64,
    use_ap_selection: bool,
    opts: &PipelineOptions,
) -> Result<RateReport> {
    Ok(run_parallel(ch, p_total, use_ap_selection, PowerMode::Equal, opts)?.report)
}

/// MRC over all APs. `g[ap][ue]` is noise-normalized.
pub fn mrc_sum_rate(g: &[Vec<Complex64>], p: &PowerAllocation) -> RateReport {
    let l = p.p.len();
    let col = |ue: usize| g.iter().map(move |row| row[ue]);
    let norms: Vec<f64> = (0..l).map(|ue| col(ue).map(|x| x.norm_sqr()).sum()).collect();
    let rates = (0..l)
        .map(|ue| {
            let interference: f64 = (0..l)
                .filter(|&k| k != ue)
                .map(|k| {
                    let ip: Complex64 = col(k).zip(col(ue)).map(|(a, b)| a.conj() * b).sum();
                    p.p[k] * ip.norm_sqr()
                })
                .sum();
            let denom = norms[ue] + interference;
            let sinr = if denom > 0.0 {
                p.p[ue] * norms[ue] * norms[ue] / denom
            } else {
                0.0
            };
            (1.0 + sinr).log2()
        })
        .collect();
    RateReport::new(rates, Vec::new(), fronthaul_load(Scheme::Parallel, g.len()))
}

/// `min(R0, Rsum)`.
pub fn capped_rate(r_sum: f64, r0: f64) -> f64 {
    r_sum.min(r0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_examples() {
        assert_eq!(capped_rate(19.57, 10.0), 10.0);
        assert_eq!(capped_rate(19.57, f64::INFINITY), 19.57);
        assert_eq!(capped_rate(19.57, 0.0), 0.0);
    }

    #[test]
    fn mrc_single_user_is_matched_filter_bound() {
        let g = vec![vec![Complex64::new(0.3, 1.0)], vec![Complex64::new(-2.0, 0.5)]];
        let r = mrc_sum_rate(&g, &PowerAllocation::equal(1, 4.0));
        let n2: f64 = g.iter().map(|r| r[0].norm_sqr()).sum();
        assert!((r.sum_rate - (1.0 + 4.0 * n2).log2()).abs() < 1e-12);
    }

    #[test]
    fn mrc_orthogonal_columns_have_no_interference() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let g = vec![vec![one * 2.0, zero], vec![zero, one * 3.0]];
        let r = mrc_sum_rate(&g, &PowerAllocation::equal(2, 2.0));
        assert!((r.per_ue_rates[0] - 5f64.log2()).abs() < 1e-12);
        assert!((r.per_ue_rates[1] - 10f64.log2()).abs() < 1e-12);
    }
}
