//! AP ranking and greedy full-rank AP selection, plus UE-centric capping.

use num_complex::Complex64;

use crate::coeff::GaussianIntegerVector;
use crate::error::{Error, Result};
use crate::linalg::numerical_rank;

/// Sum of all entries of the `J` matrix built with `beta` in place of the
/// channel: `2 (sum_l |a_ml| beta_ml)^2` per AP.
pub fn lsf_scores(beta_rows: &[Vec<f64>], a_rows: &[GaussianIntegerVector]) -> Result<Vec<f64>> {
    if beta_rows.len() != a_rows.len() {
        return Err(Error::DimensionMismatch {
            expected: beta_rows.len(),
            got: a_rows.len(),
        });
    }
    beta_rows
        .iter()
        .zip(a_rows)
        .map(|(beta, a)| {
            if beta.len() != a.len() {
                return Err(Error::DimensionMismatch {
                    expected: beta.len(),
                    got: a.len(),
                });
            }
            let s: f64 = beta.iter().enumerate().map(|(l, &b)| a.get(l).norm() * b).sum();
            Ok(2.0 * s * s)
        })
        .collect()
}

/// Visits APs by descending score (lower index first on ties) and keeps each
/// one whose coefficient vector raises the rank of the accumulated matrix,
/// until the rank reaches `target`. Returns indices in acceptance order.
pub fn greedy_select(a_rows: &[GaussianIntegerVector], scores: &[f64], target: usize) -> Result<Vec<usize>> {
    let chosen = greedy_select_partial(a_rows, scores, target)?;
    if chosen.len() < target {
        return Err(Error::RankUnreachable {
            target,
            achieved: chosen.len(),
        });
    }
    Ok(chosen)
}

/// Like [`greedy_select`] but returns whatever rank was reachable.
pub fn greedy_select_partial(a_rows: &[GaussianIntegerVector], scores: &[f64], target: usize) -> Result<Vec<usize>> {
    if scores.len() != a_rows.len() {
        return Err(Error::DimensionMismatch {
            expected: a_rows.len(),
            got: scores.len(),
        });
    }
    let ncols = a_rows.first().map_or(0, GaussianIntegerVector::len);
    let mut order: Vec<usize> = (0..a_rows.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));

    let mut chosen = Vec::with_capacity(target);
    let mut acc: Vec<Vec<Complex64>> = Vec::with_capacity(target);
    for idx in order {
        if chosen.len() == target {
            break;
        }
        if a_rows[idx].is_zero() {
            continue;
        }
        acc.push(a_rows[idx].to_complex());
        if numerical_rank(&acc, ncols) == acc.len() {
            chosen.push(idx);
        } else {
            acc.pop();
        }
    }
    Ok(chosen)
}

/// Rank of the coefficient matrix formed by `rows`.
pub fn coefficient_rank(rows: &[GaussianIntegerVector]) -> usize {
    let ncols = rows.first().map_or(0, GaussianIntegerVector::len);
    let cx: Vec<Vec<Complex64>> = rows.iter().map(GaussianIntegerVector::to_complex).collect();
    numerical_rank(&cx, ncols)
}

/// Each AP serves at most `max_ues_per_ap` UEs, the ones with the largest
/// large-scale gain (lower index first on ties). Returns `mask[ap][ue]`.
pub fn ue_centric_cap(beta: &[Vec<f64>], max_ues_per_ap: usize) -> Result<Vec<Vec<bool>>> {
    if max_ues_per_ap == 0 {
        return Err(Error::InvalidParameter {
            name: "max_ues_per_ap",
            reason: "must be at least 1".into(),
        });
    }
    Ok(beta
        .iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..row.len()).collect();
            idx.sort_by(|&i, &j| row[j].total_cmp(&row[i]).then(i.cmp(&j)));
            let mut mask = vec![false; row.len()];
            for &i in idx.iter().take(max_ues_per_ap) {
                mask[i] = true;
            }
            mask
        })
        .collect())
}

/// UEs that no AP serves under `mask`.
pub fn orphaned_ues(mask: &[Vec<bool>]) -> Vec<usize> {
    let l = mask.first().map_or(0, Vec::len);
    (0..l).filter(|&ue| !mask.iter().any(|row| row[ue])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_vector_scores_zero() {
        let s = lsf_scores(&[vec![0.3, 0.7]], &[GaussianIntegerVector::zeros(2)]).unwrap();
        assert_eq!(s, vec![0.0]);
        let s = lsf_scores(&[vec![0.25]], &[GaussianIntegerVector::from_real(vec![-3])]).unwrap();
        assert!((s[0] - 2.0 * (3.0 * 0.25f64).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn unit_vectors_all_selected() {
        let rows: Vec<_> = (0..3).map(|i| GaussianIntegerVector::unit(3, i)).collect();
        let sel = greedy_select(&rows, &[0.1, 5.0, 2.0], 3).unwrap();
        assert_eq!(sel, vec![1, 2, 0]);
    }

    #[test]
    fn proportional_rows_keep_best_scored() {
        let rows = vec![
            GaussianIntegerVector::from_real(vec![1, 1]),
            GaussianIntegerVector::from_parts(vec![2, 2], vec![2, 2]),
            GaussianIntegerVector::from_real(vec![1, 0]),
        ];
        let sel = greedy_select(&rows, &[1.0, 3.0, 0.5], 2).unwrap();
        assert_eq!(sel, vec![1, 2]);
        assert_eq!(
            greedy_select(&rows[..2], &[1.0, 3.0], 2),
            Err(Error::RankUnreachable { target: 2, achieved: 1 })
        );
    }

    #[test]
    fn cap_extremes() {
        let beta = vec![vec![0.1, 0.5, 0.2], vec![0.9, 0.1, 0.3]];
        assert!(ue_centric_cap(&beta, 3).unwrap().iter().flatten().all(|&b| b));
        let m = ue_centric_cap(&beta, 1).unwrap();
        assert_eq!(m, vec![vec![false, true, false], vec![true, false, false]]);
        assert_eq!(orphaned_ues(&m), vec![2]);
        assert!(ue_centric_cap(&beta, 0).is_err());
    }
}
