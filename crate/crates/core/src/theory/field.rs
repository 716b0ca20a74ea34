use crate::error::{OdrpoError, Result};
use crate::estimators::{Estimator, NormalizationKind, EPS};
use crate::reward::RewardScale;
use crate::weighting::WeightScheme;

use super::simplex::LeaveOneOutStats;

/// The advantage `f_k(s)` an estimator assigns to a rollout with reward
/// `R_k` when the other `M-1` group members have level counts `s`.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorField<'a> {
    pub estimator: Estimator,
    pub scale: &'a RewardScale,
    pub group_size: usize,
}

impl<'a> EstimatorField<'a> {
    pub fn new(estimator: Estimator, scale: &'a RewardScale, group_size: usize) -> Result<Self> {
        if group_size < 2 {
            return Err(OdrpoError::GroupTooSmall { min: 2, got: group_size });
        }
        Ok(Self { estimator, scale, group_size })
    }

    pub fn k(&self) -> usize {
        self.scale.k()
    }

    pub fn eval(&self, k: usize, s: &LeaveOneOutStats) -> Result<f64> {
        match self.estimator {
            Estimator::Grpo => f_grpo(k, s, self.scale, self.group_size),
            Estimator::MaxRl => f_maxrl(k, s, self.scale, self.group_size),
            Estimator::Odrpo { norm, weights } => {
                f_odrpo(k, s, self.scale, self.group_size, norm, weights)
            }
        }
    }
}

fn check(k: usize, s: &LeaveOneOutStats, scale: &RewardScale, m: usize) -> Result<()> {
    scale.check_index(k)?;
    if s.k() != scale.k() {
        return Err(OdrpoError::invalid(format!(
            "statistics vector has {} levels, scale has {}",
            s.k(),
            scale.k()
        )));
    }
    if s.n() + 1 != m {
        return Err(OdrpoError::invalid(format!(
            "leave-one-out counts sum to {}, expected M-1 = {}",
            s.n(),
            m - 1
        )));
    }
    Ok(())
}

/// Mean and population variance of the full group `s + e_k`.
fn full_group_moments(k: usize, s: &LeaveOneOutStats, scale: &RewardScale, m: usize) -> (f64, f64) {
    let full = s.plus(k);
    let n = m as f64;
    let levels = scale.levels();
    let mean = full.counts().iter().zip(levels).map(|(&c, &r)| c as f64 * r).sum::<f64>() / n;
    let var = full
        .counts()
        .iter()
        .zip(levels)
        .map(|(&c, &r)| c as f64 * (r - mean).powi(2))
        .sum::<f64>()
        / n;
    (mean, var)
}

pub fn f_grpo(k: usize, s: &LeaveOneOutStats, scale: &RewardScale, m: usize) -> Result<f64> {
    check(k, s, scale, m)?;
    let (mean, var) = full_group_moments(k, s, scale, m);
    let sd = var.sqrt();
    if sd <= EPS {
        return Ok(0.0);
    }
    Ok((scale.level(k) - mean) / sd)
}

pub fn f_maxrl(k: usize, s: &LeaveOneOutStats, scale: &RewardScale, m: usize) -> Result<f64> {
    check(k, s, scale, m)?;
    let (mean, _) = full_group_moments(k, s, scale, m);
    if mean.abs() <= EPS {
        return Err(OdrpoError::MeanTooSmall { mean });
    }
    Ok((scale.level(k) - mean) / mean)
}

/// Binary advantage of a success when `c` of the other `M-1` members also
/// succeed: `t(c)`. Zero when everyone succeeds.
pub fn success_term(c: usize, m: usize, norm: NormalizationKind) -> f64 {
    let fail = (m - c - 1) as f64;
    let succ = (c + 1) as f64;
    match norm {
        NormalizationKind::StdDev => (fail / succ).sqrt(),
        NormalizationKind::Mean => fail / succ,
    }
}

/// Binary advantage of a failure when `c` of the other members succeed:
/// `u(c)`. Zero when nobody succeeds.
pub fn failure_term(c: usize, m: usize, norm: NormalizationKind) -> f64 {
    if c == 0 {
        return 0.0;
    }
    match norm {
        NormalizationKind::StdDev => -(c as f64 / (m - c) as f64).sqrt(),
        NormalizationKind::Mean => -1.0,
    }
}

/// Lower median level of the full group `s + e_k`.
fn full_group_median(k: usize, s: &LeaveOneOutStats) -> usize {
    let full = s.plus(k);
    let target = (full.n() - 1) / 2;
    let mut seen = 0;
    for (i, &c) in full.counts().iter().enumerate() {
        seen += c;
        if seen > target {
            return i + 1;
        }
    }
    unreachable!("median of an empty group")
}

/// Ordinal field `Σ_{m ≤ k} Δ_m w_m t(S_m) + Σ_{m > k} Δ_m w_m u(S_m)`.
///
/// The bin-1 indicator is constant, so the sum starts at `m = 2`. Weights are
/// evaluated on the full-group bin mean `(S_m + 1{m ≤ k}) / M`.
pub fn f_odrpo(
    k: usize,
    s: &LeaveOneOutStats,
    scale: &RewardScale,
    m: usize,
    norm: NormalizationKind,
    weights: WeightScheme,
) -> Result<f64> {
    check(k, s, scale, m)?;
    let median = match weights {
        WeightScheme::GiniMedian => full_group_median(k, s),
        _ => 0,
    };
    let mut total = 0.0;
    for bin in 2..=scale.k() {
        let others = s.suffix(bin);
        let success = bin <= k;
        let term = if success { success_term(others, m, norm) } else { failure_term(others, m, norm) };
        if term == 0.0 {
            continue;
        }
        let mu = (others + usize::from(success)) as f64 / m as f64;
        total += weights.weight(bin, mu, median) * scale.spacing(bin) * term;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::odrpo_advantage;
    use crate::reward::RolloutGroup;
    use crate::theory::simplex::compositions;

    fn e(k: usize, j: usize) -> LeaveOneOutStats {
        LeaveOneOutStats::zeros(k).plus(j)
    }

    #[test]
    fn hand_cases() {
        let r = RewardScale::integer(3).unwrap();
        assert!((f_grpo(1, &e(3, 2), &r, 2).unwrap() + 1.0).abs() < 1e-15);
        assert!((f_maxrl(1, &e(3, 2), &r, 2).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        for m in 2..=5 {
            for k in 1..=3 {
                let s = LeaveOneOutStats::zeros(3);
                let s = (0..m - 1).fold(s, |acc, _| acc.plus(k));
                assert_eq!(f_grpo(k, &s, &r, m).unwrap(), 0.0);
                assert_eq!(f_maxrl(k, &s, &r, m).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn two_level_ordinal_field_is_the_binary_field() {
        let r = RewardScale::integer(2).unwrap();
        let m = 5;
        for s in compositions(m - 1, 2, u128::MAX).unwrap() {
            let c = s.get(2);
            let f2 = f_odrpo(2, &s, &r, m, NormalizationKind::StdDev, WeightScheme::Unit).unwrap();
            let f1 = f_odrpo(1, &s, &r, m, NormalizationKind::StdDev, WeightScheme::Unit).unwrap();
            assert_eq!(f2, success_term(c, m, NormalizationKind::StdDev));
            assert_eq!(f1, failure_term(c, m, NormalizationKind::StdDev));
        }
    }

    #[test]
    fn rejects_wrong_count_total() {
        let r = RewardScale::integer(3).unwrap();
        assert!(f_grpo(1, &LeaveOneOutStats::new(vec![1, 1, 0]), &r, 2).is_err());
        assert!(f_grpo(4, &e(3, 1), &r, 2).is_err());
    }

    #[test]
    fn ordinal_field_matches_reconstructed_group_on_uneven_scale() {
        let r = RewardScale::new(vec![0.5, 2.0, 2.5, 6.0]).unwrap();
        let m = 4;
        for norm in [NormalizationKind::StdDev, NormalizationKind::Mean] {
            for w in [WeightScheme::Unit, WeightScheme::Gini, WeightScheme::GiniMedian] {
                for s in compositions(m - 1, 4, u128::MAX).unwrap() {
                    for k in 1..=4 {
                        let mut levels = vec![k];
                        levels.extend(s.to_levels());
                        let g = RolloutGroup::from_levels(&r, levels).unwrap();
                        let oracle = odrpo_advantage(&g, norm, w).values[0];
                        let f = f_odrpo(k, &s, &r, m, norm, w).unwrap();
                        assert!((f - oracle).abs() < 1e-12, "{norm} {w} k={k} s={s:?}");
                    }
                }
            }
        }
    }
}
