//! Group-relative advantage estimators.
//!
//! | estimator | advantage |
//! |-----------|-----------|
//! | GRPO      | `(r_i - μ) / σ` |
//! | MaxRL     | `(r_i - μ) / μ` |
//! | ODRPO     | `Σ_k w_k Δ_k (1{r_i ≥ R_k} - μ_k) / N_k` |
//!
//! `Δ_k = R_k - R_{k-1}` is 1 on the usual `{1..K}` rubric, so the ordinal
//! sum reduces to the plain per-bin accumulation there. Bins whose indicator
//! is constant across the group contribute exactly zero.

use crate::error::{OdrpoError, Result};
use crate::reward::{bin_stats, decompose, group_moments, moments, RolloutGroup};
use crate::weighting::WeightScheme;

/// Guard used for every denominator.
pub const EPS: f64 = 1e-8;

/// Per-bin normalizer `N_k` of the ordinal estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NormalizationKind {
    /// `N_k = sqrt(μ_k (1 - μ_k))`, the Bernoulli standard deviation.
    #[default]
    StdDev,
    /// `N_k = μ_k`.
    Mean,
}

impl NormalizationKind {
    pub fn normalizer(self, mu: f64) -> f64 {
        match self {
            NormalizationKind::StdDev => (mu * (1.0 - mu)).sqrt(),
            NormalizationKind::Mean => mu,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NormalizationKind::StdDev => "std",
            NormalizationKind::Mean => "mean",
        }
    }
}

impl std::str::FromStr for NormalizationKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "std" | "stddev" | "std-dev" | "grpo" => Ok(NormalizationKind::StdDev),
            "mean" | "maxrl" => Ok(NormalizationKind::Mean),
            other => Err(format!("unknown normalization '{other}' (expected std|mean)")),
        }
    }
}

impl std::fmt::Display for NormalizationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageVector {
    pub values: Vec<f64>,
    /// `G × K` weighted per-bin contributions, when the estimator has bins.
    pub per_bin: Option<Vec<Vec<f64>>>,
}

impl AdvantageVector {
    fn plain(values: Vec<f64>) -> Self {
        Self { values, per_bin: None }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Estimator selection shared by the trainer, the field analysis and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Grpo,
    MaxRl,
    Odrpo { norm: NormalizationKind, weights: WeightScheme },
}

impl Estimator {
    pub const ODRPO_STD: Estimator =
        Estimator::Odrpo { norm: NormalizationKind::StdDev, weights: WeightScheme::Unit };

    pub fn advantages(&self, group: &RolloutGroup<'_>) -> Result<AdvantageVector> {
        match *self {
            Estimator::Grpo => Ok(grpo_advantage(group)),
            Estimator::MaxRl => maxrl_advantage(group),
            Estimator::Odrpo { norm, weights } => Ok(odrpo_advantage(group, norm, weights)),
        }
    }

    /// Short label, e.g. `grpo`, `maxrl`, `odrpo-std-gini`.
    pub fn label(&self) -> String {
        match self {
            Estimator::Grpo => "grpo".into(),
            Estimator::MaxRl => "maxrl".into(),
            Estimator::Odrpo { norm, weights } => format!("odrpo-{norm}-{weights}"),
        }
    }
}

/// Parses the labels produced by [`Estimator::label`]; `odrpo` alone means
/// standard-deviation normalization with unit weights.
impl std::str::FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "grpo" => return Ok(Estimator::Grpo),
            "maxrl" => return Ok(Estimator::MaxRl),
            "odrpo" => return Ok(Estimator::ODRPO_STD),
            _ => {}
        }
        let rest = lower
            .strip_prefix("odrpo-")
            .ok_or_else(|| format!("unknown estimator '{s}' (expected grpo|maxrl|odrpo[-norm[-weights]])"))?;
        let (norm, weights) = match rest.split_once('-') {
            Some((n, w)) => (n.parse()?, w.parse()?),
            None => (rest.parse()?, WeightScheme::Unit),
        };
        Ok(Estimator::Odrpo { norm, weights })
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

pub fn grpo_advantage(group: &RolloutGroup<'_>) -> AdvantageVector {
    let (mean, sd) = group_moments(group);
    if sd <= EPS {
        return AdvantageVector::plain(vec![0.0; group.len()]);
    }
    AdvantageVector::plain(group.rewards().iter().map(|r| (r - mean) / sd).collect())
}

pub fn maxrl_advantage(group: &RolloutGroup<'_>) -> Result<AdvantageVector> {
    let (mean, _) = group_moments(group);
    if mean.abs() <= EPS {
        return Err(OdrpoError::MeanTooSmall { mean });
    }
    Ok(AdvantageVector::plain(group.rewards().iter().map(|r| (r - mean) / mean).collect()))
}

pub fn odrpo_advantage(
    group: &RolloutGroup<'_>,
    norm: NormalizationKind,
    weights: WeightScheme,
) -> AdvantageVector {
    let matrix = decompose(group);
    let stats = bin_stats(&matrix);
    let w = weights.weights_for_group(group, &stats);
    let scale = group.scale();
    let k_max = scale.k();

    let mut per_bin = vec![vec![0.0; k_max]; group.len()];
    for k in 1..=k_max {
        if stats.is_degenerate(k) {
            continue;
        }
        let mu = stats.mean(k);
        let denom = norm.normalizer(mu);
        let factor = w.get(k) * scale.spacing(k);
        for (i, row) in per_bin.iter_mut().enumerate() {
            let indicator = if matrix.get(i, k) { 1.0 } else { 0.0 };
            row[k - 1] = factor * (indicator - mu) / denom;
        }
    }
    let values = per_bin.iter().map(|row| row.iter().sum()).collect();
    AdvantageVector { values, per_bin: Some(per_bin) }
}

/// Ordinal advantage with a threshold at every real value, which collapses to
/// a finite sum over the gaps between consecutive sorted rewards.
pub fn odrpo_continuous(raw_rewards: &[f64], norm: NormalizationKind) -> Result<AdvantageVector> {
    let g = raw_rewards.len();
    if g < 2 {
        return Err(OdrpoError::GroupTooSmall { min: 2, got: g });
    }
    if let Some(v) = raw_rewards.iter().find(|v| !v.is_finite()) {
        return Err(OdrpoError::invalid(format!("non-finite reward {v}")));
    }
    let mut order: Vec<usize> = (0..g).collect();
    order.sort_by(|&a, &b| raw_rewards[a].total_cmp(&raw_rewards[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| raw_rewards[i]).collect();

    // gap k (1-based) sits between sorted positions k and k+1
    let mut success = vec![0.0; g];
    let mut failure = vec![0.0; g];
    for k in 1..g {
        let delta = sorted[k] - sorted[k - 1];
        if delta == 0.0 {
            continue;
        }
        let mu = (g - k) as f64 / g as f64;
        let n = norm.normalizer(mu);
        success[k] = delta * (1.0 - mu) / n;
        failure[k] = delta * mu / n;
    }

    let mut values = vec![0.0; g];
    for (pos, &orig) in order.iter().enumerate() {
        let p = pos + 1;
        let gained: f64 = success[1..p].iter().sum();
        let lost: f64 = failure[p..g].iter().sum();
        values[orig] = gained - lost;
    }
    Ok(AdvantageVector::plain(values))
}

/// Standardize advantages across a whole batch (population moments).
pub fn batch_normalize(advantages: &[f64]) -> Vec<f64> {
    if advantages.is_empty() {
        return Vec::new();
    }
    let (mean, sd) = moments(advantages);
    if sd <= EPS {
        return vec![0.0; advantages.len()];
    }
    advantages.iter().map(|a| (a - mean) / sd.max(EPS)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::RewardScale;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn grpo_examples() {
        let s = RewardScale::integer(10).unwrap();
        let g = RolloutGroup::from_values(&s, &[1.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(grpo_advantage(&g).values, vec![-1.0, -1.0, 1.0, 1.0]);
        let g = RolloutGroup::from_values(&s, &[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(grpo_advantage(&g).values, vec![0.0; 3]);
    }

    #[test]
    fn grpo_matches_zscore_oracle() {
        let s = RewardScale::integer(8).unwrap();
        let r: Vec<f64> = (1..=8).map(|v| v as f64).collect();
        let g = RolloutGroup::from_values(&s, &r).unwrap();
        let mean = 4.5;
        let var = r.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 8.0;
        let oracle: Vec<f64> = r.iter().map(|v| (v - mean) / var.sqrt()).collect();
        assert!(close(&grpo_advantage(&g).values, &oracle, 1e-14));
    }

    #[test]
    fn maxrl_examples() {
        let s = RewardScale::integer(10).unwrap();
        let g = RolloutGroup::from_values(&s, &[1.0, 3.0]).unwrap();
        assert_eq!(maxrl_advantage(&g).unwrap().values, vec![-0.5, 0.5]);
        let g = RolloutGroup::from_values(&s, &[7.0, 7.0]).unwrap();
        assert_eq!(maxrl_advantage(&g).unwrap().values, vec![0.0, 0.0]);
        let g = RolloutGroup::from_values(&s, &[2.0, 4.0, 6.0, 8.0]).unwrap();
        let oracle: Vec<f64> = [2.0, 4.0, 6.0, 8.0].iter().map(|r| (r - 5.0) / 5.0).collect();
        assert!(close(&maxrl_advantage(&g).unwrap().values, &oracle, 1e-15));
    }

    #[test]
    fn maxrl_rejects_zero_mean() {
        let s = RewardScale::new(vec![-1.0, 0.0, 1.0]).unwrap();
        let g = RolloutGroup::from_values(&s, &[-1.0, 1.0]).unwrap();
        assert!(matches!(maxrl_advantage(&g), Err(OdrpoError::MeanTooSmall { .. })));
    }

    #[test]
    fn odrpo_single_active_bin() {
        let s = RewardScale::integer(2).unwrap();
        let g = RolloutGroup::from_values(&s, &[1.0, 2.0, 2.0]).unwrap();
        let a = odrpo_advantage(&g, NormalizationKind::StdDev, WeightScheme::Unit);
        let expected = [-(2f64.sqrt()), 1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        assert!(close(&a.values, &expected, 1e-14));
        let per_bin = a.per_bin.unwrap();
        assert!(per_bin.iter().all(|row| row[0] == 0.0));
    }

    #[test]
    fn odrpo_constant_group_is_zero() {
        let s = RewardScale::integer(10).unwrap();
        let g = RolloutGroup::from_levels(&s, vec![6; 8]).unwrap();
        for norm in [NormalizationKind::StdDev, NormalizationKind::Mean] {
            for w in [WeightScheme::Unit, WeightScheme::Gini, WeightScheme::GiniMedian] {
                assert_eq!(odrpo_advantage(&g, norm, w).values, vec![0.0; 8]);
            }
        }
    }

    #[test]
    fn per_bin_rows_sum_to_values() {
        let s = RewardScale::integer(10).unwrap();
        let g = RolloutGroup::from_levels(&s, vec![1, 4, 4, 7, 9, 10, 2, 6]).unwrap();
        let a = odrpo_advantage(&g, NormalizationKind::Mean, WeightScheme::GiniMedian);
        for (v, row) in a.values.iter().zip(a.per_bin.as_ref().unwrap()) {
            assert_eq!(*v, row.iter().sum::<f64>());
        }
    }

    #[test]
    fn continuous_examples() {
        let a = odrpo_continuous(&[3.5, 3.5, 3.5], NormalizationKind::StdDev).unwrap();
        assert_eq!(a.values, vec![0.0; 3]);
        let a = odrpo_continuous(&[0.0, 1.0], NormalizationKind::StdDev).unwrap();
        assert!(close(&a.values, &[-1.0, 1.0], 1e-15));
        let a = odrpo_continuous(&[1.0, 0.0], NormalizationKind::StdDev).unwrap();
        assert!(close(&a.values, &[1.0, -1.0], 1e-15));
        assert!(odrpo_continuous(&[1.0], NormalizationKind::StdDev).is_err());
    }

    #[test]
    fn batch_normalize_examples() {
        assert_eq!(batch_normalize(&[-1.0, -1.0, 1.0, 1.0]), vec![-1.0, -1.0, 1.0, 1.0]);
        assert_eq!(batch_normalize(&[0.3; 5]), vec![0.0; 5]);
        let out = batch_normalize(&[0.1, 5.0, -2.0, 3.3, 7.7, 0.0]);
        let (m, sd) = moments(&out);
        assert!(m.abs() < 1e-12 && (sd - 1.0).abs() < 1e-12);
    }

    #[test]
    fn labels_round_trip() {
        for norm in [NormalizationKind::StdDev, NormalizationKind::Mean] {
            for weights in [WeightScheme::Unit, WeightScheme::Gini, WeightScheme::GiniMedian] {
                let e = Estimator::Odrpo { norm, weights };
                assert_eq!(e.label().parse::<Estimator>().unwrap(), e);
            }
        }
        assert_eq!("grpo".parse::<Estimator>().unwrap(), Estimator::Grpo);
        assert_eq!("odrpo".parse::<Estimator>().unwrap(), Estimator::ODRPO_STD);
        assert_eq!("odrpo-mean".parse::<Estimator>().unwrap().label(), "odrpo-mean-unit");
        assert!("ppo".parse::<Estimator>().is_err());
    }
}
