//! Variance-aware bin weights.
//!
//! Both non-trivial schemes are built on the scaled Gini impurity
//! `4μ(1-μ)`, which peaks at 1 for a half-solved bin and vanishes for bins
//! that every rollout passes or fails. A `√k` factor keeps pressure on the
//! higher tiers and a 0.1 floor keeps every bin alive.

use crate::reward::{BinStats, RolloutGroup};

const FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WeightScheme {
    #[default]
    Unit,
    Gini,
    GiniMedian,
}

impl WeightScheme {
    pub fn name(self) -> &'static str {
        match self {
            WeightScheme::Unit => "unit",
            WeightScheme::Gini => "gini",
            WeightScheme::GiniMedian => "gini-median",
        }
    }

    /// Weight of bin `k` given its group mean and the group's median level.
    pub fn weight(self, k: usize, mu: f64, median_bin: usize) -> f64 {
        match self {
            WeightScheme::Unit => 1.0,
            WeightScheme::Gini => gini_weight(k, mu),
            WeightScheme::GiniMedian => gini_median_weight(k, mu, median_bin),
        }
    }

    pub fn weights(self, stats: &BinStats, median_bin: usize) -> WeightVector {
        match self {
            WeightScheme::Unit => WeightVector(vec![1.0; stats.k()]),
            WeightScheme::Gini => gini_weights(stats),
            WeightScheme::GiniMedian => gini_median_weights(stats, median_bin),
        }
    }

    pub fn weights_for_group(self, group: &RolloutGroup<'_>, stats: &BinStats) -> WeightVector {
        // the median is only needed by one scheme, but it is cheap
        self.weights(stats, group_median_bin(group))
    }
}

impl std::str::FromStr for WeightScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "unit" | "none" => Ok(WeightScheme::Unit),
            "gini" => Ok(WeightScheme::Gini),
            "gini-median" | "gini-med" | "gini_median" => Ok(WeightScheme::GiniMedian),
            other => Err(format!("unknown weight scheme '{other}' (expected unit|gini|gini-median)")),
        }
    }
}

impl std::fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    /// Weight of bin `k` (1-based).
    pub fn get(&self, k: usize) -> f64 {
        self.0[k - 1]
    }
}

fn impurity(mu: f64) -> f64 {
    4.0 * mu * (1.0 - mu)
}

pub fn gini_weight(k: usize, mu: f64) -> f64 {
    (k as f64).sqrt() * (FLOOR + impurity(mu))
}

pub fn gini_median_weight(k: usize, mu: f64, median_bin: usize) -> f64 {
    let below = median_bin.saturating_sub(k) as f64;
    (k as f64).sqrt() * (FLOOR + impurity(mu) * (-below / 2.0).exp())
}

pub fn gini_weights(stats: &BinStats) -> WeightVector {
    WeightVector(
        stats.bin_means.iter().enumerate().map(|(i, &mu)| gini_weight(i + 1, mu)).collect(),
    )
}

pub fn gini_median_weights(stats: &BinStats, median_bin: usize) -> WeightVector {
    WeightVector(
        stats
            .bin_means
            .iter()
            .enumerate()
            .map(|(i, &mu)| gini_median_weight(i + 1, mu, median_bin))
            .collect(),
    )
}

/// Lower median of level indices. Even-sized groups take the lower of the
/// two middle values so the result is always an observed level.
pub fn median_level_index(levels: &[usize]) -> usize {
    assert!(!levels.is_empty(), "median of an empty group");
    let mut sorted = levels.to_vec();
    sorted.sort_unstable();
    sorted[(sorted.len() - 1) / 2]
}

pub fn group_median_bin(group: &RolloutGroup<'_>) -> usize {
    median_level_index(group.level_indices())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::{bin_stats, decompose, RewardScale};
    use proptest::prelude::*;

    #[test]
    fn gini_examples() {
        assert!((gini_weight(1, 0.5) - 1.1).abs() < 1e-15);
        assert!((gini_weight(4, 0.0) - 0.2).abs() < 1e-15);
        assert!((gini_weight(9, 0.25) - 2.55).abs() < 1e-12);
    }

    #[test]
    fn gini_median_examples() {
        for k in 3..=6 {
            assert_eq!(gini_median_weight(k, 0.3, 3), gini_weight(k, 0.3));
        }
        let w = gini_median_weight(1, 0.5, 3);
        assert!((w - (0.1 + (-1.0f64).exp())).abs() < 1e-15);
        assert!((w - 0.4679).abs() < 1e-4);
        for m in 1..=10 {
            assert!((gini_median_weight(4, 0.0, m) - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn median_examples() {
        assert_eq!(median_level_index(&[3, 5, 7]), 5);
        assert_eq!(median_level_index(&[4, 4, 4, 4]), 4);
        assert_eq!(median_level_index(&[9, 2, 8, 3]), 3);
    }

    #[test]
    fn unit_scheme_is_all_ones() {
        let s = RewardScale::integer(5).unwrap();
        let g = RolloutGroup::from_levels(&s, vec![1, 3, 5, 2]).unwrap();
        let st = bin_stats(&decompose(&g));
        assert_eq!(WeightScheme::Unit.weights_for_group(&g, &st).0, vec![1.0; 5]);
    }

    /// Four reward shapes on a 10-level scale: normal-like, concentrated,
    /// normal with outliers at both ends, uniform.
    fn representative_groups() -> Vec<Vec<usize>> {
        vec![
            vec![3, 4, 5, 5, 5, 6, 6, 6, 7, 8],
            vec![6, 6, 6, 6, 6, 6, 6, 7, 7, 6],
            vec![1, 4, 5, 5, 6, 6, 6, 7, 10, 10],
            (1..=10).collect(),
        ]
    }

    #[test]
    fn weighting_behaviour_on_representative_shapes() {
        let s = RewardScale::integer(10).unwrap();
        for levels in representative_groups() {
            let g = RolloutGroup::from_levels(&s, levels).unwrap();
            let st = bin_stats(&decompose(&g));
            let med = group_median_bin(&g);
            let gini = gini_weights(&st);
            let gm = gini_median_weights(&st, med);

            // impurity factor w/√k is maximal at the bin whose mean is closest to 1/2
            let closest = (1..=10)
                .min_by(|&a, &b| {
                    (st.mean(a) - 0.5).abs().partial_cmp(&(st.mean(b) - 0.5).abs()).unwrap()
                })
                .unwrap();
            let factor = |k: usize| gini.get(k) / (k as f64).sqrt();
            for k in 1..=10 {
                assert!(factor(k) <= factor(closest) + 1e-15);
            }
            for k in 1..=10 {
                if k >= med || st.is_degenerate(k) {
                    assert_eq!(gm.get(k), gini.get(k));
                } else {
                    assert!(gm.get(k) < gini.get(k));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn bounds_and_symmetry(k in 1usize..=12, mu in 0.0f64..=1.0, med in 1usize..=12) {
            let lo = 0.1 * (k as f64).sqrt();
            let hi = 1.1 * (k as f64).sqrt();
            let g = gini_weight(k, mu);
            let gm = gini_median_weight(k, mu, med);
            prop_assert!(g >= lo - 1e-15 && g <= hi + 1e-15);
            prop_assert!(gm >= lo - 1e-15 && gm <= hi + 1e-15);
            prop_assert!(gm <= g);
            if k >= med || mu == 0.0 || mu == 1.0 {
                prop_assert_eq!(gm, g);
            } else if mu * (1.0 - mu) > 1e-12 {
                prop_assert!(gm < g);
            }
            prop_assert!((gini_weight(k, mu) - gini_weight(k, 1.0 - mu)).abs() < 1e-12);
        }
    }
}
