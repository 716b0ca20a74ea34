//! Reward scales, rollout groups and the ordinal binary decomposition.

use crate::error::{OdrpoError, Result};

/// An ordered discrete reward space `R_1 < R_2 < … < R_K`.
///
/// Level indices are 1-based throughout the crate, matching the usual
/// `1..=K` rubric convention.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardScale {
    levels: Vec<f64>,
}

impl RewardScale {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(OdrpoError::InvalidScale("scale needs at least one level".into()));
        }
        if let Some(v) = levels.iter().find(|v| !v.is_finite()) {
            return Err(OdrpoError::InvalidScale(format!("non-finite level {v}")));
        }
        if let Some(w) = levels.windows(2).find(|w| w[1] <= w[0]) {
            return Err(OdrpoError::InvalidScale(format!(
                "levels must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { levels })
    }

    /// The integer scale `{1, 2, …, k}`.
    pub fn integer(k: usize) -> Result<Self> {
        Self::new((1..=k).map(|v| v as f64).collect())
    }

    pub fn k(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Reward value of a 1-based level index.
    pub fn level(&self, index: usize) -> f64 {
        self.levels[index - 1]
    }

    /// `R_m - R_{m-1}` for `2 ≤ m ≤ K`. The base level has no predecessor and
    /// reports a spacing of 1; its bin is constant for on-scale rewards.
    pub fn spacing(&self, m: usize) -> f64 {
        assert!((1..=self.k()).contains(&m), "spacing index {m} outside 1..={}", self.k());
        if m == 1 {
            1.0
        } else {
            self.levels[m - 1] - self.levels[m - 2]
        }
    }

    pub fn is_unit_spaced(&self) -> bool {
        (2..=self.k()).all(|m| self.spacing(m) == 1.0)
    }

    /// 1-based level index whose value equals `value` (relative tolerance 1e-9).
    pub fn level_index_of(&self, value: f64) -> Option<usize> {
        let tol = 1e-9 * value.abs().max(1.0);
        self.levels
            .iter()
            .position(|&l| (l - value).abs() <= tol)
            .map(|p| p + 1)
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if (1..=self.k()).contains(&index) {
            Ok(())
        } else {
            Err(OdrpoError::LevelOutOfRange { index, k: self.k() })
        }
    }

    /// Same spacing, every level moved by `c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.levels.iter().map(|l| l + c).collect())
    }
}

/// One group of `G ≥ 2` rollout rewards on a shared scale.
///
/// Rewards are held as level indices; raw values are looked up through the
/// scale, so the same group serves the binned and continuous code paths.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutGroup<'a> {
    scale: &'a RewardScale,
    levels: Vec<usize>,
}

impl<'a> RolloutGroup<'a> {
    pub fn from_levels(scale: &'a RewardScale, levels: Vec<usize>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(OdrpoError::GroupTooSmall { min: 2, got: levels.len() });
        }
        for &l in &levels {
            scale.check_index(l)?;
        }
        Ok(Self { scale, levels })
    }

    pub fn from_values(scale: &'a RewardScale, values: &[f64]) -> Result<Self> {
        let levels = values
            .iter()
            .map(|&v| scale.level_index_of(v).ok_or(OdrpoError::RewardOffScale { value: v }))
            .collect::<Result<Vec<_>>>()?;
        Self::from_levels(scale, levels)
    }

    pub fn scale(&self) -> &'a RewardScale {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level_indices(&self) -> &[usize] {
        &self.levels
    }

    pub fn reward(&self, i: usize) -> f64 {
        self.scale.level(self.levels[i])
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.levels.iter().map(|&l| self.scale.level(l)).collect()
    }

    /// Copy of the group with rollout `i` moved to another level.
    pub fn with_level(&self, i: usize, level: usize) -> Result<Self> {
        self.scale.check_index(level)?;
        let mut levels = self.levels.clone();
        levels[i] = level;
        Ok(Self { scale: self.scale, levels })
    }
}

/// `G × K` matrix with entry `(i, k) = 1{r_i ≥ R_k}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrdinalIndicatorMatrix {
    rows: usize,
    bins: usize,
    entries: Vec<bool>,
}

impl OrdinalIndicatorMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Entry for rollout `i` (0-based) and bin `k` (1-based).
    pub fn get(&self, i: usize, k: usize) -> bool {
        self.entries[i * self.bins + (k - 1)]
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.entries[i * self.bins..(i + 1) * self.bins]
    }

    pub fn column_count(&self, k: usize) -> usize {
        (0..self.rows).filter(|&i| self.get(i, k)).count()
    }
}

pub fn decompose(group: &RolloutGroup<'_>) -> OrdinalIndicatorMatrix {
    let bins = group.scale().k();
    let rows = group.len();
    let entries = group
        .level_indices()
        .iter()
        .flat_map(|&level| (1..=bins).map(move |k| level >= k))
        .collect();
    OrdinalIndicatorMatrix { rows, bins, entries }
}

/// Per-bin success counts and means of an indicator matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BinStats {
    pub bin_means: Vec<f64>,
    pub bin_sizes: Vec<usize>,
    pub degenerate_mask: Vec<bool>,
    pub group_size: usize,
}

impl BinStats {
    pub fn k(&self) -> usize {
        self.bin_means.len()
    }

    /// Mean of bin `k` (1-based).
    pub fn mean(&self, k: usize) -> f64 {
        self.bin_means[k - 1]
    }

    pub fn is_degenerate(&self, k: usize) -> bool {
        self.degenerate_mask[k - 1]
    }
}

pub fn bin_stats(matrix: &OrdinalIndicatorMatrix) -> BinStats {
    let g = matrix.rows();
    let bin_sizes: Vec<usize> = (1..=matrix.bins()).map(|k| matrix.column_count(k)).collect();
    let bin_means = bin_sizes.iter().map(|&c| c as f64 / g as f64).collect();
    let degenerate_mask = bin_sizes.iter().map(|&c| c == 0 || c == g).collect();
    BinStats { bin_means, bin_sizes, degenerate_mask, group_size: g }
}

/// Group mean and population standard deviation of the raw rewards.
pub fn group_moments(group: &RolloutGroup<'_>) -> (f64, f64) {
    moments(&group.rewards())
}

pub(crate) fn moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(m: &OrdinalIndicatorMatrix) -> Vec<Vec<u8>> {
        (0..m.rows()).map(|i| m.row(i).iter().map(|&b| b as u8).collect()).collect()
    }

    #[test]
    fn scale_validation() {
        assert!(RewardScale::new(vec![]).is_err());
        assert!(RewardScale::new(vec![1.0, 1.0]).is_err());
        assert!(RewardScale::new(vec![2.0, 1.0]).is_err());
        assert!(RewardScale::new(vec![1.0, f64::NAN]).is_err());
        let s = RewardScale::new(vec![2.0, 5.0, 9.0]).unwrap();
        assert_eq!(s.spacing(2), 3.0);
        assert_eq!(s.spacing(3), 4.0);
        assert_eq!(s.level_index_of(5.0), Some(2));
        assert_eq!(s.level_index_of(4.0), None);
    }

    #[test]
    fn group_validation() {
        let s = RewardScale::integer(3).unwrap();
        assert!(matches!(
            RolloutGroup::from_levels(&s, vec![1]),
            Err(OdrpoError::GroupTooSmall { .. })
        ));
        assert!(RolloutGroup::from_levels(&s, vec![1, 4]).is_err());
        assert!(matches!(
            RolloutGroup::from_values(&s, &[1.0, 2.5]),
            Err(OdrpoError::RewardOffScale { .. })
        ));
    }

    #[test]
    fn decompose_examples() {
        let s = RewardScale::integer(3).unwrap();
        let g = RolloutGroup::from_values(&s, &[1.0, 3.0, 3.0]).unwrap();
        assert_eq!(rows(&decompose(&g)), vec![vec![1, 0, 0], vec![1, 1, 1], vec![1, 1, 1]]);

        let s10 = RewardScale::integer(10).unwrap();
        let g = RolloutGroup::from_values(&s10, &[7.0, 1.0]).unwrap();
        assert_eq!(rows(&decompose(&g))[0], vec![1, 1, 1, 1, 1, 1, 1, 0, 0, 0]);

        let s = RewardScale::new(vec![2.0, 5.0, 9.0]).unwrap();
        let g = RolloutGroup::from_values(&s, &[5.0, 2.0]).unwrap();
        assert_eq!(rows(&decompose(&g)), vec![vec![1, 1, 0], vec![1, 0, 0]]);
    }

    #[test]
    fn bin_stats_examples() {
        let s = RewardScale::integer(3).unwrap();
        let g = RolloutGroup::from_values(&s, &[1.0, 3.0, 3.0]).unwrap();
        let st = bin_stats(&decompose(&g));
        assert_eq!(st.bin_means, vec![1.0, 2.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(st.degenerate_mask, vec![true, false, false]);

        let g = RolloutGroup::from_levels(&s, vec![2, 2, 2]).unwrap();
        assert!(bin_stats(&decompose(&g)).degenerate_mask.iter().all(|&d| d));
    }

    #[test]
    fn moments_examples() {
        let s = RewardScale::integer(10).unwrap();
        let g = RolloutGroup::from_values(&s, &[1.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(group_moments(&g), (1.5, 0.5));
        let g = RolloutGroup::from_values(&s, &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(group_moments(&g), (4.0, 0.0));

        // two-pass oracle written out longhand
        let r = [1.0, 4.0, 4.0, 7.0, 10.0];
        let g = RolloutGroup::from_values(&s, &r).unwrap();
        let mut total = 0.0;
        for v in r {
            total += v;
        }
        let mean = total / 5.0;
        let mut ss = 0.0;
        for v in r {
            ss += (v - mean) * (v - mean);
        }
        let (m, sd) = group_moments(&g);
        assert!((m - 5.2).abs() < 1e-12 && (m - mean).abs() < 1e-15);
        assert!((sd - (ss / 5.0).sqrt()).abs() < 1e-15);
    }
}
