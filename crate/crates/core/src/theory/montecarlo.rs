use crate::error::{OdrpoError, Result};
use crate::reward::RolloutGroup;
use crate::seed::rng_from;

use super::field::EstimatorField;
use super::simplex::{sample_categorical, SimplexPoint};

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: Vec<f64>,
    /// Standard error of each coordinate (sample std of trial means / √trials).
    pub std_error: Vec<f64>,
    pub trials: usize,
}

/// Monte-Carlo estimate of `E[f_k]` for every `k`.
///
/// Each trial samples a group of `M` rewards from `p`. For every rollout the
/// other `M-1` members play the role of the leave-one-out statistics: the
/// rollout is re-scored at each level `k` by running the group estimator on
/// the modified group. The per-trial value is the average over rollouts.
pub fn sampled_update_expectation(
    field: &EstimatorField<'_>,
    p: &SimplexPoint,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if trials == 0 {
        return Err(OdrpoError::invalid("need at least one trial"));
    }
    let k = field.k();
    if p.k() != k {
        return Err(OdrpoError::invalid("simplex point and field differ in K"));
    }
    let m = field.group_size;
    let mut rng = rng_from(seed);
    // Welford running moments of the per-trial values
    let mut mean = vec![0.0; k];
    let mut m2 = vec![0.0; k];
    let mut trial_mean = vec![0.0; k];
    for t in 1..=trials {
        let levels: Vec<usize> = (0..m).map(|_| sample_categorical(p.probs(), &mut rng)).collect();
        let group = RolloutGroup::from_levels(field.scale, levels)?;
        trial_mean.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            for level in 1..=k {
                let moved = group.with_level(i, level)?;
                trial_mean[level - 1] += field.estimator.advantages(&moved)?.values[i];
            }
        }
        for level in 0..k {
            let v = trial_mean[level] / m as f64;
            let delta = v - mean[level];
            mean[level] += delta / t as f64;
            m2[level] += delta * (v - mean[level]);
        }
    }
    let n = trials as f64;
    let std_error = m2
        .iter()
        .map(|&sq| if trials < 2 { 0.0 } else { (sq / (n - 1.0) / n).sqrt() })
        .collect();
    Ok(MonteCarloEstimate { mean, std_error, trials })
}
