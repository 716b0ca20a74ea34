//! Toy policy-gradient loop on categorical tasks.
//!
//! Each task is a softmax policy over answer classes; class `c` earns the
//! reward level `class_levels[c]`. In sampled mode a step draws `G`
//! rollouts per task, scores them (optionally through a noisy judge with
//! majority voting), computes group advantages and ascends
//! `(1/G) Σ_i A_i ∇log π(c_i)`. In exact mode the sampled advantages are
//! replaced by their expectation `E_{s~Multi(G-1,p)}[f_k(s)]`, which is the
//! mean of the sampled update.

use crate::error::{OdrpoError, Result};
use crate::estimators::{batch_normalize, Estimator};
use crate::rater::{mode_vote, JudgeNoise, TieBreak};
use crate::reward::{RewardScale, RolloutGroup};
use crate::seed::{derive_seed, derive_seed2, rng_from};
use crate::theory::{arcsin_objective, expected_field, sample_categorical, EstimatorField, SimplexPoint};

/// Learning rate used when none is given, per mode.
pub const DEFAULT_EXACT_LR: f64 = 1e-3;
pub const DEFAULT_SAMPLED_LR: f64 = 1e-2;
/// Exact-mode rate that reaches 95% of the vertex objective within 200 steps
/// on the identity tasks with K up to 10.
pub const ASCENT_LR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub scale: RewardScale,
    /// Reward level (1-based) earned by each answer class.
    pub class_levels: Vec<usize>,
    /// Replaces deterministic rewards with noisy judge scores when set.
    pub judge: Option<JudgeNoise>,
}

impl TaskSpec {
    /// One answer class per reward level.
    pub fn identity(scale: RewardScale) -> Self {
        let class_levels = (1..=scale.k()).collect();
        TaskSpec { scale, class_levels, judge: None }
    }

    pub fn new(scale: RewardScale, class_levels: Vec<usize>, judge: Option<JudgeNoise>) -> Result<Self> {
        if class_levels.is_empty() {
            return Err(OdrpoError::invalid("task needs at least one answer class"));
        }
        for &l in &class_levels {
            scale.check_index(l)?;
        }
        Ok(TaskSpec { scale, class_levels, judge })
    }

    pub fn with_judge(mut self, judge: JudgeNoise) -> Self {
        self.judge = Some(judge);
        self
    }

    pub fn classes(&self) -> usize {
        self.class_levels.len()
    }

    /// `p_k`: class probabilities summed per reward level.
    pub fn level_probs(&self, class_probs: &SimplexPoint) -> SimplexPoint {
        let mut p = vec![0.0; self.scale.k()];
        for (&level, &q) in self.class_levels.iter().zip(class_probs.probs()) {
            p[level - 1] += q;
        }
        SimplexPoint::new(p).expect("level probabilities of a valid policy")
    }

    pub fn expected_reward(&self, class_probs: &SimplexPoint) -> f64 {
        self.class_levels
            .iter()
            .zip(class_probs.probs())
            .map(|(&l, &q)| q * self.scale.level(l))
            .sum()
    }

    pub fn objective(&self, class_probs: &SimplexPoint) -> f64 {
        arcsin_objective(&self.level_probs(class_probs), &self.scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub logits: Vec<f64>,
}

impl PolicyParams {
    pub fn uniform(classes: usize) -> Self {
        PolicyParams { logits: vec![0.0; classes] }
    }

    pub fn probs(&self) -> SimplexPoint {
        policy_probs(&self.logits)
    }
}

/// Softmax with the maximum subtracted first.
pub fn policy_probs(logits: &[f64]) -> SimplexPoint {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|t| (t - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    SimplexPoint::new(exp.iter().map(|e| e / total).collect()).expect("softmax of finite logits")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    Exact,
    Sampled,
}

impl std::str::FromStr for TrainMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(TrainMode::Exact),
            "sampled" => Ok(TrainMode::Sampled),
            other => Err(format!("unknown mode '{other}' (expected exact|sampled)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub estimator: Estimator,
    pub group_size: usize,
    pub learning_rate: f64,
    pub steps: usize,
    /// Judge calls per rollout, aggregated by majority vote.
    pub votes: usize,
    /// Tasks per step.
    pub batch_size: usize,
    pub batch_norm: bool,
    pub mode: TrainMode,
    pub seed: u64,
    pub tie_break: TieBreak,
}

impl TrainConfig {
    pub fn exact(estimator: Estimator) -> Self {
        TrainConfig {
            estimator,
            group_size: 8,
            learning_rate: DEFAULT_EXACT_LR,
            steps: 200,
            votes: 1,
            batch_size: 1,
            batch_norm: false,
            mode: TrainMode::Exact,
            seed: 0,
            tie_break: TieBreak::Smallest,
        }
    }

    pub fn sampled(estimator: Estimator) -> Self {
        TrainConfig { learning_rate: DEFAULT_SAMPLED_LR, mode: TrainMode::Sampled, ..Self::exact(estimator) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.group_size < 2 {
            return Err(OdrpoError::GroupTooSmall { min: 2, got: self.group_size });
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(OdrpoError::invalid(format!("learning rate {} must be >= 0", self.learning_rate)));
        }
        if self.steps < 1 || self.votes < 1 || self.batch_size < 1 {
            return Err(OdrpoError::invalid("steps, votes and batch size must be >= 1"));
        }
        if self.batch_norm && self.mode == TrainMode::Exact {
            return Err(OdrpoError::invalid("batch normalization applies to sampled mode only"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// Mean arcsin objective over all tasks after the step.
    pub objective: f64,
    pub expected_reward: f64,
    pub adv_mean: f64,
    pub adv_std: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    pub records: Vec<StepRecord>,
}

impl TrainTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }
}

/// One sampled group plus the answer class behind each rollout.
#[derive(Debug, Clone)]
pub struct SampledGroup<'a> {
    pub group: RolloutGroup<'a>,
    pub classes: Vec<usize>,
}

/// Draw `G` classes from the policy and score them.
///
/// Classes and judge calls use separate streams derived from `seed`, so a
/// deterministic judge yields the same group for every vote count.
pub fn sample_rollouts<'a>(
    class_probs: &SimplexPoint,
    group_size: usize,
    task: &'a TaskSpec,
    votes: usize,
    tie_break: TieBreak,
    seed: u64,
) -> Result<SampledGroup<'a>> {
    let mut class_rng = rng_from(derive_seed(seed, 0));
    let mut judge_rng = rng_from(derive_seed(seed, 1));
    let classes: Vec<usize> =
        (0..group_size).map(|_| sample_categorical(class_probs.probs(), &mut class_rng) - 1).collect();
    let k = task.scale.k();
    let levels = classes
        .iter()
        .map(|&c| {
            let truth = task.class_levels[c];
            match task.judge {
                Some(noise) if votes > 0 => {
                    let calls: Vec<usize> =
                        (0..votes).map(|_| noise.score(truth as f64, k, &mut judge_rng)).collect();
                    mode_vote(&calls, tie_break)
                }
                _ => truth,
            }
        })
        .collect();
    Ok(SampledGroup { group: RolloutGroup::from_levels(&task.scale, levels)?, classes })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct StepStats {
    adv_mean: f64,
    adv_std: f64,
    grad_norm: f64,
}

fn softmax_grad_update(direction: &mut [f64], probs: &[f64], class: usize, coef: f64) {
    // coef · (e_c - π)
    for (d, p) in direction.iter_mut().zip(probs) {
        *d -= coef * p;
    }
    direction[class] += coef;
}

fn sampled_batch(
    policies: &mut [PolicyParams],
    tasks: &[TaskSpec],
    batch: &[usize],
    config: &TrainConfig,
    step: usize,
) -> Result<StepStats> {
    let mut groups = Vec::with_capacity(batch.len());
    let mut all_adv = Vec::new();
    for &t in batch {
        let seed = derive_seed2(config.seed, step as u64, t as u64);
        let sampled =
            sample_rollouts(&policies[t].probs(), config.group_size, &tasks[t], config.votes, config.tie_break, seed)?;
        let adv = config.estimator.advantages(&sampled.group)?;
        all_adv.extend_from_slice(&adv.values);
        groups.push(sampled.classes);
    }
    if config.batch_norm {
        all_adv = batch_normalize(&all_adv);
    }
    let g = config.group_size as f64;
    let mut sq_norm = 0.0;
    for (chunk, (&t, classes)) in all_adv.chunks(config.group_size).zip(batch.iter().zip(&groups)) {
        let probs = policies[t].probs();
        let mut direction = vec![0.0; probs.k()];
        for (&a, &c) in chunk.iter().zip(classes) {
            softmax_grad_update(&mut direction, probs.probs(), c, a / g);
        }
        sq_norm += direction.iter().map(|d| d * d).sum::<f64>();
        for (theta, d) in policies[t].logits.iter_mut().zip(&direction) {
            *theta += config.learning_rate * d;
        }
    }
    let n = all_adv.len() as f64;
    let mean = all_adv.iter().sum::<f64>() / n;
    let std = (all_adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(StepStats { adv_mean: mean, adv_std: std, grad_norm: sq_norm.sqrt() })
}

fn exact_batch(
    policies: &mut [PolicyParams],
    tasks: &[TaskSpec],
    batch: &[usize],
    config: &TrainConfig,
) -> Result<StepStats> {
    let mut sq_norm = 0.0;
    let (mut mean_acc, mut std_acc) = (0.0, 0.0);
    for &t in batch {
        let task = &tasks[t];
        let probs = policies[t].probs();
        let level_p = task.level_probs(&probs);
        let field = EstimatorField::new(config.estimator, &task.scale, config.group_size)?;
        let expected = expected_field(&field, &level_p)?;

        let mut direction = vec![0.0; probs.k()];
        for (c, &level) in task.class_levels.iter().enumerate() {
            let coef = expected[level - 1] * probs.probs()[c];
            softmax_grad_update(&mut direction, probs.probs(), c, coef);
        }
        sq_norm += direction.iter().map(|d| d * d).sum::<f64>();
        for (theta, d) in policies[t].logits.iter_mut().zip(&direction) {
            *theta += config.learning_rate * d;
        }

        let mean: f64 = expected.iter().zip(level_p.probs()).map(|(f, p)| f * p).sum();
        let var: f64 = expected.iter().zip(level_p.probs()).map(|(f, p)| p * (f - mean).powi(2)).sum();
        mean_acc += mean;
        std_acc += var.sqrt();
    }
    let n = batch.len() as f64;
    Ok(StepStats { adv_mean: mean_acc / n, adv_std: std_acc / n, grad_norm: sq_norm.sqrt() })
}

/// One sampled update of a single task's policy.
pub fn sampled_step(theta: &PolicyParams, config: &TrainConfig, task: &TaskSpec, step: usize) -> Result<PolicyParams> {
    let mut policies = vec![theta.clone()];
    sampled_batch(&mut policies, std::slice::from_ref(task), &[0], config, step)?;
    Ok(policies.pop().unwrap())
}

/// One exact (expected) update of a single task's policy.
pub fn exact_step(theta: &PolicyParams, config: &TrainConfig, task: &TaskSpec) -> Result<PolicyParams> {
    let mut policies = vec![theta.clone()];
    exact_batch(&mut policies, std::slice::from_ref(task), &[0], config)?;
    Ok(policies.pop().unwrap())
}

/// Train from uniform policies.
pub fn run(config: &TrainConfig, tasks: &[TaskSpec]) -> Result<TrainTrace> {
    let mut policies: Vec<PolicyParams> = tasks.iter().map(|t| PolicyParams::uniform(t.classes())).collect();
    run_from(config, tasks, &mut policies)
}

/// Train starting from (and updating) the given policies. Step `t` uses the
/// tasks `(t·B + b) mod n` for `b < B`.
pub fn run_from(config: &TrainConfig, tasks: &[TaskSpec], policies: &mut [PolicyParams]) -> Result<TrainTrace> {
    config.validate()?;
    if tasks.is_empty() || tasks.len() != policies.len() {
        return Err(OdrpoError::invalid("need one policy per task and at least one task"));
    }
    if let Some((t, _)) = tasks.iter().zip(policies.iter()).find(|(t, p)| t.classes() != p.logits.len()) {
        return Err(OdrpoError::invalid(format!("policy size does not match task with {} classes", t.classes())));
    }
    let batch_size = config.batch_size.min(tasks.len());
    let mut trace = TrainTrace::default();
    for step in 0..config.steps {
        let batch: Vec<usize> = (0..batch_size).map(|b| (step * batch_size + b) % tasks.len()).collect();
        let stats = match config.mode {
            TrainMode::Sampled => sampled_batch(policies, tasks, &batch, config, step)?,
            TrainMode::Exact => exact_batch(policies, tasks, &batch, config)?,
        };
        let n = tasks.len() as f64;
        let (mut objective, mut expected_reward) = (0.0, 0.0);
        for (task, policy) in tasks.iter().zip(policies.iter()) {
            let probs = policy.probs();
            objective += task.objective(&probs);
            expected_reward += task.expected_reward(&probs);
        }
        trace.records.push(StepRecord {
            step: step + 1,
            objective: objective / n,
            expected_reward: expected_reward / n,
            adv_mean: stats.adv_mean,
            adv_std: stats.adv_std,
            grad_norm: stats.grad_norm,
        });
    }
    Ok(trace)
}

/// Mean `|mode_vote - true level|` per rollout for groups drawn from
/// `class_probs`, averaged over `seeds` derived seeds.
pub fn vote_error(
    task: &TaskSpec,
    class_probs: &SimplexPoint,
    group_size: usize,
    votes: usize,
    tie_break: TieBreak,
    seeds: usize,
    root_seed: u64,
) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for s in 0..seeds {
        let sampled = sample_rollouts(class_probs, group_size, task, votes, tie_break, derive_seed(root_seed, s as u64))?;
        for (&level, &c) in sampled.group.level_indices().iter().zip(&sampled.classes) {
            total += level.abs_diff(task.class_levels[c]) as f64;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub votes: usize,
    pub estimator: Estimator,
    pub final_objective: f64,
    pub final_expected_reward: f64,
}

/// Sampled training for every (vote count, estimator) pair.
pub fn vote_sweep(
    base: &TrainConfig,
    tasks: &[TaskSpec],
    votes: &[usize],
    estimators: &[Estimator],
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &n in votes {
        for &estimator in estimators {
            let config = TrainConfig { votes: n, estimator, mode: TrainMode::Sampled, ..base.clone() };
            let trace = run(&config, tasks)?;
            let last = trace.last().expect("at least one step");
            rows.push(SweepRow {
                votes: n,
                estimator,
                final_objective: last.objective,
                final_expected_reward: last.expected_reward,
            });
        }
    }
    Ok(rows)
}
