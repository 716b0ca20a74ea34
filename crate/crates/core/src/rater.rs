//! Synthetic stochastic judge and the statistics used to characterize it.
//!
//! The judge scores a response of latent quality `q` by rounding
//! `q + w·L` (with `L` standard logistic) and clamping to `1..=K`; with
//! probability `ρ` it instead returns a uniformly random score. The outlier
//! component produces the heavy tails seen in real auto-rater score
//! distributions.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{OdrpoError, Result};
use crate::seed::{derive_seed, rng_from};
use crate::special::chi_square_sf;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JudgeNoise {
    /// Scale of the logistic noise around the latent quality.
    pub noise_width: f64,
    /// Probability that a call returns a uniform random score.
    pub outlier_rate: f64,
}

impl JudgeNoise {
    pub const NONE: JudgeNoise = JudgeNoise { noise_width: 0.0, outlier_rate: 0.0 };

    pub fn new(noise_width: f64, outlier_rate: f64) -> Result<Self> {
        if !(noise_width.is_finite() && noise_width >= 0.0) {
            return Err(OdrpoError::invalid(format!("noise width {noise_width} must be >= 0")));
        }
        if !(0.0..=1.0).contains(&outlier_rate) {
            return Err(OdrpoError::invalid(format!("outlier rate {outlier_rate} outside [0, 1]")));
        }
        Ok(Self { noise_width, outlier_rate })
    }

    pub fn is_deterministic(&self) -> bool {
        self.noise_width == 0.0 && self.outlier_rate == 0.0
    }

    /// One judge call for a response of latent quality `q` on a `1..=k` scale.
    pub fn score<R: Rng + ?Sized>(&self, q: f64, k: usize, rng: &mut R) -> usize {
        if self.outlier_rate > 0.0 && rng.random::<f64>() < self.outlier_rate {
            return rng.random_range(1..=k);
        }
        let x = if self.noise_width > 0.0 {
            // open interval keeps the logit finite
            let u: f64 = rng.random_range(f64::EPSILON..1.0);
            q + self.noise_width * (u / (1.0 - u)).ln()
        } else {
            q
        };
        (x.round().clamp(1.0, k as f64)) as usize
    }
}

impl Default for JudgeNoise {
    fn default() -> Self {
        JudgeNoise { noise_width: 1.0, outlier_rate: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JudgeModel {
    pub k: usize,
    pub latent_qualities: Vec<f64>,
    pub noise: JudgeNoise,
}

impl JudgeModel {
    pub fn new(k: usize, latent_qualities: Vec<f64>, noise: JudgeNoise) -> Result<Self> {
        if k < 1 {
            return Err(OdrpoError::invalid("judge needs at least one score level"));
        }
        if let Some(q) = latent_qualities.iter().find(|q| !(1.0..=k as f64).contains(*q)) {
            return Err(OdrpoError::invalid(format!("latent quality {q} outside [1, {k}]")));
        }
        Ok(Self { k, latent_qualities, noise })
    }
}

/// `M` responses × `N` judge calls, scores in `1..=K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreMatrix {
    m: usize,
    n: usize,
    k: usize,
    scores: Vec<usize>,
}

impl ScoreMatrix {
    pub fn new(rows: Vec<Vec<usize>>, k: usize) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(OdrpoError::invalid("score matrix rows differ in length"));
        }
        if let Some(&bad) = rows.iter().flatten().find(|&&v| v < 1 || v > k) {
            return Err(OdrpoError::invalid(format!("score {bad} outside 1..={k}")));
        }
        Ok(Self { m, n, k, scores: rows.into_iter().flatten().collect() })
    }

    pub fn responses(&self) -> usize {
        self.m
    }

    pub fn calls(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, response: usize, call: usize) -> usize {
        self.scores[response * self.n + call]
    }

    pub fn row(&self, response: usize) -> &[usize] {
        &self.scores[response * self.n..(response + 1) * self.n]
    }

    pub fn column(&self, call: usize) -> Vec<usize> {
        (0..self.m).map(|i| self.get(i, call)).collect()
    }
}

pub fn sample_scores(judge: &JudgeModel, calls: usize, seed: u64) -> Result<ScoreMatrix> {
    let m = judge.latent_qualities.len();
    if m < 2 || calls < 1 {
        return Err(OdrpoError::invalid(format!("need M >= 2 responses and N >= 1 calls (got {m}, {calls})")));
    }
    let mut rng = rng_from(seed);
    let rows = judge
        .latent_qualities
        .iter()
        .map(|&q| (0..calls).map(|_| judge.noise.score(q, judge.k, &mut rng)).collect())
        .collect();
    ScoreMatrix::new(rows, judge.k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcordanceReport {
    pub w: f64,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    /// `Σ_j Σ_groups (t³ - t)` over raters.
    pub tie_correction: f64,
}

impl ConcordanceReport {
    pub fn is_consistent(&self, threshold: f64) -> bool {
        self.w >= threshold
    }
}

/// Mid-ranks (1-based, ties share the mean rank) and the tie term `Σ (t³ - t)`.
fn mid_ranks(values: &[usize]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by_key(|&i| values[i]);
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end) as f64 / 2.0 + 1.0;
        for &i in &order[start..=end] {
            ranks[i] = rank;
        }
        let t = (end - start + 1) as f64;
        ties += t * t * t - t;
        start = end + 1;
    }
    (ranks, ties)
}

/// Kendall's coefficient of concordance with tie correction; responses are
/// the ranked subjects and judge calls are the raters.
pub fn kendalls_w(matrix: &ScoreMatrix) -> Result<ConcordanceReport> {
    let (m, n) = (matrix.responses(), matrix.calls());
    if m < 2 || n < 2 {
        return Err(OdrpoError::invalid(format!("Kendall's W needs M >= 2 and N >= 2 (got {m}, {n})")));
    }
    let mut rank_sums = vec![0.0; m];
    let mut tie_correction = 0.0;
    for j in 0..n {
        let (ranks, ties) = mid_ranks(&matrix.column(j));
        for (sum, r) in rank_sums.iter_mut().zip(ranks) {
            *sum += r;
        }
        tie_correction += ties;
    }
    let mean = rank_sums.iter().sum::<f64>() / m as f64;
    let s: f64 = rank_sums.iter().map(|r| (r - mean).powi(2)).sum();
    let (mf, nf) = (m as f64, n as f64);
    let denom = nf * nf * (mf * mf * mf - mf) - nf * tie_correction;
    if denom <= 0.0 {
        return Err(OdrpoError::DegenerateMatrix);
    }
    let w = (12.0 * s / denom).clamp(0.0, 1.0);
    let chi2 = nf * (mf - 1.0) * w;
    let p_value = chi_square_sf(chi2, mf - 1.0);
    Ok(ConcordanceReport { w, chi2, dof: m - 1, p_value, tie_correction })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowStats {
    pub mean: f64,
    pub std: f64,
    /// `None` for zero-variance rows.
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
}

/// Population moments of each response's scores.
pub fn row_stats(matrix: &ScoreMatrix) -> Vec<RowStats> {
    (0..matrix.responses()).map(|i| moments_of(matrix.row(i))).collect()
}

fn moments_of(row: &[usize]) -> RowStats {
    let n = row.len() as f64;
    let mean = row.iter().map(|&v| v as f64).sum::<f64>() / n;
    let central = |p: i32| row.iter().map(|&v| (v as f64 - mean).powi(p)).sum::<f64>() / n;
    let m2 = central(2);
    if m2 <= 0.0 {
        return RowStats { mean, std: 0.0, skewness: None, excess_kurtosis: None };
    }
    RowStats {
        mean,
        std: m2.sqrt(),
        skewness: Some(central(3) / m2.powf(1.5)),
        excess_kurtosis: Some(central(4) / (m2 * m2) - 3.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    Smallest,
    Largest,
    /// Lower median of the tied values.
    MedianOfTied,
}

impl std::str::FromStr for TieBreak {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "smallest" => Ok(TieBreak::Smallest),
            "largest" => Ok(TieBreak::Largest),
            "median" => Ok(TieBreak::MedianOfTied),
            other => Err(format!("unknown tie-break '{other}' (expected smallest|largest|median)")),
        }
    }
}

/// Most frequent score.
pub fn mode_vote(scores: &[usize], tie_break: TieBreak) -> usize {
    assert!(!scores.is_empty(), "mode of an empty vote");
    let mut counts = BTreeMap::new();
    for &s in scores {
        *counts.entry(s).or_insert(0usize) += 1;
    }
    let top = *counts.values().max().unwrap();
    let tied: Vec<usize> = counts.iter().filter(|(_, &c)| c == top).map(|(&v, _)| v).collect();
    match tie_break {
        TieBreak::Smallest => tied[0],
        TieBreak::Largest => tied[tied.len() - 1],
        TieBreak::MedianOfTied => tied[(tied.len() - 1) / 2],
    }
}

/// Fraction of (rater pair, response pair) combinations where the two raters
/// order the two responses strictly oppositely.
pub fn rank_flip_rate(matrix: &ScoreMatrix) -> Result<f64> {
    let (m, n) = (matrix.responses(), matrix.calls());
    if m < 2 || n < 2 {
        return Err(OdrpoError::invalid("rank flip rate needs M >= 2 and N >= 2"));
    }
    let columns: Vec<Vec<usize>> = (0..n).map(|j| matrix.column(j)).collect();
    let mut flips = 0usize;
    for a in 0..n {
        for b in (a + 1)..n {
            for i in 0..m {
                for j in (i + 1)..m {
                    let da = columns[a][i].cmp(&columns[a][j]);
                    let db = columns[b][i].cmp(&columns[b][j]);
                    if da != std::cmp::Ordering::Equal && db == da.reverse() {
                        flips += 1;
                    }
                }
            }
        }
    }
    let total = (n * (n - 1) / 2) * (m * (m - 1) / 2);
    Ok(flips as f64 / total as f64)
}

/// Settings of one synthetic concordance study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    pub k: usize,
    pub responses: usize,
    pub calls: usize,
    pub noise: JudgeNoise,
    /// Half-width of the band of latent qualities around a prompt-level center.
    pub quality_spread: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig { k: 10, responses: 8, calls: 16, noise: JudgeNoise::default(), quality_spread: 3.0 }
    }
}

impl StudyConfig {
    /// Latent qualities for one datapoint: a prompt-level center in `[1, K]`
    /// and responses drawn uniformly from the band around it.
    pub fn judge_for(&self, seed: u64) -> Result<JudgeModel> {
        let mut rng = rng_from(seed);
        let k = self.k as f64;
        let center: f64 = rng.random_range(1.0..=k);
        let lo = (center - self.quality_spread).max(1.0);
        let hi = (center + self.quality_spread).min(k);
        let qualities = (0..self.responses)
            .map(|_| if hi > lo { rng.random_range(lo..=hi) } else { lo })
            .collect();
        JudgeModel::new(self.k, qualities, self.noise)
    }

    /// Score matrix of datapoint `index` under root seed `seed`.
    pub fn datapoint(&self, seed: u64, index: u64) -> Result<ScoreMatrix> {
        let base = derive_seed(seed, index);
        let judge = self.judge_for(base)?;
        sample_scores(&judge, self.calls, derive_seed(base, u64::MAX))
    }
}
