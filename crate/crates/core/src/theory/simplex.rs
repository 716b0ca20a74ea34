use rand::Rng;

use crate::error::{OdrpoError, Result};

/// Level counts `s = (s_1, …, s_K)` of the other members of a group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LeaveOneOutStats {
    counts: Vec<usize>,
}

impl LeaveOneOutStats {
    pub fn new(counts: Vec<usize>) -> Self {
        Self { counts }
    }

    pub fn zeros(k: usize) -> Self {
        Self { counts: vec![0; k] }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Count at 1-based level `k`.
    pub fn get(&self, k: usize) -> usize {
        self.counts[k - 1]
    }

    /// `s + e_k`.
    pub fn plus(&self, k: usize) -> Self {
        let mut counts = self.counts.clone();
        counts[k - 1] += 1;
        Self { counts }
    }

    /// Suffix sum `S_m(s) = Σ_{j ≥ m} s_j`.
    pub fn suffix(&self, m: usize) -> usize {
        self.counts[m - 1..].iter().sum()
    }

    /// Expand the counts into a list of level indices, lowest first.
    pub fn to_levels(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i + 1, c))
            .collect()
    }

    /// Counts of a list of level indices.
    pub fn from_levels(levels: &[usize], k: usize) -> Self {
        let mut counts = vec![0; k];
        for &l in levels {
            counts[l - 1] += 1;
        }
        Self { counts }
    }
}

/// Probability vector over reward levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    probs: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(OdrpoError::invalid("empty probability vector"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(OdrpoError::invalid("probabilities must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(OdrpoError::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Point mass on 1-based level `j`.
    pub fn vertex(k: usize, j: usize) -> Self {
        let mut probs = vec![0.0; k];
        probs[j - 1] = 1.0;
        Self { probs }
    }

    pub fn uniform(k: usize) -> Self {
        Self { probs: vec![1.0 / k as f64; k] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    /// `P_m = Σ_{j ≥ m} p_j`, clamped to `[0, 1]`.
    pub fn suffix(&self, m: usize) -> f64 {
        self.probs[m - 1..].iter().sum::<f64>().clamp(0.0, 1.0)
    }

    pub fn suffix_sums(&self) -> Vec<f64> {
        (1..=self.k()).map(|m| self.suffix(m)).collect()
    }
}

/// `|S_n|` for `K` parts, `C(n + K - 1, K - 1)`.
pub fn composition_count(n: usize, k: usize) -> u128 {
    if k == 0 {
        return u128::from(n == 0);
    }
    let top = (n + k - 1) as u128;
    let r = (k - 1).min(n) as u128;
    let mut c: u128 = 1;
    for i in 0..r {
        c = c * (top - i) / (i + 1);
    }
    c
}

/// All `s` with `K` non-negative parts summing to `n`, in lexicographic order.
pub fn compositions(n: usize, k: usize, limit: u128) -> Result<Compositions> {
    if k == 0 {
        return Err(OdrpoError::invalid("compositions need at least one part"));
    }
    let size = composition_count(n, k);
    if size > limit {
        return Err(OdrpoError::TooLarge { size, limit });
    }
    let mut first = vec![0; k];
    first[k - 1] = n;
    Ok(Compositions { next: Some(first) })
}

#[derive(Debug, Clone)]
pub struct Compositions {
    next: Option<Vec<usize>>,
}

impl Iterator for Compositions {
    type Item = LeaveOneOutStats;

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.next.take()?;
        let k = current.len();
        // move one unit from the tail onto the rightmost position that has mass after it
        let mut tail = current[k - 1];
        let mut succ = None;
        for i in (0..k.saturating_sub(1)).rev() {
            if tail > 0 {
                let mut c = current.clone();
                c[i] += 1;
                for v in c.iter_mut().skip(i + 1) {
                    *v = 0;
                }
                c[k - 1] = tail - 1;
                succ = Some(c);
                break;
            }
            tail += current[i];
        }
        self.next = succ;
        Some(LeaveOneOutStats::new(current))
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// `B_s^n(p) = n! Π p_k^{s_k} / s_k!`.
pub fn multinomial_pmf(s: &LeaveOneOutStats, p: &SimplexPoint) -> f64 {
    assert_eq!(s.k(), p.k(), "dimension mismatch");
    let n = s.n();
    if s.counts().iter().zip(p.probs()).any(|(&c, &q)| c > 0 && q == 0.0) {
        return 0.0;
    }
    if n <= 20 {
        let mut coef: u128 = (1..=n as u128).product();
        for &c in s.counts() {
            coef /= (1..=c as u128).product::<u128>();
        }
        let mut prob = coef as f64;
        for (&c, &q) in s.counts().iter().zip(p.probs()) {
            prob *= q.powi(c as i32);
        }
        prob
    } else {
        let mut log = ln_factorial(n);
        for (&c, &q) in s.counts().iter().zip(p.probs()) {
            if c > 0 {
                log += c as f64 * q.ln() - ln_factorial(c);
            }
        }
        log.exp()
    }
}

/// Draw a 1-based level from `probs`.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i + 1;
        }
    }
    // rounding left u above the running total: take the last level with mass
    probs.iter().rposition(|&p| p > 0.0).map_or(probs.len(), |i| i + 1)
}
