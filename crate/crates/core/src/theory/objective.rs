use std::f64::consts::PI;

use crate::error::{OdrpoError, Result};
use crate::estimators::NormalizationKind;
use crate::reward::RewardScale;
use crate::sum::CompensatedSum;

use super::field::{failure_term, success_term, EstimatorField};
use super::simplex::{composition_count, compositions, multinomial_pmf, SimplexPoint};

/// Upper bound on `|S_{M-1}|` for exact expectation by enumeration.
pub const EXPECTED_FIELD_LIMIT: u128 = 1_000_000;

/// Ratio between the large-group update field `β - α` and the derivative of
/// the arcsin objective `(2/π) arcsin(√P)`: `β - α → 1/√(P(1-P))`, which is
/// `π` times `d/dP (2/π) arcsin(√P)`.
pub const ARCSIN_FIELD_SCALE: f64 = PI;

/// `Bin(n, p)` probabilities for `x = 0..=n`.
pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if p <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if p >= 1.0 {
        out[n] = 1.0;
        return out;
    }
    let mut ln_fact = vec![0.0; n + 1];
    for i in 1..=n {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    for (x, slot) in out.iter_mut().enumerate() {
        let log = ln_fact[n] - ln_fact[x] - ln_fact[n - x] + x as f64 * lp + (n - x) as f64 * lq;
        *slot = log.exp();
    }
    out
}

/// `β(P) = E_{x~Bin(M-1,P)}[t(x)]` and `α(P) = E[u(x)]`.
pub fn beta_alpha(p: f64, m: usize, norm: NormalizationKind) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(OdrpoError::invalid(format!("probability {p} outside [0, 1]")));
    }
    if m < 2 {
        return Err(OdrpoError::GroupTooSmall { min: 2, got: m });
    }
    let pmf = binomial_pmf(m - 1, p);
    let mut beta = CompensatedSum::new();
    let mut alpha = CompensatedSum::new();
    for (x, &w) in pmf.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        beta.add(w * success_term(x, m, norm));
        alpha.add(w * failure_term(x, m, norm));
    }
    Ok((beta.value(), alpha.value()))
}

/// Large-group limit of `β(P) - α(P)` under standard-deviation normalization.
pub fn limiting_beta_minus_alpha(p: f64) -> f64 {
    1.0 / (p * (1.0 - p)).sqrt()
}

/// `J(p) = (2/π) Σ_{m=2}^K Δ_m arcsin(√P_m)`.
pub fn arcsin_objective(p: &SimplexPoint, scale: &RewardScale) -> f64 {
    assert_eq!(p.k(), scale.k(), "dimension mismatch");
    (2..=scale.k())
        .map(|m| scale.spacing(m) * p.suffix(m).sqrt().asin())
        .sum::<f64>()
        * 2.0
        / PI
}

/// `∂J/∂p_k` treating every `p_k` as a free coordinate; infinite where some
/// `P_m` with `2 ≤ m ≤ k` sits at 0 or 1.
pub fn arcsin_gradient(p: &SimplexPoint, scale: &RewardScale) -> Vec<f64> {
    let per_level: Vec<f64> = (2..=scale.k())
        .map(|m| {
            let pm = p.suffix(m);
            scale.spacing(m) / (PI * (pm * (1.0 - pm)).sqrt())
        })
        .collect();
    (1..=scale.k()).map(|k| per_level[..k - 1].iter().sum()).collect()
}

/// `∂h/∂p_k` of the ordinal objective via the binomial reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveField {
    /// `Σ_{m=2}^k Δ_m (β(P_m) - α(P_m)) + C_α` for each `k`.
    pub grad: Vec<f64>,
    /// `C_α = Σ_{m=2}^K Δ_m α(P_m)`, common to every coordinate.
    pub c_alpha: f64,
}

impl ObjectiveField {
    /// The gradient with the common constant removed.
    pub fn centered(&self) -> Vec<f64> {
        self.grad.iter().map(|g| g - self.c_alpha).collect()
    }
}

pub fn objective_update_field(
    p: &SimplexPoint,
    scale: &RewardScale,
    m: usize,
    norm: NormalizationKind,
) -> Result<ObjectiveField> {
    if p.k() != scale.k() {
        return Err(OdrpoError::invalid("simplex point and scale differ in K"));
    }
    let mut gaps = Vec::with_capacity(scale.k());
    let mut c_alpha = 0.0;
    for level in 2..=scale.k() {
        let (beta, alpha) = beta_alpha(p.suffix(level), m, norm)?;
        let delta = scale.spacing(level);
        gaps.push(delta * (beta - alpha));
        c_alpha += delta * alpha;
    }
    let grad = (1..=scale.k()).map(|k| gaps[..k - 1].iter().sum::<f64>() + c_alpha).collect();
    Ok(ObjectiveField { grad, c_alpha })
}

/// `E_{s~Multi(M-1,p)}[f_k(s)]` for every `k`, by exact enumeration.
pub fn expected_field(field: &EstimatorField<'_>, p: &SimplexPoint) -> Result<Vec<f64>> {
    let k = field.k();
    if p.k() != k {
        return Err(OdrpoError::invalid("simplex point and field differ in K"));
    }
    let n = field.group_size - 1;
    let size = composition_count(n, k);
    if size > EXPECTED_FIELD_LIMIT {
        return Err(OdrpoError::TooLarge { size, limit: EXPECTED_FIELD_LIMIT });
    }
    let mut acc = vec![CompensatedSum::new(); k];
    for s in compositions(n, k, EXPECTED_FIELD_LIMIT)? {
        let w = multinomial_pmf(&s, p);
        if w == 0.0 {
            continue;
        }
        for (level, slot) in acc.iter_mut().enumerate() {
            slot.add(w * field.eval(level + 1, &s)?);
        }
    }
    Ok(acc.iter().map(CompensatedSum::value).collect())
}
