use crate::error::{OdrpoError, Result};
use crate::estimators::Estimator;
use crate::reward::RewardScale;
use crate::sum::CompensatedSum;

use super::field::EstimatorField;
use super::simplex::{composition_count, compositions, LeaveOneOutStats};

/// Upper bound on `|S_{M-2}| · K²` for one scan cell.
pub const MAC_SCAN_LIMIT: u128 = 10_000_000;

/// Residual of the mixed-partial condition
/// `f_i(s+e_j) - f_i(s+e_K) + f_j(s+e_K) - f_j(s+e_i) + f_K(s+e_i) - f_K(s+e_j)`
/// for `s` summing to `M - 2`.
pub fn curl_residual(
    field: &EstimatorField<'_>,
    i: usize,
    j: usize,
    s: &LeaveOneOutStats,
) -> Result<f64> {
    let k = field.k();
    if s.n() + 2 != field.group_size {
        return Err(OdrpoError::invalid(format!(
            "curl statistics must sum to M-2 = {}, got {}",
            field.group_size - 2,
            s.n()
        )));
    }
    let f = |a: usize, b: usize| field.eval(a, &s.plus(b));
    Ok(f(i, j)? - f(i, k)? + f(j, k)? - f(j, i)? + f(k, i)? - f(k, j)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurlReport {
    pub estimator: Estimator,
    pub k: usize,
    pub m: usize,
    /// Residuals in enumeration order: `s` lexicographic, then `(i, j)` with
    /// `1 ≤ i < j < K` lexicographic. Pairs involving `K` vanish identically.
    pub residuals: Vec<f64>,
    pub mac: f64,
    pub max_abs: f64,
}

/// Curl residuals of one field over all `s ∈ S_{M-2}` and level pairs.
pub fn curl_report(field: &EstimatorField<'_>) -> Result<CurlReport> {
    let k = field.k();
    let m = field.group_size;
    let cells = composition_count(m - 2, k).saturating_mul((k * k) as u128);
    if cells > MAC_SCAN_LIMIT {
        return Err(OdrpoError::TooLarge { size: cells, limit: MAC_SCAN_LIMIT });
    }
    let mut residuals = Vec::new();
    for s in compositions(m - 2, k, u128::MAX)? {
        for i in 1..k {
            for j in (i + 1)..k {
                residuals.push(curl_residual(field, i, j, &s)?);
            }
        }
    }
    let max_abs = residuals.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
    let mac = if residuals.is_empty() {
        0.0
    } else {
        residuals.iter().map(|r| r.abs()).collect::<CompensatedSum>().value()
            / residuals.len() as f64
    };
    Ok(CurlReport { estimator: field.estimator, k, m, residuals, mac, max_abs })
}

/// Mean absolute curl over a grid of `(K, M)`, ordered by `K` then `M`.
pub fn mac_scan<F>(
    estimator: Estimator,
    k_range: std::ops::RangeInclusive<usize>,
    m_range: std::ops::RangeInclusive<usize>,
    scale_builder: F,
) -> Result<Vec<CurlReport>>
where
    F: Fn(usize) -> Result<RewardScale>,
{
    if *k_range.start() < 2 || *m_range.start() < 2 {
        return Err(OdrpoError::invalid("curl scans need K >= 2 and M >= 2"));
    }
    let mut out = Vec::new();
    for k in k_range {
        let scale = scale_builder(k)?;
        if scale.k() != k {
            return Err(OdrpoError::invalid(format!("scale builder returned {} levels for K = {k}", scale.k())));
        }
        for m in m_range.clone() {
            let field = EstimatorField::new(estimator, &scale, m)?;
            out.push(curl_report(&field)?);
        }
    }
    Ok(out)
}
