//! Leave-one-out advantage fields and their global structure.
//!
//! For a group of `M` rollouts, the advantage a rollout with reward `R_k`
//! receives depends only on `k` and on the level counts `s` of the other
//! `M-1` rollouts: `f_k(s)`. The expected policy update is then
//! `Σ_k E_{s~Multi(M-1,p)}[f_k(s)] ∇p_k`, and it is the gradient of a scalar
//! objective exactly when the curl residuals of `f` vanish.
//!
//! The ordinal estimator is a sum of per-bin binary fields and has zero curl;
//! GRPO and MaxRL applied to more than two levels do not.

mod curl;
mod field;
mod montecarlo;
mod objective;
mod simplex;

pub use curl::{curl_report, curl_residual, mac_scan, CurlReport, MAC_SCAN_LIMIT};
pub use field::{f_grpo, f_maxrl, f_odrpo, failure_term, success_term, EstimatorField};
pub use montecarlo::{sampled_update_expectation, MonteCarloEstimate};
pub use objective::{
    arcsin_gradient, arcsin_objective, beta_alpha, binomial_pmf, expected_field,
    limiting_beta_minus_alpha, objective_update_field, ObjectiveField, ARCSIN_FIELD_SCALE,
    EXPECTED_FIELD_LIMIT,
};
pub use simplex::{
    composition_count, compositions, multinomial_pmf, sample_categorical, Compositions,
    LeaveOneOutStats, SimplexPoint,
};
