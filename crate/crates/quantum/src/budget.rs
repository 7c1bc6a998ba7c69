use libm::erf;
use statrs::function::erf::erf_inv;

use crate::pauli::{PauliHamiltonian, C64};
use crate::statevector::{variance, VarianceMode};
use crate::{Error, Result};

/// Highest reachable target probability.
pub const MAX_TARGET_PROBABILITY: f64 = 1.0 - 1e-9;

/// Probability that an estimate with `shots` measurements per term lies
/// within `accuracy` of the mean, for total measurement variance `sigma2`:
/// `erf(eps * sqrt(S / (2 sigma^2)))`.
pub fn shot_probability(accuracy: f64, shots: f64, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidParameter(format!("variance must be positive, got {sigma2}")));
    }
    if !(shots >= 1.0) {
        return Err(Error::InvalidParameter(format!("need at least one shot, got {shots}")));
    }
    if !(accuracy >= 0.0) {
        return Err(Error::InvalidParameter(format!("accuracy must be non-negative, got {accuracy}")));
    }
    Ok(erf(accuracy * (shots / (2.0 * sigma2)).sqrt()))
}

/// Smallest per-term shot count reaching probability `p`.
pub fn shots_for_probability(accuracy: f64, sigma2: f64, p: f64) -> Result<u64> {
    check_target(accuracy, p)?;
    if sigma2 == 0.0 {
        return Ok(1);
    }
    let guess = 2.0 * sigma2 * (erf_inv(p) / accuracy).powi(2);
    if !guess.is_finite() || guess >= u64::MAX as f64 / 2.0 {
        return Err(Error::InvalidParameter(format!("shot count {guess:e} overflows")));
    }
    let mut s = (guess.ceil() as u64).max(1);
    // the closed form can be off by one through rounding
    while s > 1 && shot_probability(accuracy, (s - 1) as f64, sigma2)? >= p {
        s -= 1;
    }
    while shot_probability(accuracy, s as f64, sigma2)? < p {
        s += 1;
    }
    Ok(s)
}

fn check_target(accuracy: f64, p: f64) -> Result<()> {
    if !(p > 0.0 && p <= MAX_TARGET_PROBABILITY) {
        return Err(Error::InvalidParameter(format!(
            "target probability {p} outside (0, {MAX_TARGET_PROBABILITY}]"
        )));
    }
    if !(accuracy > 0.0) || !accuracy.is_finite() {
        return Err(Error::InvalidParameter(format!("accuracy must be positive, got {accuracy}")));
    }
    Ok(())
}

/// Measurement count needed for a target accuracy and confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotBudget {
    /// Measured (non-identity) terms `K`.
    pub n_terms: usize,
    /// `sum_k c_k^2 Var(P_k)` on the given state.
    pub sigma2_qc: f64,
    /// `(sum_k |c_k|)^2`.
    pub sigma2_max: f64,
    pub shots_per_term: u64,
    /// `K * shots_per_term`.
    pub total: f64,
    pub upper_bound_shots_per_term: u64,
    pub upper_bound_total: f64,
}

/// Total measurements `M = K S` with uniform allocation such that the
/// energy error stays below `accuracy` (Hartree) with probability `p`.
pub fn estimate_shot_budget(h: &PauliHamiltonian, state: &[C64], accuracy: f64, p: f64) -> Result<ShotBudget> {
    check_target(accuracy, p)?;
    let n_terms = h.measured_terms().count();
    let sigma2_qc = variance(state, h, VarianceMode::PerTerm)?;
    let sigma2_max = variance(state, h, VarianceMode::UpperBound)?;
    // rounding leaves ~1e-16 on exact eigenstates
    let clean = |v: f64| if v <= 1e-14 * sigma2_max.max(1.0) { 0.0 } else { v };
    let shots_per_term = shots_for_probability(accuracy, clean(sigma2_qc), p)?;
    let upper_bound_shots_per_term = shots_for_probability(accuracy, clean(sigma2_max), p)?;
    Ok(ShotBudget {
        n_terms,
        sigma2_qc,
        sigma2_max,
        shots_per_term,
        total: n_terms as f64 * shots_per_term as f64,
        upper_bound_shots_per_term,
        upper_bound_total: n_terms as f64 * upper_bound_shots_per_term as f64,
    })
}
