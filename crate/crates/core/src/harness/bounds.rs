//! Regret and the numeric regret bounds of the three schedules.

use serde::{Deserialize, Serialize};

use super::comparator::{minimize, total_loss, ComparatorOptions};
use crate::error::{Error, Result};
use crate::geometry::{distance, FeasibleSet, Norm, Point};
use crate::losses::LossOracle;
use crate::ogd::{GameOutcome, Schedule, Transcript, Variant};
use crate::qgrad::QGradParams;

/// `sum_t f_t(x_t) - sum_t f_t(comparator)`.
pub fn regret(transcript: &Transcript, losses: &[LossOracle], comparator: &[f64]) -> f64 {
    transcript.cumulative_loss() - total_loss(losses, comparator)
}

/// L1 error threshold of the quantum estimator at `params`.
pub fn lemma1_bound(params: &QGradParams) -> f64 {
    params.lemma1_bound()
}

/// L1 error threshold of the finite-difference estimator, exceeded with
/// probability at most `rho`: `n G r' / (2 rho r)`.
pub fn classical_bound(n: usize, lipschitz: f64, r: f64, r_prime: f64, rho: f64) -> f64 {
    n as f64 * lipschitz * r_prime / (2.0 * rho * r)
}

/// Per-round error threshold from the radii actually played.
fn round_error_bound(schedule: &Schedule, r: f64, r_prime: f64) -> f64 {
    let (n, g) = (schedule.n, schedule.lipschitz);
    if schedule.variant.is_quantum() {
        let beta = n as f64 * g / (schedule.p * r);
        let params = QGradParams { n, lipschitz: g, rho: schedule.rho, p: schedule.p, r, r_prime, beta, b: 1, c: 1 };
        lemma1_bound(&params)
    } else {
        classical_bound(n, g, r, r_prime, schedule.rho)
    }
}

/// Terms of the regret inequality chain, summed over rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    /// `D^2/2 sum_t max(0, 1/eta_t - 1/eta_{t-1} - alpha)`.
    pub distance: f64,
    /// `sum_t eta_t (L_t + G)^2 / 2`.
    pub gradient_norm: f64,
    /// `sum_t D L_t`.
    pub estimation: f64,
    /// `sum_t c r_t` with `c = 2 G sqrt n` (plus `alpha n D` when strongly convex).
    pub smoothing: f64,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        self.distance + self.gradient_norm + self.estimation + self.smoothing
    }
}

/// Evaluates the regret chain with the step sizes and radii recorded in the
/// transcript. The result bounds the realized regret whenever every round's
/// gradient error stayed within `L_t`.
pub fn certified_terms(transcript: &Transcript, schedule: &Schedule, variant: Variant) -> Result<BoundTerms> {
    if schedule.variant != variant {
        return Err(Error::ScheduleMismatch(format!("schedule is {}, bound requested for {variant}", schedule.variant)));
    }
    if transcript.rounds.len() != schedule.horizon {
        return Err(Error::ScheduleMismatch(format!(
            "transcript has {} rounds, schedule T = {}",
            transcript.rounds.len(),
            schedule.horizon
        )));
    }
    let (d, g, n, alpha) = (schedule.diameter, schedule.lipschitz, schedule.n as f64, schedule.alpha);
    let smoothing_rate = match variant {
        Variant::StronglyConvexQuantum => 2.0 * g * n.sqrt() + alpha * n * d,
        _ => 2.0 * g * n.sqrt(),
    };
    let mut terms = BoundTerms { distance: 0.0, gradient_norm: 0.0, estimation: 0.0, smoothing: 0.0 };
    let mut inv_prev = 0.0;
    for (i, rec) in transcript.rounds.iter().enumerate() {
        let expected = schedule.params_at(i + 1)?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
        if rec.t != i + 1 || !close(rec.eta, expected.eta) || !close(rec.r, expected.r) || !close(rec.r_prime, expected.r_prime) {
            return Err(Error::ScheduleMismatch(format!("round {} was not played under this schedule", i + 1)));
        }
        let l = round_error_bound(schedule, rec.r, rec.r_prime);
        let inv = 1.0 / rec.eta;
        terms.distance += (inv - inv_prev - alpha).max(0.0);
        inv_prev = inv;
        terms.gradient_norm += rec.eta * (l + g).powi(2) / 2.0;
        terms.estimation += d * l;
        terms.smoothing += smoothing_rate * rec.r;
    }
    terms.distance *= d * d / 2.0;
    Ok(terms)
}

pub fn certified_bound(transcript: &Transcript, schedule: &Schedule, variant: Variant) -> Result<f64> {
    Ok(certified_terms(transcript, schedule, variant)?.total())
}

/// `8 (D + 1) G sqrt T`, a closed form dominating the general-convex chain.
pub fn sqrt_t_envelope(schedule: &Schedule) -> f64 {
    8.0 * (schedule.diameter + 1.0) * schedule.lipschitz * (schedule.horizon as f64).sqrt()
}

/// Rounds whose L1 gradient error, measured against the exact gradient at
/// `z_t`, exceeded the round's threshold.
pub fn lemma_exceedances(outcome: &GameOutcome, schedule: &Schedule) -> Result<usize> {
    let mut count = 0;
    for (rec, f) in outcome.transcript.rounds.iter().zip(&outcome.losses) {
        let truth = f.exact_gradient(&rec.z)?;
        if distance(&truth, &rec.grad, Norm::L1) > round_error_bound(schedule, rec.r, rec.r_prime) {
            count += 1;
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub regret: f64,
    pub comparator: Point,
    pub comparator_objective: f64,
    /// Whether the comparator met the gradient-mapping tolerance.
    pub comparator_converged: bool,
    pub bound_value: f64,
    pub bound_satisfied: bool,
    pub lemma_exceedances: usize,
}

/// Solves for the comparator and evaluates regret, the certified bound and
/// the error-event diagnostic for one game.
pub fn evaluate(outcome: &GameOutcome, set: &FeasibleSet, schedule: &Schedule) -> Result<RegretReport> {
    let c = minimize(&outcome.losses, set, &ComparatorOptions::default())?;
    let objective = total_loss(&outcome.losses, &c.point);
    let regret = outcome.transcript.cumulative_loss() - objective;
    let bound_value = certified_bound(&outcome.transcript, schedule, schedule.variant)?;
    Ok(RegretReport {
        regret,
        comparator: c.point,
        comparator_objective: objective,
        comparator_converged: c.converged,
        bound_value,
        bound_satisfied: regret <= bound_value,
        lemma_exceedances: lemma_exceedances(outcome, schedule)?,
    })
}
