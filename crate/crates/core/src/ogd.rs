//! Projected online gradient descent with zeroth-order gradient estimates,
//! and the player/adversary game loop.

use std::fmt;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cgrad::estimate_gradient_c;
use crate::error::{Error, Result};
use crate::geometry::{FeasibleSet, Point};
use crate::losses::{Adversary, LossOracle};
use crate::qgrad::QuantumEstimator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Convex losses, quantum estimator, `O(DG sqrt T)`.
    GeneralQuantum,
    /// Strongly convex losses, quantum estimator, `O(G^2 log T)`.
    StronglyConvexQuantum,
    /// Convex losses, finite differences, `O(DG sqrt T)` with `2n` queries.
    GeneralClassical,
}

impl Variant {
    pub fn is_quantum(&self) -> bool {
        !matches!(self, Variant::GeneralClassical)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::GeneralQuantum => "general_quantum",
            Variant::StronglyConvexQuantum => "strongly_convex_quantum",
            Variant::GeneralClassical => "general_classical",
        })
    }
}

/// How the query radius `r'_t` decays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RPrimeMode {
    /// The radii exactly as printed; the per-round gradient error term then
    /// stays constant in `t`.
    PaperLiteral,
    /// One extra factor of `1/sqrt t` (`G/(D t)` for the strongly convex
    /// schedule) so the per-round error term decays like the step size.
    #[default]
    ProofConsistent,
}

impl fmt::Display for RPrimeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RPrimeMode::PaperLiteral => "paper_literal",
            RPrimeMode::ProofConsistent => "proof_consistent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundParams {
    pub eta: f64,
    pub r: f64,
    pub r_prime: f64,
}

/// Step size and radii for all rounds of one game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub variant: Variant,
    pub n: usize,
    /// Diameter bound D of the feasible set.
    pub diameter: f64,
    /// Lipschitz bound G of every loss on the query domain.
    pub lipschitz: f64,
    /// Strong convexity (strongly convex variant only; 0 otherwise).
    pub alpha: f64,
    /// Per-round failure probability of the gradient error event. For the
    /// classical variant this is `delta / T`.
    pub rho: f64,
    /// Per-round failure probability of the smoothness surrogate (quantum
    /// variants; 0 for the classical one).
    pub p: f64,
    /// Overall failure probability of the game.
    pub delta: f64,
    pub horizon: usize,
    pub mode: RPrimeMode,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("schedule constant {name} must be positive, got {v}")))
    }
}

impl Schedule {
    /// Default split `rho = p = delta / (2T)`.
    pub fn split_delta(delta: f64, horizon: usize) -> (f64, f64) {
        let each = delta / (2.0 * horizon as f64);
        (each, each)
    }

    pub fn general_quantum(
        n: usize,
        diameter: f64,
        lipschitz: f64,
        horizon: usize,
        rho: f64,
        p: f64,
        mode: RPrimeMode,
    ) -> Result<Self> {
        let s = Schedule {
            variant: Variant::GeneralQuantum,
            n,
            diameter,
            lipschitz,
            alpha: 0.0,
            rho,
            p,
            delta: horizon as f64 * (rho + p),
            horizon,
            mode,
        };
        s.validate()?;
        Ok(s)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn strongly_convex_quantum(
        n: usize,
        diameter: f64,
        lipschitz: f64,
        alpha: f64,
        horizon: usize,
        rho: f64,
        p: f64,
        mode: RPrimeMode,
    ) -> Result<Self> {
        let s = Schedule {
            variant: Variant::StronglyConvexQuantum,
            n,
            diameter,
            lipschitz,
            alpha,
            rho,
            p,
            delta: horizon as f64 * (rho + p),
            horizon,
            mode,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn general_classical(
        n: usize,
        diameter: f64,
        lipschitz: f64,
        horizon: usize,
        delta: f64,
        mode: RPrimeMode,
    ) -> Result<Self> {
        let s = Schedule {
            variant: Variant::GeneralClassical,
            n,
            diameter,
            lipschitz,
            alpha: 0.0,
            rho: delta / horizon as f64,
            p: 0.0,
            delta,
            horizon,
            mode,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.horizon == 0 {
            return Err(Error::InvalidParameter("schedule needs n >= 1 and T >= 1".into()));
        }
        positive("D", self.diameter)?;
        positive("G", self.lipschitz)?;
        positive("delta", self.delta)?;
        positive("rho", self.rho)?;
        if self.rho > 1.0 {
            return Err(Error::InvalidParameter(format!("rho must be <= 1, got {}", self.rho)));
        }
        match self.variant {
            Variant::GeneralClassical => {}
            Variant::StronglyConvexQuantum => {
                positive("alpha", self.alpha)?;
                positive("p", self.p)?;
            }
            Variant::GeneralQuantum => positive("p", self.p)?,
        }
        if self.p > 1.0 {
            return Err(Error::InvalidParameter(format!("p must be <= 1, got {}", self.p)));
        }
        Ok(())
    }

    /// `eta_t`, `r_t`, `r'_t` for round `t` in `1..=T`.
    pub fn params_at(&self, t: usize) -> Result<RoundParams> {
        if t == 0 || t > self.horizon {
            return Err(Error::RoundOutOfRange { t, horizon: self.horizon });
        }
        let (tf, n) = (t as f64, self.n as f64);
        let (d, g, rho, p) = (self.diameter, self.lipschitz, self.rho, self.p);
        let literal = self.mode == RPrimeMode::PaperLiteral;
        Ok(match self.variant {
            Variant::GeneralQuantum => {
                let base = rho * rho * p / (8.0 * PI * n.powf(4.5) * (n + rho));
                RoundParams {
                    eta: d / (g * tf.sqrt()),
                    r: 1.0 / (tf * n).sqrt(),
                    r_prime: if literal { base / tf.sqrt() } else { base / tf },
                }
            }
            Variant::StronglyConvexQuantum => {
                let k = 2.0 * g * n.sqrt() + self.alpha * n * d;
                let printed = g * g * rho * rho * p / (8.0 * PI * tf * n.powi(4) * (n + rho) * k);
                RoundParams {
                    eta: 1.0 / (self.alpha * tf),
                    r: g * g / (tf * k),
                    r_prime: if literal { printed } else { printed * g / (d * tf) },
                }
            }
            Variant::GeneralClassical => {
                let base = self.delta / (self.horizon as f64 * n.powf(1.5));
                RoundParams {
                    eta: d / (g * tf.sqrt()),
                    r: 1.0 / (tf * n).sqrt(),
                    r_prime: if literal { base / tf.sqrt() } else { base / tf },
                }
            }
        })
    }

    /// The round's L1 gradient-error threshold at the schedule values (no
    /// register rounding): `8 pi n^4 (n + rho) G r' / (rho^2 p r)` for the
    /// quantum variants, `n G r' / (2 rho r)` for the classical one.
    pub fn error_bound(&self, t: usize) -> Result<f64> {
        let q = self.params_at(t)?;
        let (n, g, rho) = (self.n as f64, self.lipschitz, self.rho);
        Ok(if self.variant.is_quantum() {
            8.0 * PI * n.powi(4) * (n + rho) * g * q.r_prime / (rho * rho * self.p * q.r)
        } else {
            n * g * q.r_prime / (2.0 * rho * q.r)
        })
    }

    /// How far past K the oracles must answer: the first round's `r + r'`,
    /// since both radii are nonincreasing.
    pub fn query_enlargement(&self) -> Result<f64> {
        let q = self.params_at(1)?;
        Ok(q.r + q.r_prime)
    }

    pub fn descriptor(&self) -> String {
        let mut s = format!(
            "{} mode={} n={} D={} G={} T={} delta={}",
            self.variant, self.mode, self.n, self.diameter, self.lipschitz, self.horizon, self.delta
        );
        if self.variant.is_quantum() {
            s += &format!(" rho={} p={}", self.rho, self.p);
        }
        if self.variant == Variant::StronglyConvexQuantum {
            s += &format!(" alpha={}", self.alpha);
        }
        s
    }
}

/// `Pi_K(x - eta grad)`.
pub fn step(x: &[f64], grad: &[f64], eta: f64, set: &FeasibleSet) -> Result<Point> {
    if x.len() != grad.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: grad.len() });
    }
    set.project(&Point::from(x).axpy(-eta, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Quantum,
    Classical,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::Quantum => "quantum",
            EstimatorKind::Classical => "classical",
        })
    }
}

/// The player's gradient oracle.
#[derive(Debug, Clone, Copy)]
pub enum Estimator {
    Quantum(QuantumEstimator),
    Classical,
}

impl Estimator {
    /// The estimator a schedule calls for, scaled by the schedule's G.
    pub fn for_schedule(schedule: &Schedule, memory_guard: u64) -> Estimator {
        if schedule.variant.is_quantum() {
            let mut q = QuantumEstimator::new(schedule.lipschitz, schedule.rho, schedule.p);
            q.memory_guard = memory_guard;
            Estimator::Quantum(q)
        } else {
            Estimator::Classical
        }
    }

    pub fn kind(&self) -> EstimatorKind {
        match self {
            Estimator::Quantum(_) => EstimatorKind::Quantum,
            Estimator::Classical => EstimatorKind::Classical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub x: Point,
    pub z: Point,
    /// `f_t(x_t)`, evaluated for bookkeeping and not charged.
    pub loss_value: f64,
    pub grad: Point,
    pub eta: f64,
    pub r: f64,
    pub r_prime: f64,
    pub queries: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub seed: u64,
    pub schedule: String,
    pub adversary: String,
    pub rounds: Vec<RoundRecord>,
    pub total_queries: u64,
    /// Classical evaluations spent simulating quantum circuits (diagnostic).
    pub sim_evaluations: u64,
}

impl Transcript {
    pub fn dim(&self) -> usize {
        self.rounds.first().map_or(0, |r| r.x.dim())
    }

    pub fn cumulative_loss(&self) -> f64 {
        self.rounds.iter().map(|r| r.loss_value).sum()
    }
}

/// A finished game: the transcript and the losses the adversary played.
#[derive(Debug, Clone)]
pub struct GameOutcome {
    pub transcript: Transcript,
    pub losses: Vec<LossOracle>,
}

/// Plays `T` rounds. `x_1` is uniform on K; afterwards each round estimates a
/// gradient of `f_t` near `x_t` and takes a projected step. Failures are
/// reported with their round index.
pub fn run_game(
    set: &FeasibleSet,
    adversary: &Adversary,
    schedule: &Schedule,
    estimator: Estimator,
    seed: u64,
) -> Result<GameOutcome> {
    schedule.validate()?;
    if schedule.n != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), found: schedule.n });
    }
    if adversary.horizon() != schedule.horizon {
        return Err(Error::ScheduleMismatch(format!(
            "adversary plays {} rounds, schedule has T = {}",
            adversary.horizon(),
            schedule.horizon
        )));
    }
    if schedule.variant.is_quantum() != (estimator.kind() == EstimatorKind::Quantum) {
        return Err(Error::ScheduleMismatch(format!(
            "schedule {} cannot drive the {} estimator",
            schedule.variant,
            estimator.kind()
        )));
    }
    if set.diameter() > schedule.diameter * (1.0 + 1e-12) {
        return Err(Error::ScheduleMismatch(format!(
            "set diameter {} exceeds the schedule's D = {}",
            set.diameter(),
            schedule.diameter
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = set.sample_uniform(&mut rng);
    let mut rounds = Vec::with_capacity(schedule.horizon);
    let mut losses = Vec::with_capacity(schedule.horizon);
    let mut total_queries = 0;
    let mut sim_evaluations = 0;
    for t in 1..=schedule.horizon {
        let play = |rng: &mut ChaCha8Rng| -> Result<_> {
            let mut f = adversary.next(t, &x)?;
            if f.lipschitz() > schedule.lipschitz * (1.0 + 1e-12) {
                return Err(Error::ScheduleMismatch(format!(
                    "loss has Lipschitz constant {} on its domain, schedule assumes G = {}",
                    f.lipschitz(),
                    schedule.lipschitz
                )));
            }
            let q = schedule.params_at(t)?;
            let loss_value = f.value_uncounted(&x);
            let before = f.queries().total();
            let (z, grad, sim) = match &estimator {
                Estimator::Quantum(est) => {
                    let e = est.estimate(&mut f, &x, q.r, q.r_prime, rng)?;
                    (e.z, e.grad, e.sim_evaluations)
                }
                Estimator::Classical => {
                    let e = estimate_gradient_c(&mut f, &x, q.r, q.r_prime, rng)?;
                    (e.z, e.grad, 0)
                }
            };
            let queries = f.queries().total() - before;
            let next = step(&x, &grad, q.eta, set)?;
            let record = RoundRecord { t, x: x.clone(), z, loss_value, grad, eta: q.eta, r: q.r, r_prime: q.r_prime, queries };
            Ok((record, f, next, sim))
        };
        let (record, f, next, sim) = play(&mut rng).map_err(|e| e.in_round(t))?;
        total_queries += record.queries;
        sim_evaluations += sim;
        rounds.push(record);
        losses.push(f);
        x = next;
    }
    Ok(GameOutcome {
        transcript: Transcript {
            seed,
            schedule: schedule.descriptor(),
            adversary: format!("{adversary:?}"),
            rounds,
            total_queries,
            sim_evaluations,
        },
        losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qgrad::{QGradParams, DEFAULT_MEMORY_GUARD};
    use crate::losses::{make_family, AdversarySpec, Domain, FamilyKind, FamilyParams, Loss, Power};

    fn thm1(n: usize, rho: f64, mode: RPrimeMode) -> Schedule {
        Schedule::general_quantum(n, 1.0, 1.0, 16, rho, rho, mode).unwrap()
    }

    #[test]
    fn first_round_values() {
        assert_eq!(thm1(1, 0.1, RPrimeMode::ProofConsistent).params_at(1).unwrap().eta, 1.0);
        for mode in [RPrimeMode::PaperLiteral, RPrimeMode::ProofConsistent] {
            let q = thm1(2, 0.1, mode).params_at(1).unwrap();
            assert!((q.r_prime - 8.3735e-7).abs() < 5e-11, "{}", q.r_prime);
            assert!((q.r - 0.5f64.sqrt()).abs() < 1e-15);
        }
        let s = Schedule::strongly_convex_quantum(1, 1.0, 1.0, 1.0, 4, 0.1, 0.1, RPrimeMode::ProofConsistent).unwrap();
        assert_eq!(s.params_at(2).unwrap().eta, 0.5);
    }

    #[test]
    fn out_of_range_round() {
        let s = thm1(1, 0.1, RPrimeMode::PaperLiteral);
        assert!(matches!(s.params_at(0), Err(Error::RoundOutOfRange { .. })));
        assert!(matches!(s.params_at(17), Err(Error::RoundOutOfRange { .. })));
    }

    fn all_schedules() -> Vec<Schedule> {
        let mut v = Vec::new();
        for mode in [RPrimeMode::PaperLiteral, RPrimeMode::ProofConsistent] {
            for n in [1, 3] {
                v.push(Schedule::general_quantum(n, 1.5, 2.0, 50, 0.01, 0.02, mode).unwrap());
                v.push(Schedule::strongly_convex_quantum(n, 1.5, 2.0, 0.5, 50, 0.01, 0.02, mode).unwrap());
                v.push(Schedule::general_classical(n, 1.5, 2.0, 50, 0.1, mode).unwrap());
            }
        }
        v
    }

    #[test]
    fn schedules_are_positive_and_nonincreasing() {
        for s in all_schedules() {
            let mut prev = s.params_at(1).unwrap();
            for t in 1..=s.horizon {
                let q = s.params_at(t).unwrap();
                assert!(q.eta > 0.0 && q.r > 0.0 && q.r_prime > 0.0);
                assert!(q.eta <= prev.eta && q.r <= prev.r && q.r_prime <= prev.r_prime, "{s:?} at {t}");
                prev = q;
            }
        }
    }

    #[test]
    fn error_budget_identities() {
        for n in [1, 2, 5] {
            let lit = Schedule::general_quantum(n, 1.0, 3.0, 100, 0.05, 0.02, RPrimeMode::PaperLiteral).unwrap();
            let con = Schedule { mode: RPrimeMode::ProofConsistent, ..lit };
            for t in [1, 4, 9, 100] {
                let g = lit.lipschitz;
                assert!((lit.error_bound(t).unwrap() / g - 1.0).abs() < 1e-9);
                assert!((con.error_bound(t).unwrap() / (g / (t as f64).sqrt()) - 1.0).abs() < 1e-9);
                // agrees with the estimator's own threshold before register rounding
                let q = con.params_at(t).unwrap();
                let beta = n as f64 * g / (con.p * q.r);
                let params = QGradParams { n, lipschitz: g, rho: con.rho, p: con.p, r: q.r, r_prime: q.r_prime, beta, b: 1, c: 1 };
                assert!((params.lemma1_bound() / con.error_bound(t).unwrap() - 1.0).abs() < 1e-12);
            }
            let sc = Schedule::strongly_convex_quantum(n, 2.0, 3.0, 0.5, 100, 0.05, 0.02, RPrimeMode::ProofConsistent).unwrap();
            let sl = Schedule { mode: RPrimeMode::PaperLiteral, ..sc };
            let cc = Schedule::general_classical(n, 2.0, 3.0, 100, 0.1, RPrimeMode::ProofConsistent).unwrap();
            let cl = Schedule { mode: RPrimeMode::PaperLiteral, ..cc };
            for t in [1, 7, 64] {
                let tf = t as f64;
                assert!((sl.error_bound(t).unwrap() / 3.0 - 1.0).abs() < 1e-9);
                assert!((sc.diameter * sc.error_bound(t).unwrap() / (9.0 / tf) - 1.0).abs() < 1e-9);
                assert!((cl.error_bound(t).unwrap() / 1.5 - 1.0).abs() < 1e-9);
                assert!((cc.error_bound(t).unwrap() / (1.5 / tf.sqrt()) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn step_examples() {
        let k = FeasibleSet::cube(1, 0.0, 1.0).unwrap();
        assert_eq!(step(&[0.5], &[1.0], 0.25, &k).unwrap()[0], 0.25);
        assert_eq!(step(&[0.1], &[1.0], 0.5, &k).unwrap()[0], 0.0);
        assert_eq!(step(&[0.3], &[0.0], 0.5, &k).unwrap()[0], 0.3);
        assert!(step(&[0.3], &[0.0, 1.0], 0.5, &k).is_err());
    }

    fn game(
        n: usize,
        spec: AdversarySpec,
        schedule: &Schedule,
        seed: u64,
    ) -> Result<GameOutcome> {
        let set = FeasibleSet::cube(n, 0.0, 1.0).unwrap();
        let domain = Domain::new(set.clone(), schedule.query_enlargement().unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xadd);
        let adversary = spec.build(&domain, schedule.horizon, &mut rng)?;
        run_game(&set, &adversary, schedule, Estimator::for_schedule(schedule, DEFAULT_MEMORY_GUARD), seed)
    }

    fn constant_spec() -> AdversarySpec {
        AdversarySpec {
            power: Power::Oblivious,
            family: FamilyKind::Linear,
            params: FamilyParams { slope: Some(vec![0.0, 0.0]), value: Some(2.5), ..Default::default() },
        }
    }

    #[test]
    fn constant_losses_freeze_the_player() {
        let q = Schedule::general_quantum(2, 2f64.sqrt(), 1.0, 12, 0.2, 0.2, RPrimeMode::ProofConsistent).unwrap();
        let c = Schedule::general_classical(2, 2f64.sqrt(), 1.0, 12, 0.1, RPrimeMode::ProofConsistent).unwrap();
        for s in [q, c] {
            let out = game(2, constant_spec(), &s, 3).unwrap();
            let x1 = out.transcript.rounds[0].x.clone();
            for r in &out.transcript.rounds {
                assert_eq!(r.grad.as_ref(), &[0.0, 0.0]);
                assert_eq!(r.x, x1);
                assert_eq!(r.loss_value, 2.5);
            }
        }
    }

    #[test]
    fn query_totals() {
        let spec = AdversarySpec {
            power: Power::Oblivious,
            family: FamilyKind::Quadratic,
            params: FamilyParams { curvature: Some(0.3), ..Default::default() },
        };
        let q = Schedule::general_quantum(2, 2f64.sqrt(), 1.0, 10, 0.2, 0.2, RPrimeMode::ProofConsistent).unwrap();
        let out = game(2, spec.clone(), &q, 1).unwrap();
        assert_eq!(out.transcript.total_queries, 40);
        assert!(out.transcript.rounds.iter().all(|r| r.queries == 4));
        assert!(out.transcript.sim_evaluations > 0);
        let c = Schedule::general_classical(2, 2f64.sqrt(), 1.0, 10, 0.1, RPrimeMode::ProofConsistent).unwrap();
        let out = game(2, spec, &c, 1).unwrap();
        assert_eq!(out.transcript.total_queries, 40);
        assert_eq!(out.losses.iter().map(|f| f.queries().classical).sum::<u64>(), 40);
    }

    #[test]
    fn iterates_stay_feasible_and_games_repeat() {
        let spec = AdversarySpec {
            power: Power::CompletelyAdaptive,
            family: FamilyKind::Linear,
            params: FamilyParams { scale: Some(0.8), ..Default::default() },
        };
        let s = Schedule::general_classical(3, 3f64.sqrt(), 1.0, 40, 0.1, RPrimeMode::PaperLiteral).unwrap();
        let a = game(3, spec.clone(), &s, 77).unwrap().transcript;
        let set = FeasibleSet::cube(3, 0.0, 1.0).unwrap();
        assert!(a.rounds.iter().all(|r| set.contains(&r.x, 1e-12)));
        assert_eq!(a, game(3, spec.clone(), &s, 77).unwrap().transcript);
        assert_ne!(a, game(3, spec, &s, 78).unwrap().transcript);
    }

    #[test]
    fn single_round_regret_by_hand() {
        // f(x) = x on [0, 1]: regret is x_1 - 0
        let set = FeasibleSet::cube(1, 0.0, 1.0).unwrap();
        let s = Schedule::general_classical(1, 1.0, 1.0, 1, 0.1, RPrimeMode::ProofConsistent).unwrap();
        let domain = Domain::new(set.clone(), s.query_enlargement().unwrap());
        let f = make_family(Loss::Linear { slope: Point::new(vec![1.0]), offset: 0.0 }, domain).unwrap();
        let out = run_game(&set, &Adversary::Oblivious(vec![f]), &s, Estimator::Classical, 9).unwrap();
        let r = &out.transcript.rounds[0];
        assert_eq!(r.loss_value, r.x[0]);
    }

    #[test]
    fn mismatches_are_rejected() {
        let q = Schedule::general_quantum(2, 2f64.sqrt(), 1.0, 5, 0.2, 0.2, RPrimeMode::ProofConsistent).unwrap();
        let set = FeasibleSet::cube(2, 0.0, 1.0).unwrap();
        let domain = Domain::new(set.clone(), 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let adv = constant_spec().build(&domain, 5, &mut rng).unwrap();
        assert!(matches!(run_game(&set, &adv, &q, Estimator::Classical, 0), Err(Error::ScheduleMismatch(_))));
        let steep = AdversarySpec {
            power: Power::Oblivious,
            family: FamilyKind::Linear,
            params: FamilyParams { slope: Some(vec![3.0, 0.0]), ..Default::default() },
        };
        let adv = steep.build(&domain, 5, &mut rng).unwrap();
        let err = run_game(&set, &adv, &q, Estimator::for_schedule(&q, DEFAULT_MEMORY_GUARD), 0).unwrap_err();
        assert!(matches!(err, Error::InRound { t: 1, .. }), "{err}");
    }

    #[test]
    fn domain_violation_names_the_round() {
        // oracle domain narrower than the sampling radius
        let s = Schedule::general_classical(1, 1.0, 1.0, 3, 0.1, RPrimeMode::ProofConsistent).unwrap();
        let set = FeasibleSet::cube(1, 0.0, 1.0).unwrap();
        let f = make_family(Loss::Linear { slope: Point::new(vec![0.5]), offset: 0.0 }, Domain::new(set.clone(), 0.0)).unwrap();
        let adv = Adversary::Oblivious(vec![f; 3]);
        let err = run_game(&set, &adv, &s, Estimator::Classical, 2).unwrap_err();
        assert!(matches!(err, Error::InRound { t: 1, ref source } if matches!(**source, Error::DomainViolation { .. })), "{err}");
    }
}
