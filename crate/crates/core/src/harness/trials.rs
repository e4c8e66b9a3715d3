//! Seeded games, multi-trial aggregation, gradient checks and output files.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::bounds::{evaluate, RegretReport};
use super::config::Experiment;
use super::csv;
use crate::cgrad::estimate_gradient_c;
use crate::error::{Error, Result};
use crate::geometry::{distance, Norm};
use crate::losses::{Adversary, Domain};
use crate::ogd::{run_game, Estimator, GameOutcome, Transcript};

/// Adversary randomness: stream 1 of the trial seed (the player uses stream 0).
pub fn adversary_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn build_adversary(experiment: &Experiment, seed: u64) -> Result<Adversary> {
    let domain = Domain::new(experiment.set.clone(), experiment.schedule.query_enlargement()?);
    experiment.config.adversary.build(&domain, experiment.schedule.horizon, &mut adversary_rng(seed))
}

/// Fails early if some round's registers would exceed the memory guard.
/// Register width grows with `r_t / r'_t`, which is monotone in `t`, so the
/// first and last rounds suffice.
pub fn check_memory(experiment: &Experiment) -> Result<()> {
    if let Estimator::Quantum(q) = Estimator::for_schedule(&experiment.schedule, experiment.memory_guard) {
        for t in [1, experiment.schedule.horizon] {
            let p = experiment.schedule.params_at(t)?;
            q.params(experiment.schedule.n, p.r, p.r_prime)?;
        }
    }
    Ok(())
}

/// Plays one seeded game.
pub fn play(experiment: &Experiment, seed: u64) -> Result<GameOutcome> {
    check_memory(experiment)?;
    let adversary = build_adversary(experiment, seed)?;
    let estimator = Estimator::for_schedule(&experiment.schedule, experiment.memory_guard);
    let mut outcome = run_game(&experiment.set, &adversary, &experiment.schedule, estimator, seed)?;
    outcome.transcript.adversary = serde_json::to_string(&experiment.config.adversary).expect("adversary serializes");
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub seed: u64,
    pub transcript: Transcript,
    pub report: RegretReport,
}

pub fn run_one(experiment: &Experiment, seed: u64) -> Result<TrialResult> {
    let outcome = play(experiment, seed)?;
    let report = evaluate(&outcome, &experiment.set, &experiment.schedule)?;
    Ok(TrialResult { seed, transcript: outcome.transcript, report })
}

#[derive(Debug, Clone)]
pub struct TrialsReport {
    pub results: Vec<TrialResult>,
    /// Seeds whose game failed, with the error text.
    pub failures: Vec<(u64, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub trials: usize,
    pub completed: usize,
    pub failed: usize,
    /// Fraction of completed trials with regret at most the certified bound.
    pub success_fraction: f64,
    /// Fraction of completed trials where no round exceeded its error threshold.
    pub clean_fraction: f64,
    /// Fraction of clean trials with regret at most the certified bound.
    pub clean_success_fraction: f64,
    pub mean_regret: f64,
    pub max_regret: f64,
    pub mean_bound: f64,
    /// Exceeding rounds over all completed rounds.
    pub exceedance_rate: f64,
    pub min_queries: u64,
    pub max_queries: u64,
    pub unconverged_comparators: usize,
}

fn fraction(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl TrialsReport {
    pub fn aggregate(&self) -> Aggregate {
        let done = self.results.len();
        let reports: Vec<&RegretReport> = self.results.iter().map(|r| &r.report).collect();
        let clean: Vec<&&RegretReport> = reports.iter().filter(|r| r.lemma_exceedances == 0).collect();
        let rounds: usize = self.results.iter().map(|r| r.transcript.rounds.len()).sum();
        let regrets = reports.iter().map(|r| r.regret);
        Aggregate {
            trials: done + self.failures.len(),
            completed: done,
            failed: self.failures.len(),
            success_fraction: fraction(reports.iter().filter(|r| r.bound_satisfied).count(), done),
            clean_fraction: fraction(clean.len(), done),
            clean_success_fraction: fraction(clean.iter().filter(|r| r.bound_satisfied).count(), clean.len()),
            mean_regret: if done == 0 { 0.0 } else { regrets.clone().sum::<f64>() / done as f64 },
            max_regret: regrets.fold(f64::NEG_INFINITY, f64::max),
            mean_bound: if done == 0 { 0.0 } else { reports.iter().map(|r| r.bound_value).sum::<f64>() / done as f64 },
            exceedance_rate: fraction(reports.iter().map(|r| r.lemma_exceedances).sum(), rounds),
            min_queries: self.results.iter().map(|r| r.transcript.total_queries).min().unwrap_or(0),
            max_queries: self.results.iter().map(|r| r.transcript.total_queries).max().unwrap_or(0),
            unconverged_comparators: reports.iter().filter(|r| !r.comparator_converged).count(),
        }
    }
}

/// Runs `num` games with seeds `seed_base, seed_base + 1, ...` in parallel.
/// A failing trial is recorded and does not stop the others.
pub fn run_trials(experiment: &Experiment, num: usize, seed_base: u64) -> TrialsReport {
    let outcomes: Vec<(u64, Result<TrialResult>)> = (0..num as u64)
        .into_par_iter()
        .map(|i| {
            let seed = seed_base.wrapping_add(i);
            (seed, run_one(experiment, seed))
        })
        .collect();
    let mut report = TrialsReport { results: Vec::new(), failures: Vec::new() };
    for (seed, r) in outcomes {
        match r {
            Ok(t) => report.results.push(t),
            Err(e) => report.failures.push((seed, e.to_string())),
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    /// L1 gradient errors, one per trial, in trial order.
    pub errors: Vec<f64>,
    pub threshold: f64,
    pub exceedances: usize,
}

impl GradcheckReport {
    pub fn exceedance_rate(&self) -> f64 {
        fraction(self.exceedances, self.errors.len())
    }

    /// Empirical quantile by nearest rank.
    pub fn quantile(&self, q: f64) -> f64 {
        let mut sorted = self.errors.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.is_empty() {
            return f64::NAN;
        }
        let k = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        sorted[k - 1]
    }
}

/// First-round gradient estimates on fresh losses from the configured
/// family at uniform points of K, compared with the exact gradient.
pub fn gradcheck(experiment: &Experiment, trials: usize, seed_base: u64) -> Result<GradcheckReport> {
    check_memory(experiment)?;
    let schedule = &experiment.schedule;
    let q = schedule.params_at(1)?;
    let threshold = schedule.error_bound(1)?;
    let estimator = Estimator::for_schedule(schedule, experiment.memory_guard);
    let errors = (0..trials as u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let seed = seed_base.wrapping_add(i);
            let adversary = build_adversary(experiment, seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = experiment.set.sample_uniform(&mut rng);
            let mut f = adversary.next(1, &x)?;
            let (z, grad) = match &estimator {
                Estimator::Quantum(e) => {
                    let r = e.estimate(&mut f, &x, q.r, q.r_prime, &mut rng)?;
                    (r.z, r.grad)
                }
                Estimator::Classical => {
                    let r = estimate_gradient_c(&mut f, &x, q.r, q.r_prime, &mut rng)?;
                    (r.z, r.grad)
                }
            };
            Ok(distance(&f.exact_gradient(&z)?, &grad, Norm::L1))
        })
        .collect::<Result<Vec<f64>>>()?;
    let exceedances = errors.iter().filter(|e| **e > threshold).count();
    Ok(GradcheckReport { errors, threshold, exceedances })
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key}={value}");
}

/// Machine-readable block for one game.
pub fn run_summary(experiment: &Experiment, result: &TrialResult) -> String {
    let mut s = String::new();
    let r = &result.report;
    kv(&mut s, "seed", result.seed);
    kv(&mut s, "variant", experiment.schedule.variant);
    kv(&mut s, "r_prime_mode", experiment.schedule.mode);
    kv(&mut s, "estimator", experiment.estimator);
    kv(&mut s, "n", experiment.schedule.n);
    kv(&mut s, "T", experiment.schedule.horizon);
    kv(&mut s, "regret", csv::format_real(r.regret));
    kv(&mut s, "bound", csv::format_real(r.bound_value));
    kv(&mut s, "bound_satisfied", r.bound_satisfied);
    kv(&mut s, "lemma_exceedances", r.lemma_exceedances);
    kv(&mut s, "comparator", r.comparator.iter().map(|v| csv::format_real(*v)).collect::<Vec<_>>().join(";"));
    kv(&mut s, "comparator_objective", csv::format_real(r.comparator_objective));
    kv(&mut s, "comparator_converged", r.comparator_converged);
    kv(&mut s, "total_queries", result.transcript.total_queries);
    kv(&mut s, "sim_evaluations", result.transcript.sim_evaluations);
    kv(&mut s, "schedule", &result.transcript.schedule);
    kv(&mut s, "adversary", &result.transcript.adversary);
    s
}

/// Machine-readable block for a batch of games.
pub fn trials_summary(experiment: &Experiment, report: &TrialsReport, seed_base: u64) -> String {
    let a = report.aggregate();
    let mut s = String::new();
    kv(&mut s, "variant", experiment.schedule.variant);
    kv(&mut s, "r_prime_mode", experiment.schedule.mode);
    kv(&mut s, "estimator", experiment.estimator);
    kv(&mut s, "seed_base", seed_base);
    kv(&mut s, "trials", a.trials);
    kv(&mut s, "completed", a.completed);
    kv(&mut s, "failed", a.failed);
    kv(&mut s, "success_fraction", a.success_fraction);
    kv(&mut s, "clean_fraction", a.clean_fraction);
    kv(&mut s, "clean_success_fraction", a.clean_success_fraction);
    kv(&mut s, "mean_regret", csv::format_real(a.mean_regret));
    kv(&mut s, "max_regret", csv::format_real(a.max_regret));
    kv(&mut s, "mean_bound", csv::format_real(a.mean_bound));
    kv(&mut s, "exceedance_rate", a.exceedance_rate);
    kv(&mut s, "min_queries", a.min_queries);
    kv(&mut s, "max_queries", a.max_queries);
    kv(&mut s, "unconverged_comparators", a.unconverged_comparators);
    let seeds: Vec<String> = report.results.iter().map(|r| r.seed.to_string()).collect();
    kv(&mut s, "seeds", seeds.join(";"));
    for (seed, e) in &report.failures {
        kv(&mut s, &format!("failure_{seed}"), e.replace('\n', " "));
    }
    s
}
