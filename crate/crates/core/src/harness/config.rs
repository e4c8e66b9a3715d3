//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "geometry":  { "kind": "cube", "n": 2, "lower": 0.0, "upper": 1.0 },
//!   "adversary": { "power": "oblivious", "family": "quadratic", "params": { "curvature": 0.4 } },
//!   "schedule":  { "variant": "general_quantum", "G": 1.0, "T": 64, "delta": 0.2,
//!                  "r_prime_mode": "proof_consistent" },
//!   "estimator": "quantum",
//!   "runtime":   { "seed": 7, "trials": 10, "memory_guard": 67108864 }
//! }
//! ```
//!
//! Geometry kinds are `box` (`lower`, `upper` vectors), `cube` (`n`, scalar
//! `lower`, `upper`) and `ball` (`center`, `radius`). In the schedule, `D`
//! defaults to the set's diameter; the quantum variants take `rho` and `p`
//! or split `delta` evenly between them; the classical variant takes `delta`;
//! `alpha` is required for `strongly_convex_quantum`. The estimator defaults
//! to the one the variant calls for.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FeasibleSet, Point};
use crate::losses::AdversarySpec;
use crate::ogd::{EstimatorKind, RPrimeMode, Schedule, Variant};
use crate::qgrad::DEFAULT_MEMORY_GUARD;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Cube { n: usize, lower: f64, upper: f64 },
    Ball { center: Vec<f64>, radius: f64 },
}

impl GeometryConfig {
    pub fn build(&self) -> Result<FeasibleSet> {
        let set = match self {
            GeometryConfig::Box { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(Error::Config("box bounds have different lengths".into()));
                }
                FeasibleSet::new_box(Point::new(lower.clone()), Point::new(upper.clone()))
            }
            GeometryConfig::Cube { n, lower, upper } => FeasibleSet::cube(*n, *lower, *upper),
            GeometryConfig::Ball { center, radius } => FeasibleSet::new_ball(Point::new(center.clone()), *radius),
        };
        set.map_err(|e| Error::Config(format!("geometry: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub variant: Variant,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub diameter: Option<f64>,
    #[serde(rename = "G")]
    pub lipschitz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub r_prime_mode: RPrimeMode,
}

impl ScheduleConfig {
    pub fn build(&self, set: &FeasibleSet) -> Result<Schedule> {
        let n = set.dim();
        let d = self.diameter.unwrap_or_else(|| set.diameter());
        let (g, t, mode) = (self.lipschitz, self.horizon, self.r_prime_mode);
        let quantum_probabilities = || -> Result<(f64, f64)> {
            match (self.rho, self.p, self.delta) {
                (Some(rho), Some(p), _) => Ok((rho, p)),
                (None, None, Some(delta)) => Ok(Schedule::split_delta(delta, t)),
                _ => Err(Error::Config("quantum schedules need both rho and p, or delta".into())),
            }
        };
        let schedule = match self.variant {
            Variant::GeneralQuantum => {
                let (rho, p) = quantum_probabilities()?;
                Schedule::general_quantum(n, d, g, t, rho, p, mode)
            }
            Variant::StronglyConvexQuantum => {
                let (rho, p) = quantum_probabilities()?;
                let alpha = self.alpha.ok_or_else(|| Error::Config("strongly_convex_quantum needs alpha".into()))?;
                Schedule::strongly_convex_quantum(n, d, g, alpha, t, rho, p, mode)
            }
            Variant::GeneralClassical => {
                let delta = self.delta.ok_or_else(|| Error::Config("general_classical needs delta".into()))?;
                Schedule::general_classical(n, d, g, t, delta, mode)
            }
        };
        schedule.map_err(|e| Error::Config(format!("schedule: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuntimeConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default = "default_guard")]
    pub memory_guard: u64,
}

fn one() -> usize {
    1
}

fn default_guard() -> u64 {
    DEFAULT_MEMORY_GUARD
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig { seed: 0, trials: 1, memory_guard: DEFAULT_MEMORY_GUARD }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    pub adversary: AdversarySpec,
    pub schedule: ScheduleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorKind>,
    #[serde(default)]
    pub runtime: RuntimeConfig,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub set: FeasibleSet,
    pub schedule: Schedule,
    pub estimator: EstimatorKind,
    pub memory_guard: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn build(&self) -> Result<Experiment> {
        let set = self.geometry.build()?;
        let schedule = self.schedule.build(&set)?;
        let natural = if schedule.variant.is_quantum() { EstimatorKind::Quantum } else { EstimatorKind::Classical };
        let estimator = self.estimator.unwrap_or(natural);
        if estimator != natural {
            return Err(Error::Config(format!("variant {} requires the {natural} estimator", schedule.variant)));
        }
        if self.runtime.memory_guard == 0 {
            return Err(Error::Config("memory_guard must be positive".into()));
        }
        Ok(Experiment {
            config: self.clone(),
            set,
            schedule,
            estimator,
            memory_guard: self.runtime.memory_guard,
        })
    }
}
