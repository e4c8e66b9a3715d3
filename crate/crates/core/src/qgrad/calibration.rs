//! Decoding convention for measured registers and the linear-exactness
//! calibration that pins it down.
//!
//! For a linear loss with slope `g`, the phase along axis `i` is
//! `g_i (u_i - 2^(b-1)) / (2G)`. The offset term is a global phase, so after
//! the transform the peak sits at `2^b g_i / (2G) mod 2^b`, not at an
//! offset of `2^(b-1)`. Which outcome means "zero gradient" and which
//! transform sign puts positive slopes at positive outcomes is decided here by
//! running the circuit on linear losses and requiring exact recovery.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_phase_state, inverse_qft_all, Measurement, QGradParams};
use crate::error::{Error, Result};
use crate::geometry::{FeasibleSet, Point};
use crate::losses::{make_family, Domain, Loss};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformSign {
    /// Kernel `exp(-2 pi i m u / N)`.
    Negative,
    /// Kernel `exp(+2 pi i m u / N)`.
    Positive,
}

impl fmt::Display for TransformSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformSign::Negative => "negative",
            TransformSign::Positive => "positive",
        })
    }
}

/// Where the zero-gradient outcome lands on a `2^b` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroOutcome {
    /// Outcome 0.
    Origin,
    /// Outcome `2^(b-1)`.
    HalfGrid,
}

impl ZeroOutcome {
    fn outcome(&self, grid: usize) -> usize {
        match self {
            ZeroOutcome::Origin => 0,
            ZeroOutcome::HalfGrid => grid / 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Convention {
    pub sign: TransformSign,
    pub zero: ZeroOutcome,
}

impl Convention {
    /// The convention found by [`resolve_convention`]; asserted in tests.
    pub const CALIBRATED: Convention = Convention { sign: TransformSign::Negative, zero: ZeroOutcome::Origin };

    /// Signed grid offset of outcome `m`, in the window `[-2^(b-1), 2^(b-1))`
    /// around the zero outcome.
    pub fn centered(&self, m: usize, grid: usize) -> i64 {
        let shifted = (m + grid - self.zero.outcome(grid) + grid / 2) % grid;
        shifted as i64 - (grid / 2) as i64
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let zero = match self.zero {
            ZeroOutcome::Origin => "0",
            ZeroOutcome::HalfGrid => "2^(b-1)",
        };
        write!(f, "transform_sign={} zero_outcome={}", self.sign, zero)
    }
}

/// Gradient estimate `(2G / 2^b) * centered(m_i)` per coordinate.
pub fn decode(m: &Measurement, params: &QGradParams, convention: &Convention) -> Point {
    let grid = params.grid();
    let step = 2.0 * params.lipschitz / grid as f64;
    Point::new(m.outcomes.iter().map(|&mi| step * convention.centered(mi, grid) as f64).collect())
}

/// Outcome of a calibration sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRecord {
    pub convention: Convention,
    pub register_widths: Vec<u32>,
    pub slopes_checked: usize,
    /// Smallest probability of the correct outcome over the sweep.
    pub min_probability: f64,
}

impl fmt::Display for CalibrationRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "transform_sign={}", self.convention.sign)?;
        writeln!(
            f,
            "zero_outcome={}",
            match self.convention.zero {
                ZeroOutcome::Origin => "origin",
                ZeroOutcome::HalfGrid => "half_grid",
            }
        )?;
        let widths: Vec<String> = self.register_widths.iter().map(|b| b.to_string()).collect();
        writeln!(f, "register_widths={}", widths.join(","))?;
        writeln!(f, "slopes_checked={}", self.slopes_checked)?;
        write!(f, "min_probability={:.17}", self.min_probability)
    }
}

const CALIBRATION_WIDTHS: [u32; 3] = [2, 3, 4];
const EXACT: f64 = 1.0 - 1e-9;

fn line_probabilities(slope: f64, b: u32, sign: TransformSign, z: f64) -> Result<Vec<f64>> {
    let set = FeasibleSet::cube(1, -1.0, 1.0)?;
    let f = make_family(Loss::Linear { slope: Point::new(vec![slope]), offset: 0.25 }, Domain::new(set, 2.0))?;
    let params = QGradParams { n: 1, lipschitz: 1.0, rho: 1.0, p: 1.0, r: 1.0, r_prime: 1.0, beta: 1.0, b, c: b + 2 };
    let state = build_phase_state(&f, &[z], &params)?;
    Ok(inverse_qft_all(&state, sign).probabilities())
}

fn argmax(p: &[f64]) -> (usize, f64) {
    p.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, v)| if v > a.1 { (i, v) } else { a })
}

/// Runs the linear-exactness sweep (n = 1, b in {2, 3, 4}, every on-grid
/// slope `2 G k / 2^b`) with the given transform sign. The zero outcome is
/// read off the constant loss; every slope must then decode exactly with
/// probability 1.
pub fn calibrate(sign: TransformSign) -> Result<CalibrationRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut zero: Option<ZeroOutcome> = None;
    let mut min_probability: f64 = 1.0;
    let mut slopes_checked = 0;
    for b in CALIBRATION_WIDTHS {
        let grid = 1usize << b;
        let z = rng.gen_range(-1.0..1.0);
        let (m0, p0) = argmax(&line_probabilities(0.0, b, sign, z)?);
        if p0 < EXACT {
            return Err(Error::Calibration(format!("b = {b}: zero slope is not a basis state (p = {p0})")));
        }
        let found = if m0 == 0 {
            ZeroOutcome::Origin
        } else if m0 == grid / 2 {
            ZeroOutcome::HalfGrid
        } else {
            return Err(Error::Calibration(format!("b = {b}: zero slope measured at {m0}")));
        };
        match zero {
            Some(z0) if z0 != found => {
                return Err(Error::Calibration(format!("b = {b}: zero outcome moved from {z0:?} to {found:?}")))
            }
            _ => zero = Some(found),
        }
        let convention = Convention { sign, zero: found };
        let params = QGradParams { n: 1, lipschitz: 1.0, rho: 1.0, p: 1.0, r: 1.0, r_prime: 1.0, beta: 1.0, b, c: b + 2 };
        for k in -(grid as i64 / 2)..(grid as i64 / 2) {
            let slope = 2.0 * k as f64 / grid as f64;
            let z = rng.gen_range(-1.0..1.0);
            let probs = line_probabilities(slope, b, sign, z)?;
            let (m, p) = argmax(&probs);
            let decoded = decode(&Measurement { outcomes: vec![m] }, &params, &convention)[0];
            if decoded != slope || p < EXACT {
                return Err(Error::Calibration(format!(
                    "sign {sign}, b = {b}: slope {slope} decoded as {decoded} with probability {p}"
                )));
            }
            min_probability = min_probability.min(p);
            slopes_checked += 1;
        }
    }
    Ok(CalibrationRecord {
        convention: Convention { sign, zero: zero.unwrap_or(ZeroOutcome::Origin) },
        register_widths: CALIBRATION_WIDTHS.to_vec(),
        slopes_checked,
        min_probability,
    })
}

/// Tries both transform signs and returns the first that calibrates.
pub fn resolve_convention() -> Result<CalibrationRecord> {
    calibrate(TransformSign::Negative).or_else(|_| calibrate(TransformSign::Positive))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_matches_builtin_convention() {
        let record = resolve_convention().unwrap();
        assert_eq!(record.convention, Convention::CALIBRATED);
        assert_eq!(record.slopes_checked, 4 + 8 + 16);
        assert!(record.min_probability > 1.0 - 1e-12);
    }

    #[test]
    fn calibration_record_is_stable() {
        assert_eq!(calibrate(TransformSign::Negative).unwrap(), calibrate(TransformSign::Negative).unwrap());
    }

    #[test]
    fn wrong_sign_fails() {
        assert!(matches!(calibrate(TransformSign::Positive), Err(Error::Calibration(_))));
    }

    fn params(b: u32) -> QGradParams {
        QGradParams { n: 1, lipschitz: 1.0, rho: 1.0, p: 1.0, r: 1.0, r_prime: 1.0, beta: 1.0, b, c: b }
    }

    #[test]
    fn decode_zero_and_scale() {
        let c = Convention::CALIBRATED;
        assert_eq!(decode(&Measurement { outcomes: vec![0] }, &params(3), &c)[0], 0.0);
        assert_eq!(decode(&Measurement { outcomes: vec![2] }, &params(3), &c)[0], 0.5);
        // window wraps: outcome 7 of 8 is -1 step
        assert_eq!(decode(&Measurement { outcomes: vec![7] }, &params(3), &c)[0], -0.25);
        assert_eq!(decode(&Measurement { outcomes: vec![4] }, &params(3), &c)[0], -1.0);
    }

    #[test]
    fn half_grid_convention_is_the_literal_offset() {
        let c = Convention { sign: TransformSign::Negative, zero: ZeroOutcome::HalfGrid };
        for m in 0..8 {
            assert_eq!(c.centered(m, 8), m as i64 - 4);
        }
    }
}
