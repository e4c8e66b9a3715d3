//! Classical two-point finite-difference gradient estimator.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{sample_linf_ball, Point};
use crate::losses::LossOracle;

/// Result of one classical gradient estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalEstimate {
    pub z: Point,
    pub grad: Point,
    /// Oracle queries spent, always `2n`.
    pub queries: u64,
}

/// `(f(z + r' e_j) - f(z - r' e_j)) / (2 r')`, two counted queries.
pub fn central_difference(f: &mut LossOracle, z: &[f64], r_prime: f64, j: usize) -> Result<f64> {
    if j >= z.len() {
        return Err(Error::DimensionMismatch { expected: z.len(), found: j + 1 });
    }
    if !(r_prime > 0.0 && r_prime.is_finite()) {
        return Err(Error::InvalidParameter(format!("r' must be positive and finite, got {r_prime}")));
    }
    let mut probe = z.to_vec();
    probe[j] = z[j] + r_prime;
    let plus = f.eval(&probe)?;
    probe[j] = z[j] - r_prime;
    let minus = f.eval(&probe)?;
    Ok((plus - minus) / (2.0 * r_prime))
}

/// Samples `z` uniformly in the L-infinity ball of radius `r` around `x` and
/// returns the central-difference gradient there. `f(z)` itself is never
/// queried.
pub fn estimate_gradient_c<R: Rng + ?Sized>(
    f: &mut LossOracle,
    x: &[f64],
    r: f64,
    r_prime: f64,
    rng: &mut R,
) -> Result<ClassicalEstimate> {
    let z = sample_linf_ball(x, r, rng)?;
    let grad = (0..x.len()).map(|j| central_difference(f, &z, r_prime, j)).collect::<Result<Vec<_>>>()?;
    Ok(ClassicalEstimate { z, grad: Point::new(grad), queries: 2 * x.len() as u64 })
}
