//! Statevector simulation of the quantum zeroth-order gradient estimator.
//!
//! The circuit prepares `n` coordinate registers of `b` qubits in uniform
//! superposition, writes a fixed-point evaluation of the rescaled difference
//! quotient `F(u)` into a `c`-qubit register, kicks it back as a phase through
//! a Fourier-state ancilla, uncomputes, and applies an inverse QFT on each
//! coordinate register. Measuring the registers gives the gradient.
//!
//! Because oracle, kickback and uncompute together act as the diagonal phase
//! `exp(2 pi i F~(u))`, [`build_phase_state`] writes those amplitudes directly.
//! [`naive_circuit_state`] simulates every register explicitly and exists to
//! check the shortcut on small instances.

mod calibration;
mod circuit;
mod state;

pub use calibration::{
    calibrate, decode, resolve_convention, CalibrationRecord, Convention, TransformSign, ZeroOutcome,
};
pub use circuit::{naive_circuit_state, NaiveCircuit, MAX_NAIVE_QUBITS};
pub use state::{build_phase_state, inverse_qft_all, measure, Measurement, PhaseState};

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{sample_linf_ball, Point};
use crate::losses::LossOracle;

/// Default cap on the number of simulated amplitudes, 2^26.
pub const DEFAULT_MEMORY_GUARD: u64 = 1 << 26;

/// Circuit-level uses of the quantum oracle per gradient estimate: two inside
/// `Q_F` and two inside its inverse.
pub const QUANTUM_QUERIES_PER_ESTIMATE: u64 = 4;

/// Values of `F * 2^c` closer than this (in units of the last phase bit) to an
/// integer are treated as that integer before truncation.
const FIXED_POINT_SNAP: f64 = 1e-7;

/// All parameters of one run of the estimator circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QGradParams {
    pub n: usize,
    /// Lipschitz constant G used for scaling and decoding.
    pub lipschitz: f64,
    pub rho: f64,
    pub p: f64,
    /// Sampling radius of z around the played point.
    pub r: f64,
    /// Half-extent scale of the query grid around z.
    pub r_prime: f64,
    /// Smoothness surrogate `n G / (p r)`.
    pub beta: f64,
    /// Qubits per coordinate register.
    pub b: u32,
    /// Fractional bits of the phase register.
    pub c: u32,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_guard(n: usize, b: u32, memory_guard: u64) -> Result<()> {
    let bits = b as u64 * n as u64;
    if bits >= 63 || (1u64 << bits) > memory_guard {
        return Err(Error::MemoryGuard { b, n, limit: memory_guard });
    }
    Ok(())
}

impl QGradParams {
    /// Derives `beta`, `b` and `c` from the schedule values, rounding the
    /// register widths up to integers (at least 1).
    pub fn derive(
        n: usize,
        lipschitz: f64,
        rho: f64,
        p: f64,
        r: f64,
        r_prime: f64,
        memory_guard: u64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        check_positive("G", lipschitz)?;
        check_positive("rho", rho)?;
        check_positive("p", p)?;
        check_positive("r", r)?;
        check_positive("r'", r_prime)?;
        if rho > 1.0 || p > 1.0 {
            return Err(Error::InvalidParameter(format!("rho and p must be <= 1, got {rho}, {p}")));
        }
        let beta = n as f64 * lipschitz / (p * r);
        let mut params = QGradParams { n, lipschitz, rho, p, r, r_prime, beta, b: 1, c: 1 };
        let b_exact = params.b_exact();
        if !b_exact.is_finite() {
            return Err(Error::InvalidParameter(format!("register width is not finite ({b_exact})")));
        }
        params.b = b_exact.ceil().clamp(1.0, 63.0) as u32;
        check_guard(n, params.b, memory_guard)?;
        params.c = params.c_for(params.b).ceil().clamp(1.0, 52.0) as u32;
        Ok(params)
    }

    /// Replaces the register widths, e.g. for calibration runs at fixed size.
    pub fn with_registers(mut self, b: u32, c: u32, memory_guard: u64) -> Result<Self> {
        if b == 0 || c == 0 || c > 52 {
            return Err(Error::InvalidParameter(format!("register widths must satisfy b >= 1, 1 <= c <= 52, got b = {b}, c = {c}")));
        }
        check_guard(self.n, b, memory_guard)?;
        self.b = b;
        self.c = c;
        Ok(self)
    }

    /// `log2(G rho / (4 pi n^2 beta r'))` before rounding.
    pub fn b_exact(&self) -> f64 {
        let n = self.n as f64;
        (self.lipschitz * self.rho / (4.0 * std::f64::consts::PI * n * n * self.beta * self.r_prime)).log2()
    }

    /// `log2(4 G / (2^b n beta r')) - 1` for the given integer `b`.
    pub fn c_for(&self, b: u32) -> f64 {
        let n = self.n as f64;
        (4.0 * self.lipschitz / ((b as f64).exp2() * n * self.beta * self.r_prime)).log2() - 1.0
    }

    /// Points per axis, `2^b`.
    pub fn grid(&self) -> usize {
        1usize << self.b
    }

    pub fn amplitudes(&self) -> usize {
        1usize << (self.b as usize * self.n)
    }

    /// The query point for grid index `u`: `z + (r'/2^b)(u - 2^(b-1))`.
    pub fn query_point(&self, z: &[f64], u: &[usize]) -> Point {
        let grid = self.grid() as f64;
        let half = grid / 2.0;
        let step = self.r_prime / grid;
        Point::new(z.iter().zip(u).map(|(zi, &ui)| zi + step * (ui as f64 - half)).collect())
    }

    /// Gradient error threshold `8 pi n^3 (n/rho + 1) beta r' / rho` that the
    /// estimate stays within (in L1) with probability at least `1 - rho` on
    /// `beta`-smooth losses.
    pub fn lemma1_bound(&self) -> f64 {
        let n = self.n as f64;
        8.0 * std::f64::consts::PI * n.powi(3) * (n / self.rho + 1.0) * self.beta * self.r_prime / self.rho
    }

    /// `F(u)` given a cached `f(z)`.
    pub(crate) fn scaled_difference(&self, f_shift: f64, f_z: f64) -> f64 {
        self.grid() as f64 / (2.0 * self.lipschitz * self.r_prime) * (f_shift - f_z)
    }
}

/// Convenience wrapper around [`QGradParams::derive`].
pub fn derive_params(
    n: usize,
    lipschitz: f64,
    rho: f64,
    p: f64,
    r: f64,
    r_prime: f64,
    memory_guard: u64,
) -> Result<QGradParams> {
    QGradParams::derive(n, lipschitz, rho, p, r, r_prime, memory_guard)
}

/// The value `F(u)` the quantum oracle computes for grid index `u`.
pub fn oracle_f(f: &LossOracle, z: &[f64], params: &QGradParams, u: &[usize]) -> Result<f64> {
    if u.len() != params.n || z.len() != params.n {
        return Err(Error::DimensionMismatch { expected: params.n, found: u.len().max(z.len()) });
    }
    let f_z = f.simulate(z)?;
    let f_shift = f.simulate(&params.query_point(z, u))?;
    Ok(params.scaled_difference(f_shift, f_z))
}

/// The `c`-bit register contents for `F`: `floor(F 2^c mod 2^c)`.
pub fn fixed_point_register(value: f64, c: u32) -> u64 {
    let modulus = (c as f64).exp2();
    let mut y = (value * modulus).rem_euclid(modulus);
    let nearest = y.round();
    if (y - nearest).abs() < FIXED_POINT_SNAP {
        y = nearest;
    }
    let k = y.floor();
    if k >= modulus {
        0
    } else {
        k as u64
    }
}

/// `F~`, the phase register read as a fraction in `[0, 1)`.
pub fn fixed_point_phase(value: f64, c: u32) -> f64 {
    fixed_point_register(value, c) as f64 / (c as f64).exp2()
}

/// Result of one quantum gradient estimate.
#[derive(Debug, Clone)]
pub struct QuantumEstimate {
    pub z: Point,
    pub grad: Point,
    pub measurement: Measurement,
    pub params: QGradParams,
    /// Circuit-level oracle uses (always 4).
    pub queries: u64,
    /// Classical evaluations spent by the simulator, `2^(b n) + 1`.
    pub sim_evaluations: u64,
}

/// Player-side settings of the quantum estimator.
#[derive(Debug, Clone, Copy)]
pub struct QuantumEstimator {
    pub lipschitz: f64,
    pub rho: f64,
    pub p: f64,
    pub memory_guard: u64,
    pub convention: Convention,
}

impl QuantumEstimator {
    pub fn new(lipschitz: f64, rho: f64, p: f64) -> Self {
        QuantumEstimator { lipschitz, rho, p, memory_guard: DEFAULT_MEMORY_GUARD, convention: Convention::CALIBRATED }
    }

    pub fn params(&self, n: usize, r: f64, r_prime: f64) -> Result<QGradParams> {
        QGradParams::derive(n, self.lipschitz, self.rho, self.p, r, r_prime, self.memory_guard)
    }

    pub fn estimate<R: Rng + ?Sized>(
        &self,
        f: &mut LossOracle,
        x: &[f64],
        r: f64,
        r_prime: f64,
        rng: &mut R,
    ) -> Result<QuantumEstimate> {
        let params = self.params(x.len(), r, r_prime)?;
        self.estimate_with(f, x, &params, rng)
    }

    /// Runs the circuit with explicit parameters (register widths may have
    /// been overridden).
    pub fn estimate_with<R: Rng + ?Sized>(
        &self,
        f: &mut LossOracle,
        x: &[f64],
        params: &QGradParams,
        rng: &mut R,
    ) -> Result<QuantumEstimate> {
        if x.len() != params.n {
            return Err(Error::DimensionMismatch { expected: params.n, found: x.len() });
        }
        let z = sample_linf_ball(x, params.r, rng)?;
        let state = build_phase_state(f, &z, params)?;
        let state = inverse_qft_all(&state, self.convention.sign);
        let measurement = measure(&state, rng);
        let grad = decode(&measurement, params, &self.convention);
        f.charge_quantum(QUANTUM_QUERIES_PER_ESTIMATE);
        Ok(QuantumEstimate {
            z,
            grad,
            measurement,
            params: *params,
            queries: QUANTUM_QUERIES_PER_ESTIMATE,
            sim_evaluations: params.amplitudes() as u64 + 1,
        })
    }
}

/// One quantum gradient estimate at `x`, scaling by the oracle's own G.
pub fn estimate_gradient_q<R: Rng + ?Sized>(
    f: &mut LossOracle,
    x: &[f64],
    r: f64,
    r_prime: f64,
    rho: f64,
    p: f64,
    rng: &mut R,
) -> Result<QuantumEstimate> {
    QuantumEstimator::new(f.lipschitz(), rho, p).estimate(f, x, r, r_prime, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FeasibleSet;
    use crate::losses::{make_family, Domain, Loss};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example_params() -> QGradParams {
        let r_prime = 0.001 / (8.0 * std::f64::consts::PI * 512f64.sqrt() * 2.1);
        derive_params(2, 1.0, 0.1, 0.1, 0.5f64.sqrt(), r_prime, DEFAULT_MEMORY_GUARD).unwrap()
    }

    #[test]
    fn derive_matches_worked_example() {
        let p = example_params();
        assert!((p.beta - 28.2843).abs() < 1e-4, "beta = {}", p.beta);
        assert!((p.r_prime - 8.3735e-7).abs() < 1e-10);
        // G rho / (4 pi n^2 beta r') = 2 n (n + rho) / rho = 84
        assert!((p.b_exact().exp2() - 84.0).abs() < 1e-9);
        assert_eq!(p.b, 7);
        assert_eq!(p.c, 9);
        assert_eq!(p.amplitudes(), 1 << 14);
    }

    #[test]
    fn memory_guard_reports_b() {
        let r_prime = 0.001 / (8.0 * std::f64::consts::PI * 512f64.sqrt() * 2.1);
        let err = derive_params(2, 1.0, 0.1, 0.1, 0.5f64.sqrt(), r_prime, 1 << 10).unwrap_err();
        assert!(matches!(err, Error::MemoryGuard { b: 7, n: 2, .. }));
        assert!(err.to_string().contains("b = 7"));
    }

    #[test]
    fn derive_rejects_bad_inputs() {
        assert!(derive_params(1, 1.0, 1.5, 0.1, 1.0, 1e-3, DEFAULT_MEMORY_GUARD).is_err());
        assert!(derive_params(1, 1.0, 0.1, 0.1, 0.0, 1e-3, DEFAULT_MEMORY_GUARD).is_err());
        assert!(derive_params(0, 1.0, 0.1, 0.1, 1.0, 1e-3, DEFAULT_MEMORY_GUARD).is_err());
    }

    fn domain(n: usize) -> Domain {
        Domain::new(FeasibleSet::cube(n, -1.0, 1.0).unwrap(), 1.0)
    }

    #[test]
    fn oracle_f_at_center_is_zero() {
        let f = make_family(Loss::Quadratic { curvature: 1.0, center: Point::new(vec![0.3, -0.2]) }, domain(2)).unwrap();
        let params = example_params();
        let half = params.grid() / 2;
        assert_eq!(oracle_f(&f, &[0.1, 0.2], &params, &[half, half]).unwrap(), 0.0);
    }

    #[test]
    fn oracle_f_linear_cancels_scale() {
        let g = [0.25, -0.5];
        let f = make_family(Loss::Linear { slope: Point::new(g.to_vec()), offset: 0.0 }, domain(2)).unwrap();
        let params = example_params();
        let half = (params.grid() / 2) as f64;
        for u in [[0usize, 5], [100, 64], [127, 1]] {
            let expected = (g[0] * (u[0] as f64 - half) + g[1] * (u[1] as f64 - half)) / 2.0;
            let got = oracle_f(&f, &[0.1, 0.2], &params, &u).unwrap();
            assert!((got - expected).abs() < 1e-6 * expected.abs().max(1.0), "{got} vs {expected}");
        }
    }

    #[test]
    fn oracle_f_quadratic_arithmetic() {
        // n = 1, f = x^2 / 2, z = 0, b = 2, r' = 0.1, G = 1: F(3) = (4 / 0.2) * 0.5 * (0.025)^2
        let f = make_family(Loss::Quadratic { curvature: 1.0, center: Point::zeros(1) }, domain(1)).unwrap();
        let params = derive_params(1, 1.0, 0.5, 0.5, 1.0, 0.1, DEFAULT_MEMORY_GUARD)
            .unwrap()
            .with_registers(2, 4, DEFAULT_MEMORY_GUARD)
            .unwrap();
        let v = oracle_f(&f, &[0.0], &params, &[3]).unwrap();
        assert!((v - 0.00625).abs() < 1e-15, "{v}");
    }

    #[test]
    fn fixed_point_truncates_mod_one() {
        assert_eq!(fixed_point_register(0.3, 3), 2); // 2.4 -> 2
        assert_eq!(fixed_point_register(-0.25, 2), 3); // 0.75 * 4
        assert_eq!(fixed_point_register(1.5, 1), 1);
        assert_eq!(fixed_point_register(0.125 - 1e-15, 3), 1); // snapped
        assert_eq!(fixed_point_phase(2.75, 2), 0.75);
    }

    #[test]
    fn estimate_reports_four_queries() {
        let mut f = make_family(Loss::Quadratic { curvature: 0.5, center: Point::new(vec![0.2, 0.1]) }, domain(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let est = estimate_gradient_q(&mut f, &[0.0, 0.0], 0.1, 1e-4, 0.2, 0.2, &mut rng).unwrap();
        assert_eq!(est.queries, 4);
        assert_eq!(f.queries().quantum, 4);
        assert_eq!(f.queries().classical, 0);
        assert_eq!(est.sim_evaluations, est.params.amplitudes() as u64 + 1);
    }

    #[test]
    fn error_threshold_at_worked_example_is_g() {
        let p = example_params();
        assert!((p.lemma1_bound() - 1.0).abs() < 1e-9, "{}", p.lemma1_bound());
        let doubled = QGradParams { r_prime: 2.0 * p.r_prime, ..p };
        assert!((doubled.lemma1_bound() - 2.0 * p.lemma1_bound()).abs() < 1e-12);
    }

    #[test]
    fn off_grid_tail_within_phase_estimation_bound() {
        // linear loss, slope between grid points; exact outcome law and a sampled check
        let (b, n_grid) = (5u32, 32.0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for slope in [0.0123, 0.3, -0.47, 0.777] {
            let f = make_family(Loss::Linear { slope: Point::new(vec![slope]), offset: 0.0 }, domain(1)).unwrap();
            let params = derive_params(1, 1.0, 0.5, 0.5, 0.5, 0.5, DEFAULT_MEMORY_GUARD)
                .unwrap()
                .with_registers(b, b + 12, DEFAULT_MEMORY_GUARD)
                .unwrap();
            let state = inverse_qft_all(&build_phase_state(&f, &[0.1], &params).unwrap(), TransformSign::Negative);
            let probs = state.probabilities();
            let target = n_grid * slope / 2.0;
            let miss = |m: usize| (target - Convention::CALIBRATED.centered(m, 32) as f64).abs();
            for e in [2.0, 4.0, 8.0] {
                let bound = 1.0 / (2.0 * (e - 1.0));
                let exact: f64 = (0..32).filter(|&m| miss(m) > e).map(|m| probs[m]).sum();
                assert!(exact <= bound, "slope {slope}, e {e}: {exact} > {bound}");
                let draws = 10_000;
                let hits = (0..draws).filter(|_| miss(measure(&state, &mut rng).outcomes[0]) > e).count();
                let freq = hits as f64 / draws as f64;
                let sigma = (bound * (1.0 - bound) / draws as f64).sqrt();
                assert!(freq <= bound + 3.0 * sigma, "slope {slope}, e {e}: sampled {freq}");
            }
        }
    }

    #[test]
    fn large_error_is_rare_on_smooth_losses() {
        // n = 1, rho = p = 0.1, first-round schedule values
        let (rho, p) = (0.1, 0.1);
        let r_prime = rho * rho * p / (8.0 * std::f64::consts::PI * 1.1);
        let set = FeasibleSet::cube(1, 0.0, 1.0).unwrap();
        let f = make_family(Loss::Quadratic { curvature: 0.5, center: Point::new(vec![0.4]) }, Domain::new(set, 1.0)).unwrap();
        let est = QuantumEstimator::new(1.0, rho, p);
        let params = est.params(1, 1.0, r_prime).unwrap();
        assert_eq!((params.b, params.c), (5, 8));
        let bound = params.lemma1_bound();
        let trials = 2000;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut misses = 0;
        for _ in 0..trials {
            let x = [rng.gen_range(0.0..1.0)];
            let mut g = f.reset();
            let e = est.estimate_with(&mut g, &x, &params, &mut rng).unwrap();
            let truth = f.exact_gradient(&e.z).unwrap();
            if (truth[0] - e.grad[0]).abs() > bound {
                misses += 1;
            }
        }
        let rate = misses as f64 / trials as f64;
        assert!(rate <= rho + 3.0 * (rho * (1.0 - rho) / trials as f64).sqrt(), "{rate}");
    }

    #[test]
    fn estimate_is_deterministic_per_seed() {
        let f = make_family(Loss::Quadratic { curvature: 0.5, center: Point::new(vec![0.2, 0.1]) }, domain(2)).unwrap();
        let run = |seed| {
            let mut g = f.reset();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = estimate_gradient_q(&mut g, &[0.0, 0.0], 0.1, 1e-4, 0.2, 0.2, &mut rng).unwrap();
            (e.z, e.measurement, e.grad)
        };
        assert_eq!(run(4), run(4));
    }
}
