use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

use super::{fixed_point_phase, QGradParams, TransformSign};
use crate::error::{Error, Result};
use crate::losses::LossOracle;

/// Sweeps below this many amplitudes run on the calling thread.
const PARALLEL_THRESHOLD: usize = 1 << 12;

/// Joint state of the `n` coordinate registers. Index `(u_1, ..., u_n)` maps
/// to `sum_i u_i * 2^(b (n - i))`, i.e. row-major with `u_1` most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub n: usize,
    pub b: u32,
    pub amplitudes: Vec<Complex64>,
}

impl PhaseState {
    pub fn new(n: usize, b: u32, amplitudes: Vec<Complex64>) -> Result<Self> {
        let expected = 1usize << (b as usize * n);
        if amplitudes.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: amplitudes.len() });
        }
        Ok(PhaseState { n, b, amplitudes })
    }

    pub fn grid(&self) -> usize {
        1usize << self.b
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &PhaseState) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<self|other>|^2`, insensitive to global phase.
    pub fn fidelity(&self, other: &PhaseState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Splits a flat index into per-register outcomes.
    pub fn unflatten(&self, mut index: usize) -> Vec<usize> {
        let grid = self.grid();
        let mut u = vec![0; self.n];
        for slot in u.iter_mut().rev() {
            *slot = index % grid;
            index /= grid;
        }
        u
    }

    pub fn flatten(&self, u: &[usize]) -> usize {
        u.iter().fold(0, |acc, &ui| acc * self.grid() + ui)
    }
}

fn phase_amplitude(f: &LossOracle, z: &[f64], f_z: f64, params: &QGradParams, u: &[usize], norm: f64) -> Result<Complex64> {
    let value = f.simulate(&params.query_point(z, u))?;
    let phase = fixed_point_phase(params.scaled_difference(value, f_z), params.c);
    Ok(Complex64::from_polar(norm, 2.0 * PI * phase))
}

/// Amplitudes `2^(-b n / 2) exp(2 pi i F~(u))` after oracle, kickback and
/// uncompute.
pub fn build_phase_state(f: &LossOracle, z: &[f64], params: &QGradParams) -> Result<PhaseState> {
    if z.len() != params.n {
        return Err(Error::DimensionMismatch { expected: params.n, found: z.len() });
    }
    let f_z = f.simulate(z)?;
    let total = params.amplitudes();
    let norm = (total as f64).sqrt().recip();
    let shape = PhaseState { n: params.n, b: params.b, amplitudes: Vec::new() };
    let amp = |idx: usize| phase_amplitude(f, z, f_z, params, &shape.unflatten(idx), norm);
    let amplitudes = if total >= PARALLEL_THRESHOLD {
        (0..total).into_par_iter().map(amp).collect::<Result<Vec<_>>>()?
    } else {
        (0..total).map(amp).collect::<Result<Vec<_>>>()?
    };
    Ok(PhaseState { amplitudes, ..shape })
}

/// Applies the unitary `2^b`-point transform with kernel
/// `2^(-b/2) exp(sign 2 pi i m u / 2^b)` along every axis independently.
/// `TransformSign::Negative` is the usual inverse QFT.
pub fn inverse_qft_all(state: &PhaseState, sign: TransformSign) -> PhaseState {
    let grid = state.grid();
    let direction = match sign {
        TransformSign::Negative => FftDirection::Forward,
        TransformSign::Positive => FftDirection::Inverse,
    };
    let fft = FftPlanner::<f64>::new().plan_fft(grid, direction);
    let scale = (grid as f64).sqrt().recip();
    let mut out = state.amplitudes.clone();
    let mut line = vec![Complex64::new(0.0, 0.0); grid];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..state.n {
        let stride = grid.pow((state.n - 1 - axis) as u32);
        let block = stride * grid;
        for start in (0..out.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = out[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    out[base + k * stride] = v * scale;
                }
            }
        }
    }
    PhaseState { amplitudes: out, ..state.clone() }
}

/// Measured register contents `m_1, ..., m_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Measurement {
    pub outcomes: Vec<usize>,
}

/// Samples one outcome from the Born distribution by walking the cumulative
/// distribution in index order.
pub fn measure<R: Rng + ?Sized>(state: &PhaseState, rng: &mut R) -> Measurement {
    let probs = state.probabilities();
    let total: f64 = probs.iter().sum();
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = probs.len() - 1;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if acc > target {
            chosen = i;
            break;
        }
    }
    Measurement { outcomes: state.unflatten(chosen) }
}
