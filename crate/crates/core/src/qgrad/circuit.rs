//! Gate-level reference simulation with explicit ancilla registers.
//!
//! Register layout, most significant first: the `n` coordinate registers
//! (`b` qubits each), the `c`-qubit oracle register, the `c`-qubit kickback
//! register. Only meant for tiny instances.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use super::{fixed_point_register, PhaseState, QGradParams};
use crate::error::{Error, Result};
use crate::losses::LossOracle;

pub const MAX_NAIVE_QUBITS: usize = 20;

#[derive(Debug, Clone)]
pub struct NaiveCircuit {
    /// Reduced state of the coordinate registers.
    pub state: PhaseState,
    /// Norm of the part of the final state not of the form
    /// `|psi> |0> |y0>`; zero when the ancillas disentangle.
    pub ancilla_residual: f64,
}

/// Fourier state of the kickback register; adding `s` mod `2^c` multiplies it
/// by `exp(2 pi i s / 2^c)`.
fn kickback_state(c: u32) -> Vec<Complex64> {
    let dim = 1usize << c;
    let norm = (dim as f64).sqrt().recip();
    (0..dim).map(|a| Complex64::from_polar(norm, -2.0 * PI * a as f64 / dim as f64)).collect()
}

fn hadamard(state: &mut [Complex64], bit: usize) {
    let mask = 1usize << bit;
    for i in 0..state.len() {
        if i & mask == 0 {
            let (a, b) = (state[i], state[i | mask]);
            state[i] = (a + b) * FRAC_1_SQRT_2;
            state[i | mask] = (a - b) * FRAC_1_SQRT_2;
        }
    }
}

/// Applies the basis permutation `i -> map(i)`.
fn permute(state: &[Complex64], map: impl Fn(usize) -> usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); state.len()];
    for (i, a) in state.iter().enumerate() {
        out[map(i)] += a;
    }
    out
}

/// Runs Hadamards, `Q_F`, add-mod-`2^c` into the kickback register, and
/// `Q_F^-1` on the full register set, then reads off the coordinate state.
pub fn naive_circuit_state(f: &LossOracle, z: &[f64], params: &QGradParams) -> Result<NaiveCircuit> {
    let (n, b, c) = (params.n, params.b as usize, params.c as usize);
    let qubits = n * b + 2 * c;
    if qubits > MAX_NAIVE_QUBITS {
        return Err(Error::ScaleGuard { qubits, max: MAX_NAIVE_QUBITS });
    }
    if z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: z.len() });
    }
    let coords = 1usize << (n * b);
    let anc = 1usize << c;
    let mask = anc - 1;

    // register values the oracle writes, one per coordinate basis state
    let shape = PhaseState { n, b: params.b, amplitudes: Vec::new() };
    let f_z = f.simulate(z)?;
    let written: Vec<usize> = (0..coords)
        .map(|u| {
            let value = f.simulate(&params.query_point(z, &shape.unflatten(u)))?;
            Ok(fixed_point_register(params.scaled_difference(value, f_z), params.c) as usize)
        })
        .collect::<Result<_>>()?;

    let y0 = kickback_state(params.c);
    let mut state = vec![Complex64::new(0.0, 0.0); 1usize << qubits];
    for (a, amp) in y0.iter().enumerate() {
        state[a] = *amp;
    }
    for bit in 2 * c..qubits {
        hadamard(&mut state, bit);
    }
    let split = |i: usize| (i >> (2 * c), (i >> c) & mask, i & mask);
    let join = |u: usize, q: usize, a: usize| (u << (2 * c)) | (q << c) | a;
    // Q_F
    state = permute(&state, |i| {
        let (u, q, a) = split(i);
        join(u, (q + written[u]) & mask, a)
    });
    // kickback: a += q mod 2^c
    state = permute(&state, |i| {
        let (u, q, a) = split(i);
        join(u, q, (a + q) & mask)
    });
    // Q_F^-1
    state = permute(&state, |i| {
        let (u, q, a) = split(i);
        join(u, (q + anc - written[u]) & mask, a)
    });

    let amplitudes: Vec<Complex64> = (0..coords)
        .map(|u| (0..anc).map(|a| y0[a].conj() * state[join(u, 0, a)]).sum())
        .collect();
    let mut residual = 0.0;
    for (i, amp) in state.iter().enumerate() {
        let (u, q, a) = split(i);
        let expected = if q == 0 { amplitudes[u] * y0[a] } else { Complex64::new(0.0, 0.0) };
        residual += (amp - expected).norm_sqr();
    }
    Ok(NaiveCircuit {
        state: PhaseState { amplitudes, ..shape },
        ancilla_residual: residual.sqrt(),
    })
}
