//! Naive reference simulator. Operators are built entry by entry from the Kronecker definition
//! and applied as full matrix-vector products; nothing here is shared with [`crate::kernel`].

use num_complex::Complex64;

use crate::circuit::{Circuit, Gate, InitialState};
use crate::error::{Error, Result};
use crate::fusion::{gate_matrix, GateMatrix};

pub const MAX_OPERATOR_QUBITS: usize = 12;
pub const MAX_SIMULATION_QUBITS: usize = 10;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Nonzero `(row, col, value)` entries of the identity-padded embedding of `g`, where bit `i` of
/// `g`'s index lives on qubit `qubits[i]`: `<r|O|c> = delta(r, c off the qubits) * g[x(r)][x(c)]`.
fn operator_entries(g: &GateMatrix, qubits: &[usize], n: usize) -> Result<Vec<(usize, usize, Complex64)>> {
    if qubits.len() != g.k() {
        return Err(Error::invalid(format!("{} qubits for a {}-qubit matrix", qubits.len(), g.k())));
    }
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n || qubits[..i].contains(&q) {
            return Err(Error::invalid(format!("bad qubit {q} for a {n}-qubit operator")));
        }
    }
    let sub = |idx: usize| -> usize {
        let mut x = 0;
        for (i, &q) in qubits.iter().enumerate() {
            if idx & (1 << q) != 0 {
                x += 1 << i;
            }
        }
        x
    };
    let with_sub = |idx: usize, x: usize| -> usize {
        let mut out = idx;
        for (i, &q) in qubits.iter().enumerate() {
            if x & (1 << i) != 0 {
                out |= 1 << q;
            } else {
                out &= !(1 << q);
            }
        }
        out
    };
    let mut entries = Vec::new();
    for r in 0..1usize << n {
        for x in 0..g.dim() {
            let col = with_sub(r, x);
            let v = g.get(sub(r), x);
            if v != zero() {
                entries.push((r, col, v));
            }
        }
    }
    Ok(entries)
}

/// Dense row-major `2^n x 2^n` operator of `g` on `qubits` (bit `i` of `g` on `qubits[i]`).
pub fn full_operator(g: &GateMatrix, qubits: &[usize], n: usize) -> Result<Vec<Complex64>> {
    if n > MAX_OPERATOR_QUBITS {
        return Err(Error::invalid(format!("refusing a {n}-qubit dense operator (limit {MAX_OPERATOR_QUBITS})")));
    }
    let dim = 1usize << n;
    let mut op = vec![zero(); dim * dim];
    for (r, c, v) in operator_entries(g, qubits, n)? {
        op[r * dim + c] = v;
    }
    Ok(op)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: Vec<Complex64>,
}

impl DenseState {
    pub fn new(n: usize, init: InitialState) -> Result<Self> {
        if n > MAX_OPERATOR_QUBITS {
            return Err(Error::invalid(format!("refusing a {n}-qubit dense state")));
        }
        let dim = 1usize << n;
        let amps = match init {
            InitialState::Basis0 => {
                let mut v = vec![zero(); dim];
                v[0] = Complex64::new(1.0, 0.0);
                v
            }
            InitialState::Uniform => vec![Complex64::new(1.0 / (dim as f64).sqrt(), 0.0); dim],
        };
        Ok(DenseState { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Amplitudes indexed by `sum_q bit_q 2^q`.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn apply(&mut self, g: &GateMatrix, qubits: &[usize]) -> Result<()> {
        let mut out = vec![zero(); self.amps.len()];
        for (r, c, v) in operator_entries(g, qubits, self.n)? {
            out[r] += v * self.amps[c];
        }
        self.amps = out;
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        let m = gate_matrix(gate)?;
        let local = GateMatrix::new((0..m.k()).collect(), m.entries().to_vec())?;
        self.apply(&local, &gate.qubits)
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `-sum p ln p`.
    pub fn entropy(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).filter(|&p| p > 0.0).map(|p| -p * p.ln()).sum()
    }

    pub fn max_abs_diff(&self, other: &[Complex64]) -> f64 {
        self.amps.iter().zip(other).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// Applies `gates` one by one to a fresh `n`-qubit state.
pub fn simulate_gates(n: usize, gates: &[Gate], init: InitialState) -> Result<DenseState> {
    if n > MAX_SIMULATION_QUBITS {
        return Err(Error::invalid(format!("refusing to simulate {n} qubits densely (limit {MAX_SIMULATION_QUBITS})")));
    }
    let mut state = DenseState::new(n, init)?;
    for g in gates {
        state.apply_gate(g)?;
    }
    Ok(state)
}

/// Every gate of `circuit` applied to `|0...0>`.
pub fn simulate_dense(circuit: &Circuit) -> Result<DenseState> {
    simulate_gates(circuit.num_qubits(), &circuit.gates, InitialState::Basis0)
}
