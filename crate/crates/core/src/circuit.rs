//! Gates, circuits, the random supremacy-circuit generator and the JSON circuit format.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    H,
    T,
    /// `X^{1/2}`
    SqrtX,
    /// `Y^{1/2}`
    SqrtY,
    X,
    Z,
    CZ,
    /// Qubit order is `[control, target]`.
    CNOT,
    /// Arbitrary 2x2 unitary carried in [`Gate::matrix`].
    Dense1,
    /// Arbitrary 4x4 unitary carried in [`Gate::matrix`]; index bit 0 is `qubits[0]`.
    Dense2,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::CZ | GateKind::CNOT | GateKind::Dense2 => 2,
            _ => 1,
        }
    }

    pub fn is_dense_payload(self) -> bool {
        matches!(self, GateKind::Dense1 | GateKind::Dense2)
    }

    /// Diagonal in the computational basis.
    pub fn is_diagonal(self) -> bool {
        matches!(self, GateKind::T | GateKind::Z | GateKind::CZ)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::T => "T",
            GateKind::SqrtX => "SqrtX",
            GateKind::SqrtY => "SqrtY",
            GateKind::X => "X",
            GateKind::Z => "Z",
            GateKind::CZ => "CZ",
            GateKind::CNOT => "CNOT",
            GateKind::Dense1 => "Dense1",
            GateKind::Dense2 => "Dense2",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub cycle: u32,
    /// Row-major payload of dense kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Complex64>>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: &[usize], cycle: u32) -> Self {
        let mut qubits = qubits.to_vec();
        if kind == GateKind::CZ {
            qubits.sort_unstable();
        }
        Gate { kind, qubits, cycle, matrix: None }
    }

    pub fn single(kind: GateKind, qubit: usize, cycle: u32) -> Self {
        Gate::new(kind, &[qubit], cycle)
    }

    pub fn dense(qubits: &[usize], matrix: Vec<Complex64>, cycle: u32) -> Self {
        let kind = if qubits.len() == 1 { GateKind::Dense1 } else { GateKind::Dense2 };
        Gate { kind, qubits: qubits.to_vec(), cycle, matrix: Some(matrix) }
    }

    pub fn acts_on(&self, qubit: usize) -> bool {
        self.qubits.contains(&qubit)
    }

    fn validate(&self, num_qubits: usize) -> std::result::Result<(), String> {
        let arity = self.kind.arity();
        if self.qubits.len() != arity {
            return Err(format!("{} expects {} qubit(s), got {}", self.kind, arity, self.qubits.len()));
        }
        for &q in &self.qubits {
            if q >= num_qubits {
                return Err(format!("qubit {q} out of range for {num_qubits} qubits"));
            }
        }
        if arity == 2 && self.qubits[0] == self.qubits[1] {
            return Err(format!("{} acts twice on qubit {}", self.kind, self.qubits[0]));
        }
        match (&self.matrix, self.kind.is_dense_payload()) {
            (None, true) => return Err(format!("{} requires a matrix payload", self.kind)),
            (Some(_), false) => return Err(format!("{} does not take a matrix payload", self.kind)),
            (Some(m), true) => {
                let dim = 1usize << arity;
                if m.len() != dim * dim {
                    return Err(format!("matrix has {} entries, expected {}", m.len(), dim * dim));
                }
                let dev = unitarity_deviation(m, dim);
                if dev >= 1e-12 {
                    return Err(format!("matrix is not unitary (max |U^dag U - I| = {dev:.3e})"));
                }
            }
            (None, false) => {}
        }
        Ok(())
    }
}

/// `max |U^dag U - I|` over entries of a row-major `dim x dim` matrix.
pub fn unitarity_deviation(m: &[Complex64], dim: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..dim {
                acc += m[r * dim + i].conj() * m[r * dim + j];
            }
            if i == j {
                acc -= 1.0;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Circuit {
    pub rows: usize,
    pub cols: usize,
    pub depth: u32,
    pub seed: u64,
    pub gates: Vec<Gate>,
}

impl Circuit {
    /// Empty circuit on a `rows x cols` grid.
    pub fn new(rows: usize, cols: usize) -> Self {
        Circuit { rows, cols, depth: 0, seed: 0, gates: Vec::new() }
    }

    /// Empty circuit on `n` qubits laid out as a single row.
    pub fn with_qubits(n: usize) -> Self {
        Circuit::new(1, n)
    }

    pub fn num_qubits(&self) -> usize {
        self.rows * self.cols
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.depth = self.depth.max(gate.cycle);
        self.gates.push(gate);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_qubits();
        let mut last_cycle = 0;
        for (i, g) in self.gates.iter().enumerate() {
            g.validate(n).map_err(|message| Error::Parse { context: format!("gates[{i}]"), message })?;
            if g.cycle < last_cycle {
                return Err(Error::Parse {
                    context: format!("gates[{i}].cycle"),
                    message: format!("cycle {} after cycle {last_cycle}", g.cycle),
                });
            }
            last_cycle = g.cycle;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("circuit serialization cannot fail")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut circuit: Circuit = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        for g in &mut circuit.gates {
            if g.kind == GateKind::CZ {
                g.qubits.sort_unstable();
            }
        }
        circuit.validate()?;
        Ok(circuit)
    }

    /// Gates actually simulated after dropping the cycle-0 Hadamard layer and/or the CZs of the
    /// final cycle.
    ///
    /// The Hadamard layer is only dropped when every qubit has an H at cycle 0 before any other
    /// gate; the state then starts uniform instead of at `|0...0>`.
    pub fn simulated(&self, skip: SkipOptions) -> Simulated {
        let n = self.num_qubits();
        let mut drop = vec![false; self.gates.len()];
        let mut init = InitialState::Basis0;
        if skip.initial_h && n > 0 {
            let mut seen = vec![false; n];
            let mut layer = Vec::new();
            for (i, g) in self.gates.iter().enumerate() {
                if g.cycle != 0 {
                    break;
                }
                let q = g.qubits[0];
                if g.kind == GateKind::H && !seen[q] {
                    seen[q] = true;
                    layer.push(i);
                } else if g.qubits.iter().any(|&q| !seen[q]) {
                    // another gate reaches a qubit before its H
                    break;
                }
            }
            if seen.iter().all(|&s| s) {
                for i in layer {
                    drop[i] = true;
                }
                init = InitialState::Uniform;
            }
        }
        if skip.final_cz {
            if let Some(last) = self.gates.iter().map(|g| g.cycle).max() {
                if last > 0 {
                    for (i, g) in self.gates.iter().enumerate() {
                        if g.cycle == last && g.kind == GateKind::CZ {
                            drop[i] = true;
                        }
                    }
                }
            }
        }
        let gates = self.gates.iter().zip(&drop).filter(|(_, &d)| !d).map(|(g, _)| g.clone()).collect();
        Simulated { num_qubits: n, gates, init }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipOptions {
    pub initial_h: bool,
    pub final_cz: bool,
}

impl SkipOptions {
    pub const NONE: SkipOptions = SkipOptions { initial_h: false, final_cz: false };
    pub const ALL: SkipOptions = SkipOptions { initial_h: true, final_cz: true };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// `|0...0>`
    Basis0,
    /// `2^{-n/2}` in every amplitude.
    Uniform,
}

#[derive(Debug, Clone)]
pub struct Simulated {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
    pub init: InitialState,
}

// ---------------------------------------------------------------------------------------------
// Supremacy circuits
// ---------------------------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Edge `(r, c) - (r, c + 1)`.
    Horizontal,
    /// Edge `(r, c) - (r + 1, c)`.
    Vertical,
}

/// The eight CZ layouts, in the order they are applied in cycles 1..=8 (then repeating).
///
/// Edges of each orientation are split into four classes. A horizontal edge `(r, c)-(r, c+1)`
/// belongs to class `(c + 2r) mod 4`, a vertical edge `(r, c)-(r+1, c)` to class `(r + 2c) mod 4`.
/// Within a row (column) the active pairs of one class are four sites apart and shifted by two
/// between neighbouring rows (columns), so no qubit takes part in two CZs of the same cycle and
/// every nearest-neighbour pair interacts exactly once per eight cycles.
pub const CZ_PATTERNS: [(Orientation, usize); 8] = [
    (Orientation::Vertical, 0),
    (Orientation::Vertical, 2),
    (Orientation::Vertical, 1),
    (Orientation::Vertical, 3),
    (Orientation::Horizontal, 1),
    (Orientation::Horizontal, 3),
    (Orientation::Horizontal, 2),
    (Orientation::Horizontal, 0),
];

/// CZ pairs `(a, b)` with `a < b` of pattern `index` (taken mod 8) on a row-major grid.
pub fn cz_pattern(rows: usize, cols: usize, index: usize) -> Vec<(usize, usize)> {
    let (orientation, class) = CZ_PATTERNS[index % 8];
    let mut pairs = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let q = r * cols + c;
            match orientation {
                Orientation::Horizontal => {
                    if c + 1 < cols && (c + 2 * r) % 4 == class {
                        pairs.push((q, q + 1));
                    }
                }
                Orientation::Vertical => {
                    if r + 1 < rows && (r + 2 * c) % 4 == class {
                        pairs.push((q, q + cols));
                    }
                }
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerateOptions {
    pub include_initial_h: bool,
    pub include_final_cz: bool,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions { include_initial_h: true, include_final_cz: true }
    }
}

const RANDOM_SINGLES: [GateKind; 3] = [GateKind::T, GateKind::SqrtX, GateKind::SqrtY];

/// Random low-depth supremacy circuit on a `rows x cols` grid.
///
/// `depth` counts clock cycles including the Hadamard cycle 0, so CZ layers occupy cycles
/// `1..depth`. A depth of 0 or 1 leaves only the Hadamard layer.
pub fn generate_supremacy(
    rows: usize,
    cols: usize,
    depth: u32,
    seed: u64,
    options: GenerateOptions,
) -> Result<Circuit> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!("grid must be at least 1x1, got {rows}x{cols}")));
    }
    let n = rows * cols;
    let mut rng = SplitMix64::new(seed);
    let mut circuit = Circuit { rows, cols, depth, seed, gates: Vec::new() };
    if options.include_initial_h {
        for q in 0..n {
            circuit.gates.push(Gate::single(GateKind::H, q, 0));
        }
    }

    let mut previous_single: Vec<Option<GateKind>> = vec![None; n];
    let mut in_cz_prev = vec![false; n];
    for cycle in 1..depth.max(1) {
        let pairs = cz_pattern(rows, cols, (cycle - 1) as usize);
        let mut in_cz = vec![false; n];
        for &(a, b) in &pairs {
            in_cz[a] = true;
            in_cz[b] = true;
        }
        let last_cycle = cycle + 1 == depth;
        if options.include_final_cz || !last_cycle {
            for &(a, b) in &pairs {
                circuit.gates.push(Gate::new(GateKind::CZ, &[a, b], cycle));
            }
        }
        for q in 0..n {
            if !(in_cz_prev[q] && !in_cz[q]) {
                continue;
            }
            let kind = match previous_single[q] {
                None => GateKind::T,
                Some(prev) => {
                    let allowed: Vec<GateKind> = RANDOM_SINGLES.iter().copied().filter(|&k| k != prev).collect();
                    allowed[rng.pick(allowed.len())]
                }
            };
            previous_single[q] = Some(kind);
            circuit.gates.push(Gate::single(kind, q, cycle));
        }
        in_cz_prev = in_cz;
    }
    Ok(circuit)
}

// ---------------------------------------------------------------------------------------------
// Stats
// ---------------------------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircuitStats {
    pub qubits: usize,
    pub depth: u32,
    pub total_gates: usize,
    /// Gates left after dropping the Hadamard layer and the final-cycle CZs.
    pub simulated_gates: usize,
    pub by_kind: BTreeMap<String, usize>,
    pub per_cycle: Vec<usize>,
}

pub fn stats(circuit: &Circuit) -> CircuitStats {
    let mut by_kind = BTreeMap::new();
    let cycles = circuit.gates.iter().map(|g| g.cycle as usize + 1).max().unwrap_or(0);
    let mut per_cycle = vec![0; cycles];
    for g in &circuit.gates {
        *by_kind.entry(g.kind.name().to_string()).or_insert(0) += 1;
        per_cycle[g.cycle as usize] += 1;
    }
    CircuitStats {
        qubits: circuit.num_qubits(),
        depth: circuit.depth,
        total_gates: circuit.gates.len(),
        simulated_gates: circuit.simulated(SkipOptions::ALL).gates.len(),
        by_kind,
        per_cycle,
    }
}
