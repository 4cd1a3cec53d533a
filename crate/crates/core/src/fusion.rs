//! Dense gate matrices, Kronecker-style embedding into k-qubit spaces, and fusion of gate
//! sequences into one `2^k x 2^k` unitary.
//!
//! Index convention: bit `i` of a matrix row/column index corresponds to `targets[i]`, so
//! `targets[0]` is the least-significant bit. The state update is `psi <- M psi`; fusing
//! `[g1, g2, ...]` yields `... * g2 * g1` (later gates multiply from the left).

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::circuit::{unitarity_deviation, Gate, GateKind};
use crate::error::{Error, Result};

/// Largest fused-gate width accepted anywhere in the pipeline.
pub const K_MAX_LIMIT: usize = 6;
pub const DEFAULT_K_MAX: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    targets: Vec<usize>,
    entries: Vec<Complex64>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl GateMatrix {
    pub fn new(targets: Vec<usize>, entries: Vec<Complex64>) -> Result<Self> {
        let dim = 1usize << targets.len();
        if entries.len() != dim * dim {
            return Err(Error::invalid(format!("{} entries for a {}-qubit matrix", entries.len(), targets.len())));
        }
        check_distinct(&targets)?;
        Ok(GateMatrix { targets, entries })
    }

    pub fn identity(targets: Vec<usize>) -> Self {
        let dim = 1usize << targets.len();
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        GateMatrix { targets, entries }
    }

    pub fn k(&self) -> usize {
        self.targets.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.targets.len()
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [Complex64] {
        &mut self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim() + col]
    }

    pub fn with_targets(mut self, targets: Vec<usize>) -> Result<Self> {
        if targets.len() != self.targets.len() {
            return Err(Error::invalid("target count does not match matrix size"));
        }
        check_distinct(&targets)?;
        self.targets = targets;
        Ok(self)
    }

    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.entries, self.dim())
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_deviation() < 1e-12
    }

    /// `self * rhs`; both must have the same targets.
    pub fn matmul(&self, rhs: &GateMatrix) -> GateMatrix {
        assert_eq!(self.targets, rhs.targets, "matmul over different target lists");
        let dim = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for k in 0..dim {
                let a = self.entries[i * dim + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..dim {
                    out[i * dim + j] += a * rhs.entries[k * dim + j];
                }
            }
        }
        GateMatrix { targets: self.targets.clone(), entries: out }
    }

    pub fn max_abs_diff(&self, other: &GateMatrix) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Same operator with its index bits reordered so that bit `i` refers to `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<GateMatrix> {
        let k = self.k();
        if order.len() != k {
            return Err(Error::invalid("permutation length does not match matrix size"));
        }
        // perm[i] = old bit position of new bit i
        let mut perm = Vec::with_capacity(k);
        for t in order {
            match self.targets.iter().position(|x| x == t) {
                Some(p) => perm.push(p),
                None => return Err(Error::invalid(format!("target {t} not acted on by matrix"))),
            }
        }
        let remap = |y: usize| -> usize {
            let mut x = 0;
            for (i, &p) in perm.iter().enumerate() {
                x |= ((y >> i) & 1) << p;
            }
            x
        };
        let dim = self.dim();
        let map: Vec<usize> = (0..dim).map(remap).collect();
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for col in 0..dim {
                entries[r * dim + col] = self.entries[map[r] * dim + map[col]];
            }
        }
        Ok(GateMatrix { targets: order.to_vec(), entries })
    }

    /// The same operator with ascending targets.
    pub fn sorted(&self) -> GateMatrix {
        let mut order = self.targets.clone();
        order.sort_unstable();
        self.permuted(&order).expect("sorting keeps the same targets")
    }
}

fn check_distinct(targets: &[usize]) -> Result<()> {
    for (i, a) in targets.iter().enumerate() {
        if targets[..i].contains(a) {
            return Err(Error::invalid(format!("target {a} listed twice")));
        }
    }
    Ok(())
}

/// Matrix of a named gate kind on positions `[0]` or `[0, 1]`.
pub fn named_matrix(kind: GateKind) -> Result<GateMatrix> {
    let h = FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let (targets, entries) = match kind {
        GateKind::H => (vec![0], vec![c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]),
        GateKind::T => (vec![0], vec![o, z, z, Complex64::from_polar(1.0, FRAC_PI_4)]),
        GateKind::SqrtX => (vec![0], vec![c(0.5, 0.5), c(0.5, -0.5), c(0.5, -0.5), c(0.5, 0.5)]),
        GateKind::SqrtY => (vec![0], vec![c(0.5, 0.5), c(-0.5, -0.5), c(0.5, 0.5), c(0.5, 0.5)]),
        GateKind::X => (vec![0], vec![z, o, o, z]),
        GateKind::Z => (vec![0], vec![o, z, z, -o]),
        GateKind::CZ => {
            let mut m = GateMatrix::identity(vec![0, 1]);
            m.entries[15] = -o;
            return Ok(m);
        }
        GateKind::CNOT => {
            // bit 0 = control, bit 1 = target: swaps |c=1,t=0> (1) and |c=1,t=1> (3)
            let mut e = vec![z; 16];
            e[0] = o;
            e[4 + 3] = o;
            e[2 * 4 + 2] = o;
            e[3 * 4 + 1] = o;
            (vec![0, 1], e)
        }
        GateKind::Dense1 | GateKind::Dense2 => {
            return Err(Error::invalid(format!("{kind} has no fixed matrix")));
        }
    };
    Ok(GateMatrix { targets, entries })
}

/// Matrix of a circuit gate, targeting the gate's own qubit ids.
pub fn gate_matrix(gate: &Gate) -> Result<GateMatrix> {
    let m = if gate.kind.is_dense_payload() {
        let payload = gate.matrix.as_ref().ok_or_else(|| Error::invalid(format!("{} without payload", gate.kind)))?;
        GateMatrix::new((0..gate.kind.arity()).collect(), payload.clone())?
    } else {
        named_matrix(gate.kind)?
    };
    m.with_targets(gate.qubits.clone())
}

/// `2^k x 2^k` operator acting as `g` on bit `positions[i]` (for `g`'s index bit `i`) and as
/// identity on all other bits.
pub fn embed(g: &GateMatrix, positions: &[usize], k: usize) -> Result<GateMatrix> {
    if positions.len() != g.k() {
        return Err(Error::invalid(format!("{} positions for a {}-qubit gate", positions.len(), g.k())));
    }
    check_distinct(positions)?;
    if let Some(&p) = positions.iter().find(|&&p| p >= k) {
        return Err(Error::invalid(format!("position {p} outside a {k}-qubit space")));
    }
    let mask: usize = positions.iter().map(|&p| 1usize << p).sum();
    let gather = |x: usize| -> usize { positions.iter().enumerate().map(|(i, &p)| ((x >> p) & 1) << i).sum() };
    let dim = 1usize << k;
    let gdim = g.dim();
    let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        let gr = gather(r);
        for col in 0..dim {
            if r & !mask == col & !mask {
                entries[r * dim + col] = g.entries[gr * gdim + gather(col)];
            }
        }
    }
    Ok(GateMatrix { targets: (0..k).collect(), entries })
}

/// Fuses `gates` (application order) into one matrix over the sorted `support`.
pub fn fuse(gates: &[Gate], support: &[usize]) -> Result<GateMatrix> {
    let mut support = support.to_vec();
    support.sort_unstable();
    check_distinct(&support)?;
    let k = support.len();
    if k > K_MAX_LIMIT {
        return Err(Error::invalid(format!("cannot fuse onto {k} qubits (limit {K_MAX_LIMIT})")));
    }
    let mut acc = GateMatrix::identity((0..k).collect());
    for gate in gates {
        let g = gate_matrix(gate)?;
        let mut positions = Vec::with_capacity(g.k());
        for q in g.targets() {
            match support.iter().position(|s| s == q) {
                Some(p) => positions.push(p),
                None => return Err(Error::invalid(format!("gate on qubit {q} outside the fused support"))),
            }
        }
        let local = GateMatrix { targets: (0..g.k()).collect(), entries: g.entries };
        acc = embed(&local, &positions, k)?.matmul(&acc);
    }
    acc.targets = support;
    Ok(acc)
}

/// Real-pair tables for the two-FMA complex update:
/// `(v_R, v_I) += (v_R * m_R, v_I * m_R)` then `(v_R, v_I) += (v_I * -m_I, v_R * m_I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitMatrix {
    /// `(m_R, m_R)` per entry, row-major.
    pub rr: Vec<[f64; 2]>,
    /// `(-m_I, m_I)` per entry, row-major.
    pub neg_imag_imag: Vec<[f64; 2]>,
}

impl SplitMatrix {
    pub fn recombine(&self) -> Vec<Complex64> {
        self.rr.iter().zip(&self.neg_imag_imag).map(|(r, i)| Complex64::new(r[0], i[1])).collect()
    }
}

pub fn split_real_imag(g: &GateMatrix) -> SplitMatrix {
    SplitMatrix {
        rr: g.entries.iter().map(|m| [m.re, m.re]).collect(),
        neg_imag_imag: g.entries.iter().map(|m| [-m.im, m.im]).collect(),
    }
}

/// Haar-like random unitary on `targets`: Gram-Schmidt over complex Gaussian columns.
pub fn random_unitary<R: Rng + ?Sized>(targets: Vec<usize>, rng: &mut R) -> GateMatrix {
    let dim = 1usize << targets.len();
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| (0..dim).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect())
        .collect();
    for j in 0..dim {
        for i in 0..j {
            let (done, rest) = cols.split_at_mut(j);
            let proj: Complex64 = done[i].iter().zip(&rest[0]).map(|(a, b)| a.conj() * b).sum();
            for (x, a) in rest[0].iter_mut().zip(&done[i]) {
                *x -= proj * a;
            }
        }
        let norm = cols[j].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in &mut cols[j] {
            *x /= norm;
        }
    }
    let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (j, col) in cols.iter().enumerate() {
        for (i, x) in col.iter().enumerate() {
            entries[i * dim + j] = *x;
        }
    }
    GateMatrix { targets, entries }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub gates: Vec<Gate>,
    pub support: Vec<usize>,
    pub fused: Option<GateMatrix>,
}

impl Cluster {
    pub fn new(gates: Vec<Gate>) -> Self {
        let mut support: Vec<usize> = gates.iter().flat_map(|g| g.qubits.iter().copied()).collect();
        support.sort_unstable();
        support.dedup();
        Cluster { gates, support, fused: None }
    }

    pub fn fuse(&mut self) -> Result<&GateMatrix> {
        let m = fuse(&self.gates, &self.support)?;
        Ok(self.fused.insert(m))
    }
}
