//! Compilation of a circuit into a [`SchedulePlan`].
//!
//! 1. Stage partitioning: gates are admitted into the current stage in program order as long as
//!    they only touch local qubits (or are diagonal gates on global qubits, when specialization is
//!    on). A gate blocks every later gate on its qubits. When nothing more can be admitted, a
//!    global-to-local swap starts a new stage.
//! 2. Clustering: the gates of each stage are grouped into clusters of at most `k_max` qubits.
//! 3. Swap-point adjustment: a stage's trailing cluster is moved past the swap when that lowers
//!    the total number of clusters.
//! 4. Mapping: per stage, the qubits used by the most clusters are placed at the lowest
//!    bit-locations.
//! 5. Fusion: each cluster becomes one matrix over its (sorted) bit-locations.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateKind, InitialState, SkipOptions};
use crate::error::{Error, Result};
use crate::fusion::{fuse, GateMatrix, DEFAULT_K_MAX, K_MAX_LIMIT};
use crate::kernel::{self, KernelConfig, StateSlice};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QubitMap {
    location_of: Vec<usize>,
    qubit_at: Vec<usize>,
}

impl QubitMap {
    pub fn identity(n: usize) -> Self {
        QubitMap { location_of: (0..n).collect(), qubit_at: (0..n).collect() }
    }

    /// Builds the map from `qubit_at[location]`.
    pub fn from_qubit_order(qubit_at: Vec<usize>) -> Result<Self> {
        let n = qubit_at.len();
        let mut location_of = vec![usize::MAX; n];
        for (loc, &q) in qubit_at.iter().enumerate() {
            if q >= n || location_of[q] != usize::MAX {
                return Err(Error::invalid("qubit order is not a permutation"));
            }
            location_of[q] = loc;
        }
        Ok(QubitMap { location_of, qubit_at })
    }

    pub fn num_qubits(&self) -> usize {
        self.qubit_at.len()
    }

    pub fn location(&self, qubit: usize) -> usize {
        self.location_of[qubit]
    }

    pub fn qubit_at(&self, location: usize) -> usize {
        self.qubit_at[location]
    }

    pub fn qubit_order(&self) -> &[usize] {
        &self.qubit_at
    }

    pub fn swap_locations(&mut self, a: usize, b: usize) {
        self.qubit_at.swap(a, b);
        self.location_of[self.qubit_at[a]] = a;
        self.location_of[self.qubit_at[b]] = b;
    }

    /// Physical index of the basis state whose bit `q` is the value of qubit `q`.
    pub fn physical_index(&self, logical: usize) -> usize {
        let mut out = 0;
        for (q, &loc) in self.location_of.iter().enumerate() {
            out |= ((logical >> q) & 1) << loc;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwapPolicy {
    /// Exchange the global qubits with the lowest-order local locations.
    Baseline,
    /// Greedy one-stage lookahead with pairwise exchange refinement.
    Search,
}

impl fmt::Display for SwapPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SwapPolicy::Baseline => "baseline",
            SwapPolicy::Search => "search",
        })
    }
}

impl FromStr for SwapPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(SwapPolicy::Baseline),
            "search" => Ok(SwapPolicy::Search),
            other => Err(Error::invalid(format!("unknown swap policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionOptions {
    /// Admit diagonal gates (and CNOT between globals) on global qubits.
    pub specialize: bool,
    /// Treat every single-qubit gate on a global qubit as dense, even a T.
    pub worst_case_dense: bool,
    pub policy: SwapPolicy,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        PartitionOptions { specialize: true, worst_case_dense: false, policy: SwapPolicy::Search }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    /// Gate indices per stage, ascending.
    pub stages: Vec<Vec<usize>>,
    /// Global qubits per stage, ascending.
    pub globals: Vec<Vec<usize>>,
}

impl Partition {
    pub fn swaps(&self) -> usize {
        self.stages.len() - 1
    }
}

fn admissible(gate: &Gate, global: &[bool], opts: &PartitionOptions) -> bool {
    let touches = gate.qubits.iter().filter(|&&q| global[q]).count();
    if touches == 0 {
        return true;
    }
    if !opts.specialize {
        return false;
    }
    match gate.kind {
        GateKind::CZ | GateKind::Z => true,
        GateKind::T => !opts.worst_case_dense,
        GateKind::CNOT => touches == 2,
        _ => false,
    }
}

/// Gates admitted into one stage: a program-order pass where a rejected gate blocks its qubits.
fn admit(gates: &[Gate], done: &[bool], global: &[bool], opts: &PartitionOptions, blocked: &mut [bool]) -> Vec<usize> {
    blocked.fill(false);
    let mut out = Vec::new();
    for (i, g) in gates.iter().enumerate() {
        if done[i] {
            continue;
        }
        if g.qubits.iter().any(|&q| blocked[q]) || !admissible(g, global, opts) {
            for &q in &g.qubits {
                blocked[q] = true;
            }
        } else {
            out.push(i);
        }
    }
    out
}

fn count_admitted(
    gates: &[Gate],
    done: &[bool],
    global: &[bool],
    opts: &PartitionOptions,
    blocked: &mut [bool],
) -> usize {
    blocked.fill(false);
    let mut count = 0;
    for (i, g) in gates.iter().enumerate() {
        if done[i] {
            continue;
        }
        if g.qubits.iter().any(|&q| blocked[q]) || !admissible(g, global, opts) {
            for &q in &g.qubits {
                blocked[q] = true;
            }
        } else {
            count += 1;
        }
    }
    count
}

/// Greedy choice of `g` global qubits (never from `forbid`) maximizing the next stage, followed
/// by single-exchange refinement. `None` if fewer than `g` candidates exist.
fn best_global_set(
    gates: &[Gate],
    done: &[bool],
    n: usize,
    g: usize,
    forbid: &[bool],
    opts: &PartitionOptions,
) -> Option<(Vec<bool>, usize)> {
    let mut blocked = vec![false; n];
    let mut set = vec![false; n];
    for _ in 0..g {
        let mut best: Option<(usize, usize)> = None;
        for q in 0..n {
            if set[q] || forbid[q] {
                continue;
            }
            set[q] = true;
            let c = count_admitted(gates, done, &set, opts, &mut blocked);
            set[q] = false;
            if best.is_none_or(|(bc, _)| c > bc) {
                best = Some((c, q));
            }
        }
        set[best?.1] = true;
    }
    let mut current = count_admitted(gates, done, &set, opts, &mut blocked);
    loop {
        let mut improved = false;
        'search: for a in 0..n {
            if !set[a] {
                continue;
            }
            for b in 0..n {
                if set[b] || forbid[b] {
                    continue;
                }
                set[a] = false;
                set[b] = true;
                let c = count_admitted(gates, done, &set, opts, &mut blocked);
                if c > current {
                    current = c;
                    improved = true;
                    break 'search;
                }
                set[b] = false;
                set[a] = true;
            }
        }
        if !improved {
            return Some((set, current));
        }
    }
}

/// New global qubit set for the stage after `done`, under the search policy.
///
/// A full exchange (all current globals become local) is preferred; when that admits nothing,
/// any set is allowed, and as a last resort the qubits of the first pending gate are made local.
pub fn select_swap_qubits(
    gates: &[Gate],
    done: &[bool],
    current: &[usize],
    n: usize,
    opts: &PartitionOptions,
) -> Result<Vec<usize>> {
    let g = current.len();
    let mut forbid = vec![false; n];
    for &q in current {
        forbid[q] = true;
    }
    let to_list = |set: Vec<bool>| -> Vec<usize> { (0..n).filter(|&q| set[q]).collect() };
    if let Some((set, score)) = best_global_set(gates, done, n, g, &forbid, opts) {
        if score > 0 {
            return Ok(to_list(set));
        }
    }
    let none = vec![false; n];
    if let Some((set, score)) = best_global_set(gates, done, n, g, &none, opts) {
        if score > 0 {
            return Ok(to_list(set));
        }
    }
    let first = gates
        .iter()
        .zip(done)
        .find(|(_, &d)| !d)
        .map(|(g, _)| g)
        .ok_or_else(|| Error::invalid("no pending gates at a swap point"))?;
    let mut chosen: Vec<usize> = current.iter().copied().filter(|q| !first.qubits.contains(q)).collect();
    for q in 0..n {
        if chosen.len() == g {
            break;
        }
        if !first.qubits.contains(&q) && !chosen.contains(&q) {
            chosen.push(q);
        }
    }
    if chosen.len() < g {
        return Err(Error::invalid(format!("{} local qubits cannot hold a {}-qubit gate", n - g, first.qubits.len())));
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Splits `gates` into stages for `l` local qubits, starting with qubits `l..n` global.
pub fn partition_stages(gates: &[Gate], n: usize, l: usize, opts: &PartitionOptions) -> Result<Partition> {
    if l > n {
        return Err(Error::invalid(format!("{l} local qubits exceed the {n} circuit qubits")));
    }
    let g = n - l;
    let mut global = vec![false; n];
    let mut globals: Vec<usize> = (l..n).collect();
    for &q in &globals {
        global[q] = true;
    }
    // qubit at each location, used by the baseline policy
    let mut order: Vec<usize> = (0..n).collect();
    let mut done = vec![false; gates.len()];
    let mut remaining = gates.len();
    let mut blocked = vec![false; n];
    let mut stages = Vec::new();
    let mut stage_globals = Vec::new();
    loop {
        let admitted = admit(gates, &done, &global, opts, &mut blocked);
        if admitted.is_empty() && !stages.is_empty() {
            return Err(Error::invalid(match opts.policy {
                SwapPolicy::Search => "swap made no progress; too few local qubits for this circuit",
                SwapPolicy::Baseline => {
                    "baseline exchange made no progress; use the search policy or more local qubits"
                }
            }));
        }
        for &i in &admitted {
            done[i] = true;
        }
        remaining -= admitted.len();
        stages.push(admitted);
        stage_globals.push(globals.clone());
        if remaining == 0 {
            break;
        }
        globals = match opts.policy {
            SwapPolicy::Search => select_swap_qubits(gates, &done, &globals, n, opts)?,
            SwapPolicy::Baseline => {
                if g > l {
                    return Err(Error::invalid("baseline exchange needs at least as many local as global qubits"));
                }
                for i in 0..g {
                    order.swap(i, l + i);
                }
                let mut next = order[l..].to_vec();
                next.sort_unstable();
                next
            }
        };
        global.fill(false);
        for &q in &globals {
            global[q] = true;
        }
    }
    Ok(Partition { stages, globals: stage_globals })
}

/// One clustering step's output, still in logical qubit ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageItem {
    /// Gate indices in application order and sorted support.
    Cluster { gates: Vec<usize>, support: Vec<usize> },
    /// A gate touching a global qubit, executed without communication.
    Specialized(usize),
}

impl StageItem {
    fn qubits<'a>(&'a self, gates: &'a [Gate]) -> &'a [usize] {
        match self {
            StageItem::Cluster { support, .. } => support,
            StageItem::Specialized(i) => &gates[*i].qubits,
        }
    }
}

pub fn count_clusters(items: &[StageItem]) -> usize {
    items.iter().filter(|i| matches!(i, StageItem::Cluster { .. })).count()
}

/// Groups a stage's gates into clusters of at most `k_max` qubits.
///
/// Repeatedly, for every ready gate a cluster is grown from it: gates whose qubits are already in
/// the support are absorbed, then the ready gate on a support qubit that leads to the most
/// members is added while the support fits. The largest cluster (earliest seed on ties) is
/// committed. Gates touching a global qubit are emitted individually as soon as they are ready.
pub fn cluster_gates(gates: &[Gate], stage: &[usize], global: &[bool], k_max: usize) -> Result<Vec<StageItem>> {
    let n = global.len();
    let m = stage.len();
    let qubits = |j: usize| -> &[usize] { &gates[stage[j]].qubits };
    let special: Vec<bool> = (0..m).map(|j| qubits(j).iter().any(|&q| global[q])).collect();
    let mut perq: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..m {
        for &q in qubits(j) {
            perq[q].push(j);
        }
    }
    let ready = |j: usize, lp: &[usize]| -> bool { qubits(j).iter().all(|&q| perq[q].get(lp[q]) == Some(&j)) };
    let take = |j: usize, lp: &mut [usize], members: &mut Vec<usize>| {
        members.push(j);
        for &q in qubits(j) {
            lp[q] += 1;
        }
    };
    let absorb = |lp: &mut Vec<usize>, sup: &[bool], members: &mut Vec<usize>| loop {
        let mut changed = false;
        for q in (0..n).filter(|&q| sup[q]) {
            while let Some(&j) = perq[q].get(lp[q]) {
                if !special[j] && qubits(j).iter().all(|&p| sup[p]) && ready(j, lp) {
                    take(j, lp, members);
                    changed = true;
                } else {
                    break;
                }
            }
        }
        if !changed {
            break;
        }
    };
    let grow = |seed: usize, ptr: &[usize]| -> (Vec<usize>, Vec<bool>) {
        let mut lp = ptr.to_vec();
        let mut sup = vec![false; n];
        let mut members = Vec::new();
        for &q in qubits(seed) {
            sup[q] = true;
        }
        take(seed, &mut lp, &mut members);
        absorb(&mut lp, &sup, &mut members);
        loop {
            let size = sup.iter().filter(|&&s| s).count();
            let mut cands: Vec<usize> =
                (0..n).filter_map(|q| perq[q].get(lp[q]).copied()).filter(|&j| !special[j] && ready(j, &lp)).collect();
            cands.sort_unstable();
            cands.dedup();
            let mut best: Option<(usize, usize, usize)> = None;
            for j in cands {
                let extra = qubits(j).iter().filter(|&&q| !sup[q]).count();
                if size + extra > k_max {
                    continue;
                }
                let mut lp2 = lp.clone();
                let mut sup2 = sup.clone();
                let mut mem2 = members.clone();
                for &q in qubits(j) {
                    sup2[q] = true;
                }
                take(j, &mut lp2, &mut mem2);
                absorb(&mut lp2, &sup2, &mut mem2);
                if best.is_none_or(|(score, ext, _)| mem2.len() > score || (mem2.len() == score && extra < ext)) {
                    best = Some((mem2.len(), extra, j));
                }
            }
            let Some((_, _, j)) = best else { break };
            for &q in qubits(j) {
                sup[q] = true;
            }
            take(j, &mut lp, &mut members);
            absorb(&mut lp, &sup, &mut members);
        }
        (members, sup)
    };

    let mut ptr = vec![0usize; n];
    let mut assigned = 0;
    let mut items = Vec::new();
    while assigned < m {
        loop {
            let mut emitted = false;
            for q in 0..n {
                if let Some(&j) = perq[q].get(ptr[q]) {
                    if special[j] && ready(j, &ptr) {
                        for &p in qubits(j) {
                            ptr[p] += 1;
                        }
                        items.push(StageItem::Specialized(stage[j]));
                        assigned += 1;
                        emitted = true;
                    }
                }
            }
            if !emitted {
                break;
            }
        }
        if assigned == m {
            break;
        }
        let mut seeds: Vec<usize> =
            (0..n).filter_map(|q| perq[q].get(ptr[q]).copied()).filter(|&j| !special[j] && ready(j, &ptr)).collect();
        seeds.sort_unstable();
        seeds.dedup();
        let mut best: Option<(Vec<usize>, Vec<bool>)> = None;
        for &s in &seeds {
            if qubits(s).len() > k_max {
                return Err(Error::invalid(format!("k_max {k_max} cannot hold a {}-qubit gate", qubits(s).len())));
            }
            let (members, sup) = grow(s, &ptr);
            if best.as_ref().is_none_or(|(b, _)| members.len() > b.len()) {
                best = Some((members, sup));
            }
        }
        let (members, sup) = best.ok_or_else(|| Error::invalid("clustering found no ready gate"))?;
        for &j in &members {
            for &q in qubits(j) {
                ptr[q] += 1;
            }
        }
        assigned += members.len();
        items.push(StageItem::Cluster {
            gates: members.iter().map(|&j| stage[j]).collect(),
            support: (0..n).filter(|&q| sup[q]).collect(),
        });
    }
    Ok(items)
}

fn global_mask(n: usize, globals: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &q in globals {
        mask[q] = true;
    }
    mask
}

/// Moves each stage's trailing cluster past the following swap while that reduces the total
/// cluster count. Swap count is unchanged. Returns the number of moves made.
pub fn adjust_swap_points(
    gates: &[Gate],
    n: usize,
    partition: &mut Partition,
    items: &mut [Vec<StageItem>],
    k_max: usize,
) -> Result<usize> {
    let mut moves = 0;
    loop {
        let mut changed = false;
        for s in 0..partition.stages.len().saturating_sub(1) {
            let Some(pos) = items[s].iter().rposition(|i| matches!(i, StageItem::Cluster { .. })) else {
                continue;
            };
            let StageItem::Cluster { gates: members, support } = &items[s][pos] else { unreachable!() };
            if items[s][pos + 1..].iter().any(|i| i.qubits(gates).iter().any(|q| support.contains(q))) {
                continue;
            }
            let next_global = global_mask(n, &partition.globals[s + 1]);
            if support.iter().any(|&q| next_global[q]) {
                continue;
            }
            let mut stage_a = partition.stages[s].clone();
            stage_a.retain(|i| !members.contains(i));
            let mut stage_b = partition.stages[s + 1].clone();
            stage_b.extend(members.iter().copied());
            stage_b.sort_unstable();
            let items_a = cluster_gates(gates, &stage_a, &global_mask(n, &partition.globals[s]), k_max)?;
            let items_b = cluster_gates(gates, &stage_b, &next_global, k_max)?;
            let before = count_clusters(&items[s]) + count_clusters(&items[s + 1]);
            if count_clusters(&items_a) + count_clusters(&items_b) < before {
                partition.stages[s] = stage_a;
                partition.stages[s + 1] = stage_b;
                items[s] = items_a;
                items[s + 1] = items_b;
                moves += 1;
                changed = true;
            }
        }
        if !changed {
            return Ok(moves);
        }
    }
}

/// Orders `local_qubits` into bit-locations `0, 1, ...` by cluster participation.
///
/// Locations 0-3 take, one at a time, the qubit in most clusters not yet touching an assigned
/// qubit. Locations 4-7 do the same, except a cluster is only discounted once it touches two of
/// these four locations. The rest follow by descending participation. Ties go to the lower id.
pub fn map_qubits(supports: &[Vec<usize>], local_qubits: &[usize]) -> Vec<usize> {
    let mut remaining: Vec<usize> = local_qubits.to_vec();
    remaining.sort_unstable();
    let mut order = Vec::with_capacity(remaining.len());
    let pick = |remaining: &mut Vec<usize>, active: &[bool]| -> usize {
        let mut best = (0usize, 0usize);
        for (idx, &q) in remaining.iter().enumerate() {
            let count = supports.iter().zip(active).filter(|(s, &a)| a && s.contains(&q)).count();
            if idx == 0 || count > best.0 {
                best = (count, idx);
            }
        }
        remaining.remove(best.1)
    };
    let mut active = vec![true; supports.len()];
    while order.len() < 4 && !remaining.is_empty() {
        let q = pick(&mut remaining, &active);
        for (a, s) in active.iter_mut().zip(supports) {
            if s.contains(&q) {
                *a = false;
            }
        }
        order.push(q);
    }
    let mut active = vec![true; supports.len()];
    let mut hits = vec![0usize; supports.len()];
    while order.len() < 8 && !remaining.is_empty() {
        let q = pick(&mut remaining, &active);
        for ((a, h), s) in active.iter_mut().zip(&mut hits).zip(supports) {
            if s.contains(&q) {
                *h += 1;
                if *h >= 2 {
                    *a = false;
                }
            }
        }
        order.push(q);
    }
    let all = vec![true; supports.len()];
    while !remaining.is_empty() {
        order.push(pick(&mut remaining, &all));
    }
    order
}

/// Diagonal (or rank-renumbering) action on global bit-locations, run without communication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Specialized {
    /// `-1` on ranks with both bits set.
    CzGlobal { a: usize, b: usize },
    /// `Z` on `local` for ranks with the `global` bit set.
    CzMixed { global: usize, local: usize },
    /// `e^{i pi/4}` on ranks with the bit set.
    T { global: usize },
    /// `-1` on ranks with the bit set.
    Z { global: usize },
    /// Flips `target` of the rank number where `control` is set.
    Cnot { control: usize, target: usize },
}

impl Specialized {
    /// The action as a gate on bit-locations.
    pub fn as_gate(&self) -> Gate {
        match *self {
            Specialized::CzGlobal { a, b } => Gate::new(GateKind::CZ, &[a, b], 0),
            Specialized::CzMixed { global, local } => Gate::new(GateKind::CZ, &[global, local], 0),
            Specialized::T { global } => Gate::single(GateKind::T, global, 0),
            Specialized::Z { global } => Gate::single(GateKind::Z, global, 0),
            Specialized::Cnot { control, target } => Gate::new(GateKind::CNOT, &[control, target], 0),
        }
    }
}

fn specialize(gate: &Gate, map: &QubitMap, l: usize) -> Result<Specialized> {
    let locs: Vec<usize> = gate.qubits.iter().map(|&q| map.location(q)).collect();
    let is_global = |loc: usize| loc >= l;
    Ok(match (gate.kind, locs.as_slice()) {
        (GateKind::CZ, &[a, b]) if is_global(a) && is_global(b) => Specialized::CzGlobal { a, b },
        (GateKind::CZ, &[a, b]) if is_global(a) => Specialized::CzMixed { global: a, local: b },
        (GateKind::CZ, &[a, b]) if is_global(b) => Specialized::CzMixed { global: b, local: a },
        (GateKind::T, &[a]) if is_global(a) => Specialized::T { global: a },
        (GateKind::Z, &[a]) if is_global(a) => Specialized::Z { global: a },
        (GateKind::CNOT, &[c, t]) if is_global(c) && is_global(t) => Specialized::Cnot { control: c, target: t },
        _ => {
            return Err(Error::invalid(format!("{} on locations {locs:?} cannot run without communication", gate.kind)))
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedCluster {
    /// Indices into [`SchedulePlan::gates`], in application order.
    pub gates: Vec<usize>,
    /// Logical qubits, ordered like the matrix targets.
    pub qubits: Vec<usize>,
    /// Fused matrix; its targets are ascending bit-locations.
    pub matrix: GateMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlannedOp {
    Cluster(PlannedCluster),
    Specialized { gate: usize, action: Specialized },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub ops: Vec<PlannedOp>,
    pub entry_map: QubitMap,
    pub global_qubits: Vec<usize>,
}

impl Stage {
    pub fn clusters(&self) -> impl Iterator<Item = &PlannedCluster> {
        self.ops.iter().filter_map(|op| match op {
            PlannedOp::Cluster(c) => Some(c),
            PlannedOp::Specialized { .. } => None,
        })
    }
}

/// Exchange of bit-locations between stages. The next stage's entry map also fixes the order
/// of the local locations after the exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SwapDirective {
    /// `(global location, local location)` under the previous stage's map.
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileConfig {
    pub local_qubits: usize,
    pub k_max: usize,
    pub specialize: bool,
    pub worst_case_dense: bool,
    pub policy: SwapPolicy,
    pub skip: SkipOptions,
    pub adjust_swap_points: bool,
}

impl Default for CompileConfig {
    fn default() -> Self {
        CompileConfig {
            local_qubits: 30,
            k_max: DEFAULT_K_MAX,
            specialize: true,
            worst_case_dense: false,
            policy: SwapPolicy::Search,
            skip: SkipOptions::ALL,
            adjust_swap_points: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulePlan {
    pub num_qubits: usize,
    pub local_qubits: usize,
    pub global_qubits: usize,
    pub k_max: usize,
    pub init: InitialState,
    /// Gates after the skip options; clusters and specialized ops index into this list.
    pub gates: Vec<Gate>,
    pub stages: Vec<Stage>,
    /// `swaps[i]` runs between `stages[i]` and `stages[i + 1]`.
    pub swaps: Vec<SwapDirective>,
    pub config: CompileConfig,
    /// Swap count the baseline policy would need, if it can schedule the circuit.
    pub baseline_swaps: Option<usize>,
}

impl SchedulePlan {
    pub fn num_swaps(&self) -> usize {
        self.swaps.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.stages.iter().map(|s| s.clusters().count()).sum()
    }

    pub fn num_specialized(&self) -> usize {
        self.stages.iter().map(|s| s.ops.len() - s.clusters().count()).sum()
    }

    pub fn final_map(&self) -> &QubitMap {
        &self.stages.last().expect("a plan has at least one stage").entry_map
    }
}

/// Compiles `circuit` for `2^(n-l)` ranks of `2^l` amplitudes each.
pub fn compile(circuit: &Circuit, config: &CompileConfig) -> Result<SchedulePlan> {
    circuit.validate()?;
    if config.k_max == 0 || config.k_max > K_MAX_LIMIT {
        return Err(Error::invalid(format!("k_max must be in 1..={K_MAX_LIMIT}, got {}", config.k_max)));
    }
    let n = circuit.num_qubits();
    let l = config.local_qubits.min(n);
    if l == 0 && n > 0 {
        return Err(Error::invalid("at least one local qubit is required"));
    }
    let sim = circuit.simulated(config.skip);
    let gates = sim.gates;
    let base = PartitionOptions {
        specialize: config.specialize,
        worst_case_dense: config.worst_case_dense,
        policy: config.policy,
    };
    let baseline = partition_stages(&gates, n, l, &PartitionOptions { policy: SwapPolicy::Baseline, ..base });
    let baseline_swaps = baseline.as_ref().ok().map(Partition::swaps);
    let mut partition = match config.policy {
        SwapPolicy::Baseline => baseline?,
        SwapPolicy::Search => {
            let mut best = partition_stages(&gates, n, l, &base)?;
            let mut others = vec![baseline.ok()];
            if config.specialize {
                let plain = PartitionOptions { specialize: false, ..base };
                others.push(partition_stages(&gates, n, l, &plain).ok());
                others.push(
                    partition_stages(&gates, n, l, &PartitionOptions { policy: SwapPolicy::Baseline, ..plain }).ok(),
                );
            }
            for p in others.into_iter().flatten() {
                if p.swaps() < best.swaps() {
                    best = p;
                }
            }
            best
        }
    };

    let mut items = partition
        .stages
        .iter()
        .zip(&partition.globals)
        .map(|(stage, globals)| cluster_gates(&gates, stage, &global_mask(n, globals), config.k_max))
        .collect::<Result<Vec<_>>>()?;
    if config.adjust_swap_points {
        adjust_swap_points(&gates, n, &mut partition, &mut items, config.k_max)?;
    }

    let mut stages = Vec::with_capacity(items.len());
    let mut swaps = Vec::new();
    let mut map: Option<QubitMap> = None;
    for (s, stage_items) in items.into_iter().enumerate() {
        let globals = &partition.globals[s];
        let mask = global_mask(n, globals);
        let locals: Vec<usize> = (0..n).filter(|&q| !mask[q]).collect();
        let supports: Vec<Vec<usize>> = stage_items
            .iter()
            .filter_map(|i| match i {
                StageItem::Cluster { support, .. } => Some(support.clone()),
                StageItem::Specialized(_) => None,
            })
            .collect();
        let local_order = map_qubits(&supports, &locals);
        let mut qubit_at = local_order;
        match &map {
            None => qubit_at.extend(globals.iter().copied()),
            Some(prev) => {
                let prev_global: Vec<usize> = (l..n).map(|loc| prev.qubit_at(loc)).collect();
                let mut incoming: Vec<usize> = prev_global.iter().copied().filter(|q| !mask[*q]).collect();
                let mut outgoing: Vec<usize> = globals.iter().copied().filter(|q| !prev_global.contains(q)).collect();
                incoming.sort_by_key(|&q| prev.location(q));
                outgoing.sort_by_key(|&q| prev.location(q));
                let pairs: Vec<(usize, usize)> =
                    incoming.iter().zip(&outgoing).map(|(&i, &o)| (prev.location(i), prev.location(o))).collect();
                let mut after = prev.clone();
                for &(a, b) in &pairs {
                    after.swap_locations(a, b);
                }
                qubit_at.extend((l..n).map(|loc| after.qubit_at(loc)));
                swaps.push(SwapDirective { pairs });
            }
        }
        let entry_map = QubitMap::from_qubit_order(qubit_at)?;
        let mut ops = Vec::with_capacity(stage_items.len());
        for item in stage_items {
            ops.push(match item {
                StageItem::Specialized(i) => {
                    PlannedOp::Specialized { gate: i, action: specialize(&gates[i], &entry_map, l)? }
                }
                StageItem::Cluster { gates: members, support } => {
                    let mut qubits = support;
                    qubits.sort_by_key(|&q| entry_map.location(q));
                    let located: Vec<Gate> = members
                        .iter()
                        .map(|&i| {
                            let mut g = gates[i].clone();
                            g.qubits = g.qubits.iter().map(|&q| entry_map.location(q)).collect();
                            g
                        })
                        .collect();
                    let locs: Vec<usize> = qubits.iter().map(|&q| entry_map.location(q)).collect();
                    let matrix = fuse(&located, &locs)?;
                    PlannedOp::Cluster(PlannedCluster { gates: members, qubits, matrix })
                }
            });
        }
        stages.push(Stage { ops, entry_map: entry_map.clone(), global_qubits: globals.clone() });
        map = Some(entry_map);
    }

    Ok(SchedulePlan {
        num_qubits: n,
        local_qubits: l,
        global_qubits: n - l,
        k_max: config.k_max,
        init: sim.init,
        gates,
        stages,
        swaps,
        config: *config,
        baseline_swaps,
    })
}

/// Executes `plan` on one full state vector (all locations addressable) and returns the
/// amplitudes in logical order.
pub fn replay(plan: &SchedulePlan) -> Result<Vec<Complex64>> {
    let n = plan.num_qubits;
    let mut state = match plan.init {
        InitialState::Basis0 => {
            let mut s = StateSlice::<f64>::zeros(n);
            s.amplitudes_mut()[0] = Complex64::new(1.0, 0.0);
            s
        }
        InitialState::Uniform => StateSlice::filled(n, Complex64::new((0.5f64).powf(n as f64 / 2.0), 0.0)),
    };
    let cfg = KernelConfig { k_max: K_MAX_LIMIT, ..KernelConfig::default() };
    for (s, stage) in plan.stages.iter().enumerate() {
        if s > 0 {
            let mut map = plan.stages[s - 1].entry_map.clone();
            for &(a, b) in &plan.swaps[s - 1].pairs {
                kernel::local_swap(&mut state, a, b, 1)?;
                map.swap_locations(a, b);
            }
            let perm: Vec<usize> = (0..n).map(|loc| stage.entry_map.location(map.qubit_at(loc))).collect();
            kernel::permute_locations(&mut state, &perm, 1)?;
        }
        for op in &stage.ops {
            match op {
                PlannedOp::Cluster(c) => kernel::apply_gate(&mut state, &c.matrix, c.matrix.targets(), &cfg)?,
                PlannedOp::Specialized { action, .. } => {
                    let g = action.as_gate();
                    let m = crate::fusion::gate_matrix(&g)?;
                    kernel::apply_gate(&mut state, &m, &g.qubits, &cfg)?;
                }
            }
        }
    }
    let map = plan.final_map();
    let amps = state.amplitudes();
    Ok((0..1usize << n).map(|x| amps[map.physical_index(x)]).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageReport {
    pub gates: usize,
    pub clusters: usize,
    pub specialized: usize,
    pub global_qubits: Vec<usize>,
    /// Logical qubit at each bit-location on entry.
    pub qubit_map: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScheduleReport {
    pub qubits: usize,
    pub local_qubits: usize,
    pub global_qubits: usize,
    pub k_max: usize,
    pub specialize: bool,
    pub worst_case_dense: bool,
    pub policy: SwapPolicy,
    /// Gates in the circuit file.
    pub circuit_gates: usize,
    /// Gates left after dropping the initial Hadamards and final CZs.
    pub scheduled_gates: usize,
    pub swaps: usize,
    pub baseline_swaps: Option<usize>,
    pub clusters: usize,
    pub clusters_per_kmax: BTreeMap<usize, usize>,
    /// Cluster size (gates) -> number of clusters.
    pub gates_per_cluster: BTreeMap<usize, usize>,
    pub stages: Vec<StageReport>,
    pub swap_directives: Vec<SwapDirective>,
    /// Per cycle: non-diagonal gates on qubits that are global at the start.
    pub global_gates_per_cycle: Vec<usize>,
    pub cycles_with_global_gates: usize,
    pub final_qubit_map: Vec<usize>,
}

/// Per-cycle count of gates a rank cannot execute locally under the initial global set.
pub fn global_gates_per_cycle(gates: &[Gate], n: usize, l: usize) -> Vec<usize> {
    let cycles = gates.iter().map(|g| g.cycle as usize + 1).max().unwrap_or(0);
    let mut out = vec![0; cycles];
    for g in gates {
        if !g.kind.is_diagonal() && g.qubits.iter().any(|&q| q >= l && q < n) {
            out[g.cycle as usize] += 1;
        }
    }
    out
}

impl ScheduleReport {
    /// Report for `plan`; `k_values` are additionally compiled to fill `clusters_per_kmax`.
    pub fn build(circuit: &Circuit, plan: &SchedulePlan, k_values: &[usize]) -> Result<Self> {
        let mut clusters_per_kmax = BTreeMap::new();
        clusters_per_kmax.insert(plan.k_max, plan.num_clusters());
        for &k in k_values {
            if let std::collections::btree_map::Entry::Vacant(e) = clusters_per_kmax.entry(k) {
                let p = compile(circuit, &CompileConfig { k_max: k, ..plan.config })?;
                e.insert(p.num_clusters());
            }
        }
        let mut gates_per_cluster = BTreeMap::new();
        for c in plan.stages.iter().flat_map(|s| s.clusters()) {
            *gates_per_cluster.entry(c.gates.len()).or_insert(0) += 1;
        }
        let per_cycle = global_gates_per_cycle(&plan.gates, plan.num_qubits, plan.local_qubits);
        Ok(ScheduleReport {
            qubits: plan.num_qubits,
            local_qubits: plan.local_qubits,
            global_qubits: plan.global_qubits,
            k_max: plan.k_max,
            specialize: plan.config.specialize,
            worst_case_dense: plan.config.worst_case_dense,
            policy: plan.config.policy,
            circuit_gates: circuit.gates.len(),
            scheduled_gates: plan.gates.len(),
            swaps: plan.num_swaps(),
            baseline_swaps: plan.baseline_swaps,
            clusters: plan.num_clusters(),
            clusters_per_kmax,
            gates_per_cluster,
            stages: plan
                .stages
                .iter()
                .map(|s| StageReport {
                    gates: s
                        .ops
                        .iter()
                        .map(|op| match op {
                            PlannedOp::Cluster(c) => c.gates.len(),
                            PlannedOp::Specialized { .. } => 1,
                        })
                        .sum(),
                    clusters: s.clusters().count(),
                    specialized: s.ops.len() - s.clusters().count(),
                    global_qubits: s.global_qubits.clone(),
                    qubit_map: s.entry_map.qubit_order().to_vec(),
                })
                .collect(),
            swap_directives: plan.swaps.clone(),
            cycles_with_global_gates: per_cycle.iter().filter(|&&c| c > 0).count(),
            global_gates_per_cycle: per_cycle,
            final_qubit_map: plan.final_map().qubit_order().to_vec(),
        })
    }
}
