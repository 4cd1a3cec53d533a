//! Emulated distributed execution. Each of the `2^g` ranks runs on its own thread and owns
//! `2^l` amplitudes; the global index is `rank << l | local`. Ranks only meet in collectives
//! ([`Communicator::barrier`], [`Communicator::all_to_all`], the all-reduces).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Barrier, Mutex};
use std::time::Instant;

use num_complex::{Complex, Complex64};
use serde::Serialize;

pub use crate::circuit::InitialState;
use crate::error::{Error, Result};
use crate::kernel::{self, KernelConfig, Real, StateSlice};
use crate::scheduler::{PlannedOp, QubitMap, SchedulePlan, Specialized};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RankStats {
    pub compute_secs: f64,
    pub exchange_secs: f64,
    pub barrier_secs: f64,
    /// Every collective entered, including barriers and reductions.
    pub collectives: usize,
    pub all_to_alls: usize,
    pub bytes_sent: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Descriptor {
    group_bits: Vec<usize>,
    blocks: usize,
    block_len: usize,
}

/// Shared mailboxes and synchronization for `size` ranks.
type Mailbox<T> = Mutex<Vec<Option<Vec<Complex<T>>>>>;

pub struct World<T: Real> {
    size: usize,
    barrier: Barrier,
    descriptors: Mutex<Vec<Option<Descriptor>>>,
    /// `mailboxes[logical receiver][sender member index]`
    mailboxes: Vec<Mailbox<T>>,
    reduce_slots: Mutex<Vec<Complex64>>,
}

impl<T: Real> World<T> {
    pub fn new(size: usize) -> Result<Self> {
        if !size.is_power_of_two() {
            return Err(Error::invalid(format!("rank count {size} is not a power of two")));
        }
        Ok(World {
            size,
            barrier: Barrier::new(size),
            descriptors: Mutex::new(vec![None; size]),
            mailboxes: (0..size).map(|_| Mutex::new(vec![None; size])).collect(),
            reduce_slots: Mutex::new(vec![Complex64::new(0.0, 0.0); size]),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Runs `f` once per rank, each on its own thread, and returns the results by rank.
    pub fn run<R, F>(&self, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(&mut Communicator<'_, T>) -> R + Sync,
    {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..self.size)
                .map(|rank| {
                    let f = &f;
                    scope.spawn(move || {
                        let mut comm = Communicator { world: self, rank, logical: rank, stats: RankStats::default() };
                        f(&mut comm)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("rank thread panicked")).collect()
        })
    }
}

pub struct Communicator<'w, T: Real> {
    world: &'w World<T>,
    rank: usize,
    logical: usize,
    stats: RankStats,
}

fn gather_bits(x: usize, bits: &[usize]) -> usize {
    bits.iter().enumerate().map(|(i, &b)| ((x >> b) & 1) << i).sum()
}

fn scatter_bits(base: usize, value: usize, bits: &[usize]) -> usize {
    let mut out = base;
    for (i, &b) in bits.iter().enumerate() {
        out = (out & !(1 << b)) | (((value >> i) & 1) << b);
    }
    out
}

impl<'w, T: Real> Communicator<'w, T> {
    /// Thread (physical) rank.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Rank number after CNOT renumbering; selects the rank bits of the global index.
    pub fn logical_rank(&self) -> usize {
        self.logical
    }

    pub fn size(&self) -> usize {
        self.world.size
    }

    pub fn rank_bits(&self) -> usize {
        self.world.size.trailing_zeros() as usize
    }

    pub fn stats(&self) -> &RankStats {
        &self.stats
    }

    fn wait(&mut self) {
        let start = Instant::now();
        self.world.barrier.wait();
        self.stats.barrier_secs += start.elapsed().as_secs_f64();
    }

    pub fn barrier(&mut self) {
        self.stats.collectives += 1;
        self.wait();
    }

    /// Exchanges blocks inside the group of ranks that differ only in `group_bits`: member `j`
    /// receives block `j` from every member, ordered by the sender's member index.
    pub fn all_to_all(&mut self, group_bits: &[usize], blocks: Vec<Vec<Complex<T>>>) -> Result<Vec<Vec<Complex<T>>>> {
        self.stats.collectives += 1;
        let start = Instant::now();
        let barrier_before = self.stats.barrier_secs;
        let desc = Descriptor {
            group_bits: group_bits.to_vec(),
            blocks: blocks.len(),
            block_len: blocks.first().map_or(0, Vec::len),
        };
        let uniform = blocks.iter().all(|b| b.len() == desc.block_len);
        self.world.descriptors.lock().expect("descriptor lock")[self.rank] = Some(desc.clone());
        self.wait();
        // every rank sees the same descriptors, so all reach the same verdict
        let verdict = {
            let all = self.world.descriptors.lock().expect("descriptor lock");
            let first = all[0].clone().expect("posted");
            let g = self.rank_bits();
            if first.group_bits.len() > g || first.group_bits.iter().any(|&b| b >= g) {
                Err(Error::invalid(format!("group bits {:?} exceed {g} rank bits", first.group_bits)))
            } else if all.iter().any(|d| d.as_ref() != Some(&first)) {
                Err(Error::Protocol("ranks entered all_to_all with different arguments".into()))
            } else if first.blocks != 1 << first.group_bits.len() {
                Err(Error::Protocol(format!("{} blocks for a group of {}", first.blocks, 1 << first.group_bits.len())))
            } else {
                Ok(())
            }
        };
        let verdict =
            verdict.and_then(|()| if uniform { Ok(()) } else { Err(Error::Protocol("blocks of unequal size".into())) });
        // a local-only failure (unequal blocks) must still be shared before anyone proceeds
        let local_ok = self.all_reduce_flag(verdict.is_ok());
        if !local_ok {
            self.stats.exchange_secs += start.elapsed().as_secs_f64() - (self.stats.barrier_secs - barrier_before);
            return Err(verdict.err().unwrap_or_else(|| Error::Protocol("another rank rejected the exchange".into())));
        }
        let me = gather_bits(self.logical, group_bits);
        let elem = std::mem::size_of::<Complex<T>>() as u64;
        for (j, block) in blocks.into_iter().enumerate() {
            if j != me {
                self.stats.bytes_sent += block.len() as u64 * elem;
            }
            let dest = scatter_bits(self.logical, j, group_bits);
            self.world.mailboxes[dest].lock().expect("mailbox lock")[me] = Some(block);
        }
        self.wait();
        let received: Vec<Vec<Complex<T>>> = {
            let mut slots = self.world.mailboxes[self.logical].lock().expect("mailbox lock");
            (0..1usize << group_bits.len()).map(|m| slots[m].take().expect("every member posted a block")).collect()
        };
        self.wait();
        self.stats.all_to_alls += 1;
        self.stats.exchange_secs += start.elapsed().as_secs_f64() - (self.stats.barrier_secs - barrier_before);
        Ok(received)
    }

    fn all_reduce_flag(&mut self, ok: bool) -> bool {
        let v = if ok { 0.0 } else { 1.0 };
        self.all_reduce_complex(Complex64::new(v, 0.0)).re == 0.0
    }

    /// Sum over ranks, added in rank order.
    pub fn all_reduce_complex(&mut self, value: Complex64) -> Complex64 {
        self.stats.collectives += 1;
        self.world.reduce_slots.lock().expect("reduce lock")[self.rank] = value;
        self.wait();
        let sum = self.world.reduce_slots.lock().expect("reduce lock").iter().sum();
        self.wait();
        sum
    }

    pub fn all_reduce_sum(&mut self, value: f64) -> f64 {
        self.all_reduce_complex(Complex64::new(value, 0.0)).re
    }

    /// Applies CNOT between rank bits by renumbering: no data moves.
    pub fn relabel_cnot(&mut self, control_bit: usize, target_bit: usize) {
        if (self.logical >> control_bit) & 1 == 1 {
            self.logical ^= 1 << target_bit;
        }
    }
}

/// Exchanges the bit-locations of each `(global, local)` pair.
///
/// The local legs are first moved to the top local locations, then one all-to-all per group of
/// `2^q` ranks swaps those top bits with the global bits. `map` follows the data.
pub fn global_to_local_swap<T: Real>(
    comm: &mut Communicator<'_, T>,
    slice: &mut StateSlice<T>,
    map: &mut QubitMap,
    pairs: &[(usize, usize)],
    threads: usize,
) -> Result<()> {
    let l = slice.local_qubits();
    let q = pairs.len();
    if q == 0 {
        return Ok(());
    }
    for (i, &(g, loc)) in pairs.iter().enumerate() {
        if g < l || g >= l + comm.rank_bits() || loc >= l {
            return Err(Error::invalid(format!("pair ({g}, {loc}) is not (global, local)")));
        }
        if pairs[..i].iter().any(|&(a, b)| a == g || b == loc) {
            return Err(Error::invalid("overlapping swap pairs"));
        }
    }
    // perm[loc] = new location; pair i's local leg goes to l - q + i, the rest keep their order
    let mut perm = vec![usize::MAX; l];
    for (i, &(_, loc)) in pairs.iter().enumerate() {
        perm[loc] = l - q + i;
    }
    for (next, p) in perm.iter_mut().filter(|p| **p == usize::MAX).enumerate() {
        *p = next;
    }
    apply_local_permutation(slice, map, &perm, threads)?;

    let block_len = 1usize << (l - q);
    let amps = std::mem::take(slice).into_amplitudes();
    let blocks: Vec<Vec<Complex<T>>> = amps.chunks(block_len).map(<[_]>::to_vec).collect();
    drop(amps);
    let group_bits: Vec<usize> = pairs.iter().map(|&(g, _)| g - l).collect();
    let received = comm.all_to_all(&group_bits, blocks)?;
    *slice = StateSlice::from_amplitudes(received.concat())?;
    for (i, &(g, _)) in pairs.iter().enumerate() {
        map.swap_locations(l - q + i, g);
    }
    Ok(())
}

/// Moves local location `i` to `perm[i]`, keeping `map` in sync.
fn apply_local_permutation<T: Real>(
    slice: &mut StateSlice<T>,
    map: &mut QubitMap,
    perm: &[usize],
    threads: usize,
) -> Result<()> {
    if perm.iter().enumerate().all(|(i, &p)| i == p) {
        return Ok(());
    }
    kernel::permute_locations(slice, perm, threads)?;
    let mut order = map.qubit_order().to_vec();
    for (i, &p) in perm.iter().enumerate() {
        order[p] = map.qubit_at(i);
    }
    *map = QubitMap::from_qubit_order(order)?;
    Ok(())
}

/// Executes a specialized action on this rank without any data movement.
pub fn apply_specialized_global<T: Real>(
    comm: &mut Communicator<'_, T>,
    slice: &mut StateSlice<T>,
    action: &Specialized,
) -> Result<()> {
    let l = slice.local_qubits();
    let g = comm.rank_bits();
    let bit = |loc: usize| -> Result<bool> {
        if loc < l || loc >= l + g {
            return Err(Error::invalid(format!("location {loc} is not global")));
        }
        Ok((comm.logical_rank() >> (loc - l)) & 1 == 1)
    };
    match *action {
        Specialized::CzGlobal { a, b } => {
            if bit(a)? && bit(b)? {
                kernel::apply_phase(slice, Complex64::new(-1.0, 0.0))?;
            }
        }
        Specialized::CzMixed { global, local } => {
            if bit(global)? {
                kernel::apply_diagonal_z(slice, local)?;
            }
        }
        Specialized::T { global } => {
            if bit(global)? {
                kernel::apply_phase(slice, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4))?;
            }
        }
        Specialized::Z { global } => {
            if bit(global)? {
                kernel::apply_phase(slice, Complex64::new(-1.0, 0.0))?;
            }
        }
        Specialized::Cnot { control, target } => {
            bit(control)?;
            bit(target)?;
            comm.relabel_cnot(control - l, target - l);
        }
    }
    Ok(())
}

pub fn reduce_norm<T: Real>(comm: &mut Communicator<'_, T>, slice: &StateSlice<T>) -> f64 {
    let local = kernel::local_norm_sq(slice);
    comm.all_reduce_sum(local)
}

/// `-sum p ln p` over the whole state.
pub fn reduce_entropy<T: Real>(comm: &mut Communicator<'_, T>, slice: &StateSlice<T>) -> f64 {
    let local = kernel::local_entropy_terms(slice);
    comm.all_reduce_sum(local)
}

/// Amplitude of the basis state whose bit `q` is qubit `q`'s value.
pub fn query_amplitude<T: Real>(
    comm: &mut Communicator<'_, T>,
    slice: &StateSlice<T>,
    map: &QubitMap,
    logical: usize,
) -> Result<Complex64> {
    let l = slice.local_qubits();
    let physical = map.physical_index(logical);
    let mine = if physical >> l == comm.logical_rank() {
        kernel::amplitude_at(slice, physical & ((1 << l) - 1))?
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(comm.all_reduce_complex(mine))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributedState<T: Real = f64> {
    num_qubits: usize,
    /// Indexed by logical rank.
    slices: Vec<StateSlice<T>>,
    map: QubitMap,
}

impl<T: Real> DistributedState<T> {
    pub fn new(slices: Vec<StateSlice<T>>, map: QubitMap) -> Result<Self> {
        let l = slices.first().map_or(0, StateSlice::local_qubits);
        if !slices.len().is_power_of_two() || slices.iter().any(|s| s.local_qubits() != l) {
            return Err(Error::invalid("slices must be 2^g blocks of equal size"));
        }
        let num_qubits = l + slices.len().trailing_zeros() as usize;
        if map.num_qubits() != num_qubits {
            return Err(Error::invalid("qubit map size does not match the state"));
        }
        Ok(DistributedState { num_qubits, slices, map })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn local_qubits(&self) -> usize {
        self.slices[0].local_qubits()
    }

    pub fn slices(&self) -> &[StateSlice<T>] {
        &self.slices
    }

    pub fn map(&self) -> &QubitMap {
        &self.map
    }

    pub fn norm_sq(&self) -> f64 {
        self.slices.iter().map(kernel::local_norm_sq).sum()
    }

    pub fn entropy(&self) -> f64 {
        self.slices.iter().map(kernel::local_entropy_terms).sum()
    }

    /// Amplitude at a physical index `rank << l | local`.
    pub fn physical_amplitude(&self, index: usize) -> Complex64 {
        let l = self.local_qubits();
        T::widen(self.slices[index >> l].amplitudes()[index & ((1 << l) - 1)])
    }

    /// Amplitude of the basis state whose bit `q` is qubit `q`'s value.
    pub fn amplitude(&self, logical: usize) -> Complex64 {
        self.physical_amplitude(self.map.physical_index(logical))
    }

    /// All amplitudes in logical order.
    pub fn to_logical_vector(&self) -> Vec<Complex64> {
        (0..1usize << self.num_qubits).map(|x| self.amplitude(x)).collect()
    }

    /// Writes `rank_XXXX.bin` per rank: little-endian f64 (re, im) pairs in local index order.
    pub fn dump(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut paths = Vec::with_capacity(self.slices.len());
        for (rank, slice) in self.slices.iter().enumerate() {
            let path = dir.join(format!("rank_{rank:04}.bin"));
            let mut bytes = Vec::with_capacity(slice.len() * 16);
            for a in slice.amplitudes() {
                let z = T::widen(*a);
                bytes.extend_from_slice(&z.re.to_le_bytes());
                bytes.extend_from_slice(&z.im.to_le_bytes());
            }
            fs::File::create(&path)?.write_all(&bytes)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub kernel: KernelConfig,
    pub entropy: bool,
    /// Basis states (bit `q` = qubit `q`) whose amplitudes are gathered after the run.
    pub amplitudes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunStats {
    pub wall_secs: f64,
    pub norm_sq: f64,
    pub entropy: Option<f64>,
    pub amplitudes: Vec<Complex64>,
    pub per_rank: Vec<RankStats>,
}

impl RunStats {
    pub fn compute_secs(&self) -> f64 {
        self.per_rank.iter().map(|r| r.compute_secs).fold(0.0, f64::max)
    }

    pub fn exchange_secs(&self) -> f64 {
        self.per_rank.iter().map(|r| r.exchange_secs).fold(0.0, f64::max)
    }

    pub fn all_to_alls(&self) -> usize {
        self.per_rank.first().map_or(0, |r| r.all_to_alls)
    }
}

fn in_pool<R: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> R + Send) -> R {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

/// Executes `plan` over `2^g` ranks.
pub fn run<T: Real>(
    plan: &SchedulePlan,
    init: InitialState,
    opts: &RunOptions,
) -> Result<(DistributedState<T>, RunStats)> {
    let (n, l, g) = (plan.num_qubits, plan.local_qubits, plan.global_qubits);
    if l + g != n || plan.stages.is_empty() || plan.swaps.len() + 1 != plan.stages.len() {
        return Err(Error::invalid("inconsistent plan"));
    }
    if n >= usize::BITS as usize - 1 {
        return Err(Error::invalid(format!("{n} qubits cannot be indexed")));
    }
    if let Some(&x) = opts.amplitudes.iter().find(|&&x| x >> n != 0) {
        return Err(Error::invalid(format!("basis state {x} outside {n} qubits")));
    }
    let kcfg = KernelConfig { k_max: opts.kernel.k_max.max(plan.k_max), ..opts.kernel };
    let pool = if kcfg.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(kcfg.threads)
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };
    let world = World::<T>::new(1 << g)?;
    let wall = Instant::now();
    let results = world.run(|comm| -> Result<_> {
        let amp = match init {
            InitialState::Basis0 => T::zero(),
            InitialState::Uniform => T::of((0.5f64).powf(n as f64 / 2.0)),
        };
        let mut slice = StateSlice::filled(l, Complex::new(amp, T::zero()));
        if init == InitialState::Basis0 && comm.rank() == 0 {
            slice.amplitudes_mut()[0] = Complex::new(T::one(), T::zero());
        }
        let mut map = plan.stages[0].entry_map.clone();
        for (s, stage) in plan.stages.iter().enumerate() {
            if s > 0 {
                global_to_local_swap(comm, &mut slice, &mut map, &plan.swaps[s - 1].pairs, kcfg.threads)?;
                if (l..n).any(|loc| map.qubit_at(loc) != stage.entry_map.qubit_at(loc)) {
                    return Err(Error::invalid(format!("swap before stage {s} disagrees with its map")));
                }
                let perm: Vec<usize> = (0..l).map(|loc| stage.entry_map.location(map.qubit_at(loc))).collect();
                let start = Instant::now();
                in_pool(&pool, || apply_local_permutation(&mut slice, &mut map, &perm, kcfg.threads))?;
                comm.stats.compute_secs += start.elapsed().as_secs_f64();
            }
            let start = Instant::now();
            for op in &stage.ops {
                match op {
                    PlannedOp::Cluster(c) => {
                        in_pool(&pool, || kernel::apply_gate(&mut slice, &c.matrix, c.matrix.targets(), &kcfg))?
                    }
                    PlannedOp::Specialized { action, .. } => apply_specialized_global(comm, &mut slice, action)?,
                }
            }
            comm.stats.compute_secs += start.elapsed().as_secs_f64();
        }
        let norm = reduce_norm(comm, &slice);
        let entropy = if opts.entropy { Some(reduce_entropy(comm, &slice)) } else { None };
        let mut amplitudes = Vec::with_capacity(opts.amplitudes.len());
        for &x in &opts.amplitudes {
            amplitudes.push(query_amplitude(comm, &slice, &map, x)?);
        }
        Ok((comm.logical_rank(), slice, map, norm, entropy, amplitudes, comm.stats.clone()))
    });
    let wall_secs = wall.elapsed().as_secs_f64();

    let mut slices: Vec<Option<StateSlice<T>>> = vec![None; 1 << g];
    let mut per_rank = Vec::with_capacity(1 << g);
    let mut summary = None;
    for r in results {
        let (logical, slice, map, norm, entropy, amplitudes, stats) = r?;
        slices[logical] = Some(slice);
        per_rank.push(stats);
        summary.get_or_insert((map, norm, entropy, amplitudes));
    }
    let (map, norm_sq, entropy, amplitudes) = summary.expect("at least one rank");
    let slices = slices
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Protocol("rank renumbering is not a bijection".into()))?;
    let state = DistributedState::new(slices, map)?;
    Ok((state, RunStats { wall_secs, norm_sq, entropy, amplitudes, per_rank }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{generate_supremacy, Circuit, Gate, GateKind, GenerateOptions, SkipOptions};
    use crate::oracle::simulate_gates;
    use crate::scheduler::{compile, CompileConfig};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn slice(values: &[f64]) -> StateSlice<f64> {
        StateSlice::from_amplitudes(values.iter().map(|&v| c(v)).collect()).unwrap()
    }

    fn reals(s: &StateSlice<f64>) -> Vec<f64> {
        s.amplitudes().iter().map(|a| a.re).collect()
    }

    #[test]
    fn two_rank_all_to_all() {
        let world = World::<f64>::new(2).unwrap();
        let out = world.run(|comm| {
            let r = comm.rank() as f64;
            let blocks = vec![vec![c(10.0 * r)], vec![c(10.0 * r + 1.0)]];
            comm.all_to_all(&[0], blocks).unwrap()
        });
        assert_eq!(out[0], vec![vec![c(0.0)], vec![c(10.0)]]);
        assert_eq!(out[1], vec![vec![c(1.0)], vec![c(11.0)]]);
    }

    #[test]
    fn empty_group_is_noop() {
        let world = World::<f64>::new(4).unwrap();
        let out = world.run(|comm| {
            let b = vec![vec![c(comm.rank() as f64)]];
            comm.all_to_all(&[], b).unwrap()
        });
        for (r, o) in out.iter().enumerate() {
            assert_eq!(o, &vec![vec![c(r as f64)]]);
        }
    }

    #[test]
    fn all_to_all_is_an_involution() {
        let world = World::<f64>::new(4).unwrap();
        let out = world.run(|comm| {
            let orig: Vec<Vec<Complex64>> = (0..4).map(|j| vec![c((comm.rank() * 4 + j) as f64); 3]).collect();
            let once = comm.all_to_all(&[0, 1], orig.clone()).unwrap();
            let twice = comm.all_to_all(&[0, 1], once).unwrap();
            twice == orig
        });
        assert!(out.into_iter().all(|x| x));
    }

    #[test]
    fn protocol_errors_are_collective() {
        let world = World::<f64>::new(2).unwrap();
        let out = world.run(|comm| {
            let len = if comm.rank() == 0 { 1 } else { 2 };
            comm.all_to_all(&[0], vec![vec![c(0.0); len]; 2])
        });
        assert!(out.iter().all(|r| matches!(r, Err(Error::Protocol(_)))));
        let out = world.run(|comm| comm.all_to_all(&[3], vec![vec![c(0.0)]; 2]));
        assert!(out.iter().all(|r| matches!(r, Err(Error::InvalidArgument(_)))));
        let out = world.run(|comm| {
            let a = comm.all_to_all(&[0], vec![vec![c(1.0)]; 3]);
            (a.is_err(), comm.all_reduce_sum(1.0))
        });
        assert!(out.iter().all(|&(e, s)| e && s == 2.0));
    }

    #[test]
    fn single_qubit_swap_between_two_ranks() {
        let world = World::<f64>::new(2).unwrap();
        let out = world.run(|comm| {
            let base = 2.0 * comm.rank() as f64;
            let mut s = slice(&[base, base + 1.0]);
            let mut map = QubitMap::identity(2);
            global_to_local_swap(comm, &mut s, &mut map, &[(1, 0)], 1).unwrap();
            (reals(&s), map.qubit_order().to_vec())
        });
        assert_eq!(out[0].0, vec![0.0, 2.0]);
        assert_eq!(out[1].0, vec![1.0, 3.0]);
        assert_eq!(out[0].1, vec![1, 0]);
    }

    #[test]
    fn full_exchange_sends_quarters() {
        let world = World::<f64>::new(4).unwrap();
        let out = world.run(|comm| {
            let r = comm.rank();
            let mut s = slice(&(0..4).map(|i| (r * 4 + i) as f64).collect::<Vec<_>>());
            let mut map = QubitMap::identity(4);
            global_to_local_swap(comm, &mut s, &mut map, &[(2, 0), (3, 1)], 1).unwrap();
            let once = reals(&s);
            global_to_local_swap(comm, &mut s, &mut map, &[(2, 0), (3, 1)], 1).unwrap();
            (once, reals(&s), map.qubit_order().to_vec())
        });
        for (r, (once, twice, order)) in out.iter().enumerate() {
            // rank r holds quarter r of every rank
            assert_eq!(once, &(0..4).map(|j| (j * 4 + r) as f64).collect::<Vec<_>>());
            assert_eq!(twice, &(0..4).map(|i| (r * 4 + i) as f64).collect::<Vec<_>>());
            assert_eq!(order, &vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn specialized_actions() {
        let world = World::<f64>::new(4).unwrap();
        let out = world.run(|comm| {
            let mut s = slice(&[1.0, 1.0]);
            apply_specialized_global(comm, &mut s, &Specialized::CzGlobal { a: 1, b: 2 }).unwrap();
            let cz = reals(&s);
            let mut t = slice(&[1.0, 1.0]);
            apply_specialized_global(comm, &mut t, &Specialized::T { global: 1 }).unwrap();
            let mut m = slice(&[1.0, 1.0]);
            apply_specialized_global(comm, &mut m, &Specialized::CzMixed { global: 2, local: 0 }).unwrap();
            let before = comm.stats().bytes_sent;
            apply_specialized_global(comm, &mut m, &Specialized::Cnot { control: 1, target: 2 }).unwrap();
            assert!(apply_specialized_global(comm, &mut m, &Specialized::Z { global: 0 }).is_err());
            (cz, t.amplitudes()[0], reals(&m), comm.logical_rank(), comm.stats().bytes_sent - before)
        });
        for (r, (cz, t, mixed, logical, bytes)) in out.into_iter().enumerate() {
            assert_eq!(cz, if r == 3 { vec![-1.0, -1.0] } else { vec![1.0, 1.0] });
            if r & 1 == 0 {
                assert_eq!(t, c(1.0));
            } else {
                assert!((t - Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)).norm() < 1e-15);
            }
            assert_eq!(mixed, if r & 2 == 2 { vec![1.0, -1.0] } else { vec![1.0, 1.0] });
            assert_eq!(logical, if r & 1 == 1 { r ^ 2 } else { r });
            assert_eq!(bytes, 0);
        }
    }

    #[test]
    fn specialized_match_oracle() {
        // n = 6: l = 3, global locations 3..6; identity map so qubit = location
        let rng_circuit = generate_supremacy(2, 3, 8, 3, GenerateOptions::default()).unwrap();
        let prefix = rng_circuit.gates.clone();
        let actions = [
            Specialized::CzGlobal { a: 3, b: 5 },
            Specialized::CzMixed { global: 4, local: 1 },
            Specialized::T { global: 5 },
            Specialized::Z { global: 3 },
            Specialized::Cnot { control: 4, target: 5 },
        ];
        let plan = compile(
            &rng_circuit,
            &CompileConfig { local_qubits: 6, skip: SkipOptions::NONE, ..CompileConfig::default() },
        )
        .unwrap();
        let (full, _) = run::<f64>(&plan, InitialState::Basis0, &RunOptions::default()).unwrap();
        let start = full.to_logical_vector();
        for action in actions {
            let mut gates = prefix.clone();
            gates.push(action.as_gate());
            let expected = simulate_gates(6, &gates, InitialState::Basis0).unwrap();
            let world = World::<f64>::new(8).unwrap();
            let out = world.run(|comm| {
                let r = comm.rank();
                let mut s = StateSlice::from_amplitudes(start[r << 3..(r + 1) << 3].to_vec()).unwrap();
                apply_specialized_global(comm, &mut s, &action).unwrap();
                (comm.logical_rank(), s)
            });
            let mut slices = vec![None; 8];
            for (logical, s) in out {
                slices[logical] = Some(s);
            }
            let state =
                DistributedState::new(slices.into_iter().map(Option::unwrap).collect(), QubitMap::identity(6)).unwrap();
            assert!(expected.max_abs_diff(&state.to_logical_vector()) < 1e-14, "{action:?}");
        }
    }

    #[test]
    fn empty_plan_basis_state() {
        let circuit = Circuit::with_qubits(4);
        let plan = compile(&circuit, &CompileConfig { local_qubits: 2, ..CompileConfig::default() }).unwrap();
        let (state, stats) = run::<f64>(
            &plan,
            InitialState::Basis0,
            &RunOptions { entropy: true, amplitudes: vec![0, 5], ..Default::default() },
        )
        .unwrap();
        assert_eq!(state.amplitude(0), c(1.0));
        assert_eq!(state.norm_sq(), 1.0);
        assert_eq!(stats.entropy, Some(0.0));
        assert_eq!(stats.amplitudes, vec![c(1.0), c(0.0)]);
    }

    #[test]
    fn uniform_entropy() {
        let circuit = Circuit::with_qubits(6);
        let plan = compile(&circuit, &CompileConfig { local_qubits: 4, ..CompileConfig::default() }).unwrap();
        let (_, stats) =
            run::<f64>(&plan, InitialState::Uniform, &RunOptions { entropy: true, ..Default::default() }).unwrap();
        assert!((stats.entropy.unwrap() - 6.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn ranks_agree_with_single_rank() {
        let circuit = generate_supremacy(2, 5, 25, 17, GenerateOptions::default()).unwrap();
        let skip = SkipOptions { initial_h: true, final_cz: false };
        let reference = {
            let plan =
                compile(&circuit, &CompileConfig { local_qubits: 10, skip, ..CompileConfig::default() }).unwrap();
            run::<f64>(&plan, plan.init, &RunOptions::default()).unwrap().0.to_logical_vector()
        };
        let expected = simulate_gates(10, &circuit.gates, InitialState::Basis0).unwrap();
        assert!(expected.max_abs_diff(&reference) < 1e-12);
        for g in 1..=3 {
            let plan =
                compile(&circuit, &CompileConfig { local_qubits: 10 - g, skip, ..CompileConfig::default() }).unwrap();
            let opts =
                RunOptions { kernel: KernelConfig { threads: 2, ..KernelConfig::default() }, ..Default::default() };
            let (state, stats) = run::<f64>(&plan, plan.init, &opts).unwrap();
            let got = state.to_logical_vector();
            let diff = got.iter().zip(&reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-12, "g={g}: {diff}");
            assert!((stats.norm_sq - 1.0).abs() < 1e-10);
            assert!(stats.per_rank.iter().all(|r| r.all_to_alls == plan.num_swaps()));
            let counts: Vec<usize> = stats.per_rank.iter().map(|r| r.collectives).collect();
            assert!(counts.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn global_cnot_by_renumbering() {
        let mut circuit = Circuit::with_qubits(4);
        for q in 0..4 {
            circuit.push(Gate::single(GateKind::H, q, 0));
        }
        circuit.push(Gate::single(GateKind::T, 3, 1));
        circuit.push(Gate::new(GateKind::CNOT, &[3, 2], 2));
        circuit.push(Gate::single(GateKind::T, 2, 3));
        let skip = SkipOptions { initial_h: true, final_cz: false };
        let plan = compile(&circuit, &CompileConfig { local_qubits: 2, skip, ..CompileConfig::default() }).unwrap();
        assert_eq!(plan.num_swaps(), 0);
        let (state, stats) = run::<f64>(&plan, plan.init, &RunOptions::default()).unwrap();
        let expected = simulate_gates(4, &circuit.gates, InitialState::Basis0).unwrap();
        assert!(expected.max_abs_diff(&state.to_logical_vector()) < 1e-14);
        assert!(stats.per_rank.iter().all(|r| r.bytes_sent == 0));
    }

    #[test]
    fn dump_writes_le_pairs() {
        let circuit = Circuit::with_qubits(3);
        let plan = compile(&circuit, &CompileConfig { local_qubits: 2, ..CompileConfig::default() }).unwrap();
        let (state, _) = run::<f64>(&plan, InitialState::Basis0, &RunOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = state.dump(dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        let bytes = fs::read(&paths[0]).unwrap();
        assert_eq!(bytes.len(), 4 * 16);
        assert_eq!(f64::from_le_bytes(bytes[..8].try_into().unwrap()), 1.0);
    }
}
