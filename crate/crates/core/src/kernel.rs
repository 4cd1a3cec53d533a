//! In-place kernels over one rank's contiguous block of `2^l` amplitudes.
//!
//! A k-qubit gate on bit-locations `i_0 < ... < i_{k-1}` is applied by enumerating the
//! `2^{l-k}` index patterns `c` of the remaining bits, gathering the `2^k` amplitudes
//! `c | x` for every `x`, multiplying by the gate matrix and scattering the result back.

use std::fmt::Debug;
use std::time::Instant;

use num_complex::{Complex, Complex64};
use num_traits::{Float, FromPrimitive, ToPrimitive};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fusion::{GateMatrix, DEFAULT_K_MAX, K_MAX_LIMIT};

/// Floating-point type of the amplitudes.
pub trait Real: Float + FromPrimitive + ToPrimitive + Default + Debug + Send + Sync + 'static {
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite value")
    }

    fn complex(z: Complex64) -> Complex<Self> {
        Complex::new(Self::of(z.re), Self::of(z.im))
    }

    fn widen(z: Complex<Self>) -> Complex64 {
        Complex64::new(z.re.to_f64().unwrap_or(f64::NAN), z.im.to_f64().unwrap_or(f64::NAN))
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSlice<T: Real = f64> {
    l: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Real> StateSlice<T> {
    pub fn zeros(l: usize) -> Self {
        StateSlice { l, amps: vec![Complex::new(T::zero(), T::zero()); 1 << l] }
    }

    /// Every amplitude set to `value`.
    pub fn filled(l: usize, value: Complex<T>) -> Self {
        StateSlice { l, amps: vec![value; 1 << l] }
    }

    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::invalid(format!("slice length {} is not a power of two", amps.len())));
        }
        Ok(StateSlice { l: amps.len().trailing_zeros() as usize, amps })
    }

    pub fn local_qubits(&self) -> usize {
        self.l
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amps
    }
}

impl<T: Real> Default for StateSlice<T> {
    fn default() -> Self {
        StateSlice::zeros(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelConfig {
    /// Matrix columns processed per block; `None` means `min(2^k, 8)`.
    pub block_size: Option<usize>,
    pub threads: usize,
    pub k_max: usize,
    /// Use the split real/imaginary update instead of complex multiply-add.
    pub split_fma: bool,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { block_size: None, threads: 1, k_max: DEFAULT_K_MAX, split_fma: false }
    }
}

impl KernelConfig {
    pub fn block_for(&self, k: usize) -> usize {
        self.block_size.unwrap_or(8).clamp(1, 1 << k)
    }
}

/// Number of worker chunks for an outer loop of `outer` iterations.
fn chunk_len(outer: usize, threads: usize) -> usize {
    const MIN_CHUNK: usize = 64;
    if threads <= 1 {
        return outer.max(1);
    }
    (outer / (threads * 4)).max(MIN_CHUNK).min(outer.max(1))
}

/// Index with zero bits inserted at every (ascending) location in `locs`.
#[inline]
fn deposit(mut c: usize, locs: &[usize]) -> usize {
    for &p in locs {
        let low = c & ((1 << p) - 1);
        c = ((c >> p) << (p + 1)) | low;
    }
    c
}

#[derive(Clone, Copy)]
struct SharedMut<T>(*mut T);
// SAFETY: every user writes through disjoint index sets (one owner per amplitude).
unsafe impl<T: Send> Send for SharedMut<T> {}
unsafe impl<T: Send> Sync for SharedMut<T> {}

impl<T> SharedMut<T> {
    fn get(&self) -> *mut T {
        self.0
    }
}

fn check_locs(locs: &[usize], l: usize) -> Result<()> {
    for (i, &p) in locs.iter().enumerate() {
        if p >= l {
            return Err(Error::invalid(format!("bit-location {p} outside {l} local qubits")));
        }
        if locs[..i].contains(&p) {
            return Err(Error::invalid(format!("bit-location {p} listed twice")));
        }
    }
    Ok(())
}

type BlockKernel<'a, T> = dyn Fn(&mut [Complex<T>], &mut [Complex<T>]) + Sync + 'a;

/// Applies `g` with its index bit `i` on bit-location `locs[i]`.
pub fn apply_gate<T: Real>(
    state: &mut StateSlice<T>,
    g: &GateMatrix,
    locs: &[usize],
    cfg: &KernelConfig,
) -> Result<()> {
    let k = g.k();
    if locs.len() != k {
        return Err(Error::invalid(format!("{} locations for a {k}-qubit gate", locs.len())));
    }
    if k > cfg.k_max || k > K_MAX_LIMIT {
        return Err(Error::invalid(format!("{k}-qubit gate exceeds k_max {}", cfg.k_max)));
    }
    check_locs(locs, state.l)?;
    if k == 0 {
        return Ok(());
    }
    let sorted_owned;
    let (g, locs) = if locs.windows(2).all(|w| w[0] < w[1]) {
        (g, locs)
    } else {
        sorted_owned = g.clone().with_targets(locs.to_vec())?.sorted();
        (&sorted_owned, sorted_owned.targets())
    };

    let dim = 1usize << k;
    let offsets: Vec<usize> =
        (0..dim).map(|x| (0..k).filter(|i| x >> i & 1 == 1).map(|i| 1usize << locs[i]).sum()).collect();
    let outer = 1usize << (state.l - k);
    let block = cfg.block_for(k);
    let ptr = SharedMut(state.amps.as_mut_ptr());

    let run_range = |range: std::ops::Range<usize>, kern: &BlockKernel<'_, T>| {
        let mut v = vec![Complex::new(T::zero(), T::zero()); dim];
        let mut out = vec![Complex::new(T::zero(), T::zero()); dim];
        for c in range {
            let base = deposit(c, locs);
            // SAFETY: indices base + offsets[x] belong to pattern c only; patterns are disjoint.
            unsafe {
                for x in 0..dim {
                    v[x] = *ptr.get().add(base + offsets[x]);
                }
                kern(&mut v, &mut out);
                for x in 0..dim {
                    *ptr.get().add(base + offsets[x]) = out[x];
                }
            }
        }
    };

    let chunk = chunk_len(outer, cfg.threads);
    if cfg.split_fma {
        let rr: Vec<T> = g.entries().iter().map(|m| T::of(m.re)).collect();
        let ii: Vec<T> = g.entries().iter().map(|m| T::of(m.im)).collect();
        let kern = |v: &mut [Complex<T>], out: &mut [Complex<T>]| blocked_split(&rr, &ii, dim, block, v, out);
        if cfg.threads <= 1 || outer <= chunk {
            run_range(0..outer, &kern);
        } else {
            (0..outer.div_ceil(chunk))
                .into_par_iter()
                .for_each(|b| run_range(b * chunk..((b + 1) * chunk).min(outer), &kern));
        }
    } else {
        let m: Vec<Complex<T>> = g.entries().iter().map(|&z| T::complex(z)).collect();
        let kern = |v: &mut [Complex<T>], out: &mut [Complex<T>]| blocked(&m, dim, block, v, out);
        if cfg.threads <= 1 || outer <= chunk {
            run_range(0..outer, &kern);
        } else {
            (0..outer.div_ceil(chunk))
                .into_par_iter()
                .for_each(|b| run_range(b * chunk..((b + 1) * chunk).min(outer), &kern));
        }
    }
    Ok(())
}

/// `out = m * v`, accumulating column blocks of width `block` into every row.
#[inline]
fn blocked<T: Real>(m: &[Complex<T>], dim: usize, block: usize, v: &[Complex<T>], out: &mut [Complex<T>]) {
    out.fill(Complex::new(T::zero(), T::zero()));
    let mut start = 0;
    while start < dim {
        let end = (start + block).min(dim);
        for (row, o) in out.iter_mut().enumerate() {
            let mrow = &m[row * dim..row * dim + dim];
            let mut acc = *o;
            for i in start..end {
                acc = acc + mrow[i] * v[i];
            }
            *o = acc;
        }
        start = end;
    }
}

/// Same product with the two-step real update `(re, im) += (v_re m_re, v_im m_re)` followed by
/// `(re, im) += (-v_im m_im, v_re m_im)`.
#[inline]
fn blocked_split<T: Real>(rr: &[T], ii: &[T], dim: usize, block: usize, v: &[Complex<T>], out: &mut [Complex<T>]) {
    out.fill(Complex::new(T::zero(), T::zero()));
    let mut start = 0;
    while start < dim {
        let end = (start + block).min(dim);
        for (row, o) in out.iter_mut().enumerate() {
            let base = row * dim;
            let (mut re, mut im) = (o.re, o.im);
            for i in start..end {
                let (mr, mi) = (rr[base + i], ii[base + i]);
                re = v[i].re.mul_add(mr, re);
                im = v[i].im.mul_add(mr, im);
                re = v[i].im.mul_add(-mi, re);
                im = v[i].re.mul_add(mi, im);
            }
            *o = Complex::new(re, im);
        }
        start = end;
    }
}

/// Exchanges bit-locations `a` and `b` of every index.
pub fn local_swap<T: Real>(state: &mut StateSlice<T>, a: usize, b: usize, threads: usize) -> Result<()> {
    check_locs(&[a], state.l)?;
    check_locs(&[b], state.l)?;
    if a == b {
        return Ok(());
    }
    let locs = [a.min(b), a.max(b)];
    let outer = 1usize << (state.l - 2);
    let (ma, mb) = (1usize << a, 1usize << b);
    let ptr = SharedMut(state.amps.as_mut_ptr());
    let run = |range: std::ops::Range<usize>| {
        for c in range {
            let base = deposit(c, &locs);
            // SAFETY: the pair (base|ma, base|mb) is owned by pattern c.
            unsafe { std::ptr::swap(ptr.get().add(base | ma), ptr.get().add(base | mb)) };
        }
    };
    let chunk = chunk_len(outer, threads).max(4096);
    if threads <= 1 || outer <= chunk {
        run(0..outer);
    } else {
        (0..outer.div_ceil(chunk)).into_par_iter().for_each(|i| run(i * chunk..((i + 1) * chunk).min(outer)));
    }
    Ok(())
}

/// Rearranges bit-locations so that the bit at location `i` moves to `perm[i]`.
pub fn permute_locations<T: Real>(state: &mut StateSlice<T>, perm: &[usize], threads: usize) -> Result<usize> {
    if perm.len() != state.l {
        return Err(Error::invalid("permutation length differs from local qubit count"));
    }
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
            return Err(Error::invalid("not a permutation of bit-locations"));
        }
    }
    // content[loc] = original location whose bit currently sits at loc
    let mut content: Vec<usize> = (0..perm.len()).collect();
    let mut swaps = 0;
    for target in 0..perm.len() {
        // which original location must end up at `target`
        let want = perm.iter().position(|&p| p == target).expect("bijection");
        let at = content.iter().position(|&c| c == want).expect("bijection");
        if at != target {
            local_swap(state, at, target, threads)?;
            content.swap(at, target);
            swaps += 1;
        }
    }
    Ok(swaps)
}

pub fn apply_phase<T: Real>(state: &mut StateSlice<T>, scalar: Complex64) -> Result<()> {
    if (scalar.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("phase {scalar} is not of unit modulus")));
    }
    let s = T::complex(scalar);
    state.amps.par_iter_mut().with_min_len(1 << 14).for_each(|a| *a = *a * s);
    Ok(())
}

/// Negates every amplitude whose bit `loc` is set.
pub fn apply_diagonal_z<T: Real>(state: &mut StateSlice<T>, loc: usize) -> Result<()> {
    check_locs(&[loc], state.l)?;
    let m = 1usize << loc;
    state.amps.par_iter_mut().with_min_len(1 << 14).enumerate().filter(|(i, _)| i & m != 0).for_each(|(_, a)| *a = -*a);
    Ok(())
}

const REDUCE_CHUNK: usize = 1 << 12;

/// `sum |a_i|^2`, summed per fixed chunk and then in chunk order (thread-count independent).
pub fn local_norm_sq<T: Real>(state: &StateSlice<T>) -> f64 {
    state
        .amps
        .par_chunks(REDUCE_CHUNK)
        .map(|c| c.iter().map(|a| T::widen(*a).norm_sqr()).sum::<f64>())
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// `-sum p ln p` with `p_i = |a_i|^2` and `0 ln 0 = 0`.
pub fn local_entropy_terms<T: Real>(state: &StateSlice<T>) -> f64 {
    state
        .amps
        .par_chunks(REDUCE_CHUNK)
        .map(|c| {
            c.iter()
                .map(|a| {
                    let p = T::widen(*a).norm_sqr();
                    if p > 0.0 {
                        -p * p.ln()
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

pub fn amplitude_at<T: Real>(state: &StateSlice<T>, index: usize) -> Result<Complex64> {
    state
        .amps
        .get(index)
        .map(|a| T::widen(*a))
        .ok_or_else(|| Error::invalid(format!("local index {index} outside slice of {}", state.len())))
}

/// Floating-point operations of one k-qubit gate over `2^n` amplitudes.
pub fn estimate_flops(k: usize, n: usize) -> u128 {
    (1u128 << n) * (8 * (1u128 << k) - 2)
}

/// Times each block size `1, 2, 4, ..., 2^k` on a scratch slice of `2^l` amplitudes and returns
/// the fastest.
pub fn autotune_block_size(k: usize, l: usize, cfg: &KernelConfig) -> Result<usize> {
    if k == 0 || k > l {
        return Err(Error::invalid(format!("cannot tune a {k}-qubit gate on {l} qubits")));
    }
    let mut rng = rand::rng();
    let g = crate::fusion::random_unitary((0..k).collect(), &mut rng);
    let locs: Vec<usize> = (0..k).collect();
    let mut state = StateSlice::<f64>::filled(l, Complex64::new((0.5f64).powf(l as f64 / 2.0), 0.0));
    let mut best = (f64::INFINITY, 1);
    let mut b = 1;
    while b <= 1 << k {
        let c = KernelConfig { block_size: Some(b), ..*cfg };
        apply_gate(&mut state, &g, &locs, &c)?;
        let start = Instant::now();
        for _ in 0..3 {
            apply_gate(&mut state, &g, &locs, &c)?;
        }
        let t = start.elapsed().as_secs_f64();
        if t < best.0 {
            best = (t, b);
        }
        b *= 2;
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateKind;
    use crate::fusion::{named_matrix, random_unitary};
    use crate::oracle::full_operator;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_state(l: usize, rng: &mut StdRng) -> StateSlice<f64> {
        let mut v: Vec<Complex64> =
            (0..1 << l).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        StateSlice::from_amplitudes(v).unwrap()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn x_on_one_qubit() {
        let mut s = StateSlice::from_amplitudes(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        apply_gate(&mut s, &named_matrix(GateKind::X).unwrap(), &[0], &KernelConfig::default()).unwrap();
        assert_eq!(s.amplitudes(), &[c(0.0, 0.8), c(0.6, 0.0)]);
    }

    #[test]
    fn x_on_low_bit_of_two() {
        let a: Vec<Complex64> = (0..4).map(|i| c(i as f64, 0.0)).collect();
        let mut s = StateSlice::from_amplitudes(a).unwrap();
        apply_gate(&mut s, &named_matrix(GateKind::X).unwrap(), &[0], &KernelConfig::default()).unwrap();
        let got: Vec<f64> = s.amplitudes().iter().map(|a| a.re).collect();
        assert_eq!(got, vec![1.0, 0.0, 3.0, 2.0]);
    }

    #[test]
    fn identity_leaves_state() {
        let mut rng = StdRng::seed_from_u64(5);
        let s0 = random_state(6, &mut rng);
        let mut s = s0.clone();
        apply_gate(&mut s, &GateMatrix::identity(vec![0, 1, 2]), &[1, 3, 5], &KernelConfig::default()).unwrap();
        assert_eq!(s, s0);
    }

    #[test]
    fn matches_dense_operator() {
        let mut rng = StdRng::seed_from_u64(11);
        for trial in 0..20 {
            let l = 8;
            let k = 1 + trial % 5;
            let mut locs: Vec<usize> = (0..l).collect();
            for i in 0..k {
                let j = rng.random_range(i..l);
                locs.swap(i, j);
            }
            locs.truncate(k);
            let g = random_unitary((0..k).collect(), &mut rng);
            let mut s = random_state(l, &mut rng);
            let op = full_operator(&g, &locs, l).unwrap();
            let dim = 1 << l;
            let expected: Vec<Complex64> =
                (0..dim).map(|r| (0..dim).map(|col| op[r * dim + col] * s.amplitudes()[col]).sum()).collect();
            apply_gate(&mut s, &g, &locs, &KernelConfig::default()).unwrap();
            assert!(max_diff(s.amplitudes(), &expected) < 1e-12, "trial {trial} locs {locs:?}");
        }
    }

    #[test]
    fn block_size_thread_and_split_invariance() {
        let mut rng = StdRng::seed_from_u64(2);
        let g = random_unitary(vec![0, 1, 2, 3], &mut rng);
        let s0 = random_state(14, &mut rng);
        let locs = [0, 3, 7, 12];
        let mut reference = s0.clone();
        let base = KernelConfig { block_size: Some(1), ..KernelConfig::default() };
        apply_gate(&mut reference, &g, &locs, &base).unwrap();
        for b in [2, 4, 8, 16] {
            let mut s = s0.clone();
            apply_gate(&mut s, &g, &locs, &KernelConfig { block_size: Some(b), ..base }).unwrap();
            assert!(max_diff(s.amplitudes(), reference.amplitudes()) < 1e-14);
        }
        for threads in [2, 3, 8] {
            let mut s = s0.clone();
            apply_gate(&mut s, &g, &locs, &KernelConfig { threads, ..base }).unwrap();
            assert_eq!(s, reference, "threads {threads}");
        }
        let mut s = s0.clone();
        apply_gate(&mut s, &g, &locs, &KernelConfig { split_fma: true, ..base }).unwrap();
        assert!(max_diff(s.amplitudes(), reference.amplitudes()) < 1e-14);
    }

    #[test]
    fn unsorted_locations_are_normalized() {
        let mut rng = StdRng::seed_from_u64(8);
        let g = random_unitary(vec![0, 1, 2], &mut rng);
        let s0 = random_state(6, &mut rng);
        let mut a = s0.clone();
        apply_gate(&mut a, &g, &[4, 1, 2], &KernelConfig::default()).unwrap();
        let sorted = g.with_targets(vec![4, 1, 2]).unwrap().sorted();
        let mut b = s0;
        apply_gate(&mut b, &sorted, &[1, 2, 4], &KernelConfig::default()).unwrap();
        assert!(max_diff(a.amplitudes(), b.amplitudes()) < 1e-15);
    }

    #[test]
    fn rejects_bad_locations() {
        let mut s = StateSlice::<f64>::zeros(3);
        let x = named_matrix(GateKind::X).unwrap();
        assert!(apply_gate(&mut s, &x, &[3], &KernelConfig::default()).is_err());
        let cz = named_matrix(GateKind::CZ).unwrap();
        assert!(apply_gate(&mut s, &cz, &[1, 1], &KernelConfig::default()).is_err());
        let cfg = KernelConfig { k_max: 1, ..KernelConfig::default() };
        assert!(apply_gate(&mut s, &cz, &[0, 1], &cfg).is_err());
        assert!(local_swap(&mut s, 0, 3, 1).is_err());
        assert!(apply_diagonal_z(&mut s, 5).is_err());
    }

    #[test]
    fn swaps() {
        let a: Vec<Complex64> = (0..4).map(|i| c(i as f64, 0.0)).collect();
        let mut s = StateSlice::from_amplitudes(a).unwrap();
        local_swap(&mut s, 0, 1, 1).unwrap();
        let got: Vec<f64> = s.amplitudes().iter().map(|a| a.re).collect();
        assert_eq!(got, vec![0.0, 2.0, 1.0, 3.0]);

        let a: Vec<Complex64> = (0..8).map(|i| c(i as f64, 0.0)).collect();
        let mut s = StateSlice::from_amplitudes(a).unwrap();
        local_swap(&mut s, 2, 0, 1).unwrap();
        let got: Vec<f64> = s.amplitudes().iter().map(|a| a.re).collect();
        assert_eq!(got, vec![0.0, 4.0, 2.0, 6.0, 1.0, 5.0, 3.0, 7.0]);
        let before = s.clone();
        local_swap(&mut s, 1, 1, 1).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn swap_threaded_matches_sequential_and_is_involution() {
        let mut rng = StdRng::seed_from_u64(4);
        let s0 = random_state(18, &mut rng);
        let mut a = s0.clone();
        let mut b = s0.clone();
        local_swap(&mut a, 3, 17, 1).unwrap();
        local_swap(&mut b, 17, 3, 4).unwrap();
        assert_eq!(a, b);
        local_swap(&mut a, 3, 17, 4).unwrap();
        assert_eq!(a, s0);
    }

    #[test]
    fn permute_locations_moves_bits() {
        let a: Vec<Complex64> = (0..8).map(|i| c(i as f64, 0.0)).collect();
        let mut s = StateSlice::from_amplitudes(a).unwrap();
        // bit 0 -> 1, bit 1 -> 2, bit 2 -> 0
        permute_locations(&mut s, &[1, 2, 0], 1).unwrap();
        for old in 0..8usize {
            let new = ((old & 1) << 1) | ((old >> 1 & 1) << 2) | (old >> 2 & 1);
            assert_eq!(s.amplitudes()[new].re, old as f64);
        }
        assert!(permute_locations(&mut s, &[0, 0, 1], 1).is_err());
    }

    #[test]
    fn phases_and_z() {
        let mut rng = StdRng::seed_from_u64(6);
        let s0 = random_state(5, &mut rng);
        let mut s = s0.clone();
        apply_phase(&mut s, c(1.0, 0.0)).unwrap();
        assert_eq!(s, s0);
        apply_phase(&mut s, c(-1.0, 0.0)).unwrap();
        apply_phase(&mut s, c(-1.0, 0.0)).unwrap();
        assert_eq!(s, s0);
        apply_phase(&mut s, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)).unwrap();
        assert!((local_norm_sq(&s) - 1.0).abs() < 1e-14);
        assert!(apply_phase(&mut s, c(1.1, 0.0)).is_err());

        let mut z = s0.clone();
        apply_diagonal_z(&mut z, 2).unwrap();
        let mut viag = s0.clone();
        apply_gate(&mut viag, &named_matrix(GateKind::Z).unwrap(), &[2], &KernelConfig::default()).unwrap();
        assert!(max_diff(z.amplitudes(), viag.amplitudes()) == 0.0);
        apply_diagonal_z(&mut z, 2).unwrap();
        assert_eq!(z, s0);

        let mut one = StateSlice::from_amplitudes(vec![c(0.6, 0.0), c(0.8, 0.0)]).unwrap();
        apply_diagonal_z(&mut one, 0).unwrap();
        assert_eq!(one.amplitudes(), &[c(0.6, 0.0), c(-0.8, 0.0)]);
    }

    #[test]
    fn reductions() {
        let (l, n) = (6i32, 10i32);
        let u = StateSlice::<f64>::filled(l as usize, c(0.5f64.powf(n as f64 / 2.0), 0.0));
        assert!((local_norm_sq(&u) - 2f64.powi(l - n)).abs() < 1e-15);
        let mut basis = StateSlice::<f64>::zeros(4);
        basis.amplitudes_mut()[3] = c(1.0, 0.0);
        assert_eq!(local_entropy_terms(&basis), 0.0);
        assert_eq!(amplitude_at(&basis, 3).unwrap(), c(1.0, 0.0));
        assert!(amplitude_at(&basis, 16).is_err());

        let mut rng = StdRng::seed_from_u64(7);
        let s = random_state(15, &mut rng);
        let mut reference = 0.0;
        for a in s.amplitudes() {
            let p = a.norm_sqr();
            reference -= p * p.ln();
        }
        assert!((local_entropy_terms(&s) - reference).abs() < 1e-12);
    }

    #[test]
    fn flop_counts() {
        assert_eq!(estimate_flops(1, 0), 14);
        assert_eq!(estimate_flops(1, 1), 28);
        assert_eq!(estimate_flops(2, 2), 120);
    }

    #[test]
    fn single_precision_tracks_double() {
        let mut rng = StdRng::seed_from_u64(12);
        let g = random_unitary(vec![0, 1, 2], &mut rng);
        let s = random_state(8, &mut rng);
        let mut lo =
            StateSlice::<f32>::from_amplitudes(s.amplitudes().iter().map(|&a| f32::complex(a)).collect()).unwrap();
        let mut hi = s;
        apply_gate(&mut hi, &g, &[0, 4, 6], &KernelConfig::default()).unwrap();
        apply_gate(&mut lo, &g, &[0, 4, 6], &KernelConfig::default()).unwrap();
        let widened: Vec<Complex64> = lo.amplitudes().iter().map(|&a| f32::widen(a)).collect();
        assert!(max_diff(&widened, hi.amplitudes()) < 1e-6);
    }

    #[test]
    fn autotune_returns_candidate() {
        let b = autotune_block_size(3, 10, &KernelConfig::default()).unwrap();
        assert!(b.is_power_of_two() && b <= 8);
    }
}
