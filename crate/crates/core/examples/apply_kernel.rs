//! Applies a random 4-qubit gate on scattered bit-locations with different block sizes and thread counts.

use qcsim::fusion::random_unitary;
use qcsim::kernel::{apply_gate, local_norm_sq, KernelConfig, StateSlice};
use qcsim::Complex64;

fn main() -> qcsim::Result<()> {
    let n = 16;
    let g = random_unitary(vec![0, 1, 2, 3], &mut rand::rng());
    let locs = [1, 5, 9, 14];
    let start = StateSlice::filled(n, Complex64::new((0.5f64).powf(n as f64 / 2.0), 0.0));
    let mut reference = start.clone();
    apply_gate(&mut reference, &g, &locs, &KernelConfig::default())?;
    for (block, threads) in [(Some(1), 1), (Some(4), 1), (Some(16), 1), (None, 4)] {
        let cfg = KernelConfig { block_size: block, threads, ..KernelConfig::default() };
        let mut s = start.clone();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        pool.install(|| apply_gate(&mut s, &g, &locs, &cfg))?;
        let same = s.amplitudes() == reference.amplitudes();
        println!("block {:>2}, {threads} threads: norm {:.15}, identical {same}", cfg.block_for(4), local_norm_sq(&s));
    }
    Ok(())
}
