//! Measures kernel throughput for k = 1..5 on low and high bit-locations.

use qcsim::cli::{bench_csv, cmd_bench, BenchArgs, Locs};

fn main() -> qcsim::Result<()> {
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut thread_counts = vec![1, threads];
    thread_counts.dedup();
    let rows = cmd_bench(&BenchArgs {
        k: vec![1, 2, 3, 4, 5],
        qubits: 20,
        locs: vec![Locs::Low, Locs::High],
        block_size: None,
        threads: thread_counts,
        repeats: 3,
        split_fma: false,
    })?;
    print!("{}", bench_csv(&rows));
    Ok(())
}
