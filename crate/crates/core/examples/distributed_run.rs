//! Runs an 18-qubit circuit over 1, 4 and 16 emulated ranks and compares the resulting amplitudes.

use qcsim::circuit::{generate_supremacy, GenerateOptions};
use qcsim::dist::{run, RunOptions};
use qcsim::kernel::KernelConfig;
use qcsim::scheduler::{compile, CompileConfig};

fn main() -> qcsim::Result<()> {
    let circuit = generate_supremacy(3, 6, 25, 3, GenerateOptions::default())?;
    let opts = RunOptions { kernel: KernelConfig { threads: 2, ..KernelConfig::default() }, ..Default::default() };
    let mut reference = None;
    for g in [0, 2, 4] {
        let plan = compile(&circuit, &CompileConfig { local_qubits: 18 - g, ..CompileConfig::default() })?;
        let (state, stats) = run::<f64>(&plan, plan.init, &opts)?;
        let v = state.to_logical_vector();
        let diff = match &reference {
            None => 0.0,
            Some(r) => {
                v.iter().zip(r).map(|(a, b): (&qcsim::Complex64, &qcsim::Complex64)| (a - b).norm()).fold(0.0, f64::max)
            }
        };
        reference.get_or_insert(v);
        println!(
            "{:>2} ranks: {} swaps, {} exchanges, {:.1} MB sent, {:.3} s, max diff {diff:.1e}",
            1 << g,
            plan.num_swaps(),
            stats.all_to_alls(),
            stats.per_rank.iter().map(|r| r.bytes_sent).sum::<u64>() as f64 / 1e6,
            stats.wall_secs
        );
    }
    Ok(())
}
