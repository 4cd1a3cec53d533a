//! Compiles a 42-qubit circuit for 30 local qubits and compares swap counts across policies and settings.

use qcsim::circuit::{generate_supremacy, GenerateOptions};
use qcsim::scheduler::{compile, CompileConfig, ScheduleReport, SwapPolicy};

fn main() -> qcsim::Result<()> {
    let circuit = generate_supremacy(6, 7, 25, 7, GenerateOptions::default())?;
    for specialize in [true, false] {
        for policy in [SwapPolicy::Search, SwapPolicy::Baseline] {
            let cfg = CompileConfig {
                local_qubits: 30,
                specialize,
                policy,
                worst_case_dense: true,
                ..CompileConfig::default()
            };
            let plan = compile(&circuit, &cfg)?;
            println!(
                "specialize={specialize:<5} policy={policy:<8} swaps={} clusters={} specialized={}",
                plan.num_swaps(),
                plan.num_clusters(),
                plan.num_specialized()
            );
        }
    }
    let plan = compile(&circuit, &CompileConfig { local_qubits: 30, ..CompileConfig::default() })?;
    let report = ScheduleReport::build(&circuit, &plan, &[3, 4, 5])?;
    println!("clusters per k_max: {:?}", report.clusters_per_kmax);
    for (i, d) in report.swap_directives.iter().enumerate() {
        println!("swap {i}: {:?}", d.pairs);
    }
    Ok(())
}
