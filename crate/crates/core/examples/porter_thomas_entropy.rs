//! Compares the output entropy of random circuits with the Porter-Thomas prediction.

use qcsim::circuit::{generate_supremacy, GenerateOptions};
use qcsim::cli::porter_thomas_entropy;
use qcsim::dist::{run, RunOptions};
use qcsim::scheduler::{compile, CompileConfig};

fn main() -> qcsim::Result<()> {
    for (rows, cols) in [(2, 7), (4, 4)] {
        let n = rows * cols;
        for depth in [5, 10, 25] {
            let mut total = 0.0;
            for seed in 0..5 {
                let circuit = generate_supremacy(rows, cols, depth, seed, GenerateOptions::default())?;
                let plan = compile(&circuit, &CompileConfig { local_qubits: n - 2, ..CompileConfig::default() })?;
                let (_, stats) = run::<f64>(&plan, plan.init, &RunOptions { entropy: true, ..Default::default() })?;
                total += stats.entropy.unwrap_or(0.0);
            }
            println!(
                "n={n} depth={depth:>2}: mean entropy {:.4}, Porter-Thomas {:.4}",
                total / 5.0,
                porter_thomas_entropy(n)
            );
        }
    }
    Ok(())
}
