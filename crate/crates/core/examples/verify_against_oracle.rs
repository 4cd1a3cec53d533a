//! Checks the full pipeline against the dense reference simulator, then shows that a corrupted plan is caught.

use qcsim::cli::{cmd_verify, VerifyArgs};

fn main() -> qcsim::Result<()> {
    let report = cmd_verify(&VerifyArgs { max_qubits: 10, trials: 20, seed: 1, inject_fault: false })?;
    println!("clean: passed={} max diff {:.1e}", report.passed, report.max_abs_diff);
    let faulty = cmd_verify(&VerifyArgs { max_qubits: 10, trials: 5, seed: 1, inject_fault: true })?;
    println!("fault injected: passed={} failures={}", faulty.passed, faulty.failures);
    Ok(())
}
