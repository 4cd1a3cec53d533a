//! Fuses a short gate sequence into one 3-qubit unitary and checks it against gate-by-gate application.

use qcsim::circuit::{Gate, GateKind};
use qcsim::fusion::{fuse, named_matrix};
use qcsim::kernel::{apply_gate, KernelConfig, StateSlice};
use qcsim::Complex64;

fn main() -> qcsim::Result<()> {
    let gates = [
        Gate::new(GateKind::CZ, &[0, 1], 1),
        Gate::single(GateKind::SqrtX, 0, 2),
        Gate::single(GateKind::T, 1, 2),
        Gate::new(GateKind::CZ, &[1, 2], 3),
        Gate::single(GateKind::SqrtY, 2, 4),
    ];
    let fused = fuse(&gates, &[0, 1, 2])?;
    println!(
        "fused {} gates into a {}x{} matrix, unitarity deviation {:.1e}",
        gates.len(),
        fused.dim(),
        fused.dim(),
        fused.unitarity_deviation()
    );

    let start = StateSlice::filled(3, Complex64::new(8f64.sqrt().recip(), 0.0));
    let cfg = KernelConfig::default();
    let mut once = start.clone();
    apply_gate(&mut once, &fused, &[0, 1, 2], &cfg)?;
    let mut stepwise = start;
    for g in &gates {
        apply_gate(&mut stepwise, &named_matrix(g.kind)?, &g.qubits, &cfg)?;
    }
    let diff = once.amplitudes().iter().zip(stepwise.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("max difference to stepwise application: {diff:.1e}");
    Ok(())
}
