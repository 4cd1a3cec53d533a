//! Generates a random supremacy circuit, prints its statistics and round-trips the JSON file format.

use qcsim::circuit::{generate_supremacy, stats, Circuit, GenerateOptions};

fn main() -> qcsim::Result<()> {
    let circuit = generate_supremacy(6, 6, 25, 42, GenerateOptions::default())?;
    let s = stats(&circuit);
    println!("{} qubits, depth {}", s.qubits, s.depth);
    println!("{} gates in total, {} simulated", s.total_gates, s.simulated_gates);
    for (kind, count) in &s.by_kind {
        println!("  {kind:>5}: {count}");
    }
    let json = circuit.to_json();
    assert_eq!(Circuit::from_json(&json)?, circuit);
    println!("JSON document: {} bytes", json.len());
    Ok(())
}
