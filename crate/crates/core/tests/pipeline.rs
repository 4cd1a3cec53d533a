//! End-to-end comparisons of compile + distributed run against the dense reference.

use qcsim::circuit::{generate_supremacy, Circuit, Gate, GateKind, GenerateOptions, InitialState, SkipOptions};
use qcsim::dist::{run, RunOptions};
use qcsim::fusion::random_unitary;
use qcsim::kernel::KernelConfig;
use qcsim::oracle::{simulate_dense, simulate_gates};
use qcsim::scheduler::{compile, CompileConfig, SwapPolicy};

const KEEP_FINAL_CZ: SkipOptions = SkipOptions { initial_h: true, final_cz: false };

#[test]
fn hand_written_document_parses_and_runs() {
    let doc = r#"{"rows":1,"cols":2,"depth":1,"seed":0,"gates":[
        {"kind":"H","qubits":[0],"cycle":0},
        {"kind":"CZ","qubits":[0,1],"cycle":1}]}"#;
    let c = Circuit::from_json(doc).unwrap();
    assert_eq!(c.gates.len(), 2);
    let plan =
        compile(&c, &CompileConfig { local_qubits: 1, skip: SkipOptions::NONE, ..CompileConfig::default() }).unwrap();
    let (state, _) = run::<f64>(&plan, plan.init, &RunOptions::default()).unwrap();
    let expected = simulate_dense(&c).unwrap();
    assert!(expected.max_abs_diff(&state.to_logical_vector()) < 1e-15);
}

#[test]
fn every_policy_and_kmax_matches_the_oracle() {
    let c = generate_supremacy(2, 4, 18, 21, GenerateOptions::default()).unwrap();
    let expected = simulate_dense(&c).unwrap();
    for policy in [SwapPolicy::Search, SwapPolicy::Baseline] {
        for k_max in 2..=5 {
            for g in 0..=3 {
                for specialize in [false, true] {
                    let cfg = CompileConfig {
                        local_qubits: 8 - g,
                        k_max,
                        specialize,
                        policy,
                        skip: KEEP_FINAL_CZ,
                        ..CompileConfig::default()
                    };
                    let plan = match compile(&c, &cfg) {
                        Ok(plan) => plan,
                        Err(e) if policy == SwapPolicy::Baseline => {
                            assert!(e.to_string().contains("baseline"), "{e}");
                            continue;
                        }
                        Err(e) => panic!("{e}"),
                    };
                    let (state, _) = run::<f64>(&plan, plan.init, &RunOptions::default()).unwrap();
                    let diff = expected.max_abs_diff(&state.to_logical_vector());
                    assert!(diff < 1e-12, "{policy} k={k_max} g={g} specialize={specialize}: {diff}");
                }
            }
        }
    }
}

#[test]
fn kmax_one_rejects_two_qubit_gates() {
    let c = generate_supremacy(2, 2, 4, 0, GenerateOptions::default()).unwrap();
    assert!(compile(&c, &CompileConfig { local_qubits: 4, k_max: 1, ..CompileConfig::default() }).is_err());
}

#[test]
fn dense_payloads_and_cnots_survive_distribution() {
    let mut rng = rand::rng();
    let mut c = Circuit::with_qubits(6);
    for q in 0..6 {
        c.push(Gate::single(GateKind::H, q, 0));
    }
    for cycle in 1..8u32 {
        let a = (cycle as usize * 2) % 6;
        let b = (a + 3) % 6;
        c.push(Gate::new(GateKind::CNOT, &[a, b], cycle));
        let u = random_unitary(vec![0, 1], &mut rng);
        c.push(Gate::dense(&[(a + 1) % 6, (a + 5) % 6], u.entries().to_vec(), cycle));
        let v = random_unitary(vec![0], &mut rng);
        c.push(Gate::dense(&[(a + 2) % 6], v.entries().to_vec(), cycle));
        c.push(Gate::single(GateKind::Z, b, cycle));
    }
    c.validate().unwrap();
    let expected = simulate_gates(6, &c.gates, InitialState::Basis0).unwrap();
    for g in 0..=3 {
        let plan = compile(&c, &CompileConfig { local_qubits: 6 - g, skip: KEEP_FINAL_CZ, ..CompileConfig::default() })
            .unwrap();
        let opts = RunOptions { kernel: KernelConfig { threads: 2, ..KernelConfig::default() }, ..Default::default() };
        let (state, _) = run::<f64>(&plan, plan.init, &opts).unwrap();
        assert!(expected.max_abs_diff(&state.to_logical_vector()) < 1e-12, "g={g}");
    }
}

#[test]
fn single_precision_tracks_double() {
    let c = generate_supremacy(3, 3, 20, 8, GenerateOptions::default()).unwrap();
    let plan =
        compile(&c, &CompileConfig { local_qubits: 7, skip: KEEP_FINAL_CZ, ..CompileConfig::default() }).unwrap();
    let (single, stats) = run::<f32>(&plan, plan.init, &RunOptions::default()).unwrap();
    let expected = simulate_dense(&c).unwrap();
    assert!(expected.max_abs_diff(&single.to_logical_vector()) < 1e-5);
    assert!((stats.norm_sq - 1.0).abs() < 1e-5);
}

#[test]
fn amplitude_queries_match_the_vector() {
    let c = generate_supremacy(2, 5, 15, 2, GenerateOptions::default()).unwrap();
    let plan = compile(&c, &CompileConfig { local_qubits: 7, ..CompileConfig::default() }).unwrap();
    let queries = vec![0, 1, 513, 1023];
    let (state, stats) =
        run::<f64>(&plan, plan.init, &RunOptions { amplitudes: queries.clone(), ..Default::default() }).unwrap();
    let v = state.to_logical_vector();
    for (x, a) in queries.iter().zip(&stats.amplitudes) {
        assert_eq!(v[*x], *a);
    }
}
