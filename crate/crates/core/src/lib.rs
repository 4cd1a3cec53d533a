//! Full-amplitude quantum circuit simulation with gate fusion, communication-minimizing
//! scheduling and an emulated multi-rank execution model.
//!
//! The pipeline is:
//!
//! 1. [`circuit`] generates random supremacy circuits on a 2D grid (or parses them from JSON).
//! 2. [`scheduler`] compiles a circuit into a [`scheduler::SchedulePlan`]: stages of local gates
//!    separated by global-to-local swaps, gates fused into k-qubit clusters, and a qubit-to-bit
//!    mapping that keeps the busiest qubits at low-order bit-locations.
//! 3. [`dist`] executes the plan across `2^g` emulated ranks, each owning `2^l` amplitudes, using
//!    the in-place kernels from [`kernel`].
//! 4. [`oracle`] is a deliberately naive dense simulator used as ground truth.
//!
//! ```
//! use qcsim::circuit::{generate_supremacy, GenerateOptions};
//! use qcsim::scheduler::{compile, CompileConfig};
//! use qcsim::dist::{run, InitialState};
//!
//! let circuit = generate_supremacy(3, 3, 10, 7, GenerateOptions::default()).unwrap();
//! let plan = compile(&circuit, &CompileConfig { local_qubits: 7, ..CompileConfig::default() }).unwrap();
//! let (state, _stats) = run::<f64>(&plan, InitialState::from(plan.init), &Default::default()).unwrap();
//! assert!((state.norm_sq() - 1.0).abs() < 1e-10);
//! ```

pub mod circuit;
pub mod cli;
pub mod dist;
pub mod error;
pub mod fusion;
pub mod kernel;
pub mod oracle;
pub mod rng;
pub mod scheduler;

pub use error::{Error, Result};
pub use num_complex::Complex64;
