//! Exact and statistical analysis of a two-particle Bell inequality built on
//! hyperentangled states: N blocks of four qubits, two qubits per block on
//! each particle.
//!
//! * [`pauli`]: Pauli products on the `4N`-qubit register and the named
//!   single-qubit observables.
//! * [`state`]: the state as a stabilizer group and as a dense vector.
//! * [`bell`]: the `4^N`-term Bell expression and its quantum value.
//! * [`lhv`]: the local-realistic bound over deterministic valuations.
//! * [`efficiency`]: noise-degraded bounds and detection-efficiency thresholds.
//! * [`montecarlo`]: finite-shot experiments with lossy detectors.
//! * [`cli`]: the `hyperbell` command line.

pub mod bell;
pub mod cli;
pub mod efficiency;
pub mod error;
pub mod lhv;
pub mod montecarlo;
pub mod pauli;
pub mod state;

pub use error::{Error, Result};
