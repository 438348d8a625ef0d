//! Simulation of adiabatic quantum computation on dense state vectors and
//! the AQCLS hybrid search that learns a problem Hamiltonian by combining
//! adiabatic sampling with a tabu list and a shrinking Gaussian step.
//!
//! Conventions: `ℏ = 1`; basis states are indexed big-endian (qubit 0 is the
//! most significant bit); `σ_z` has eigenvalue `+1` on bit value 0.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod grover;
pub mod hamiltonians;
pub mod markov;
pub mod objective;
pub mod quantum;
pub mod rng;
pub mod search;
pub mod spectral;

pub use error::{Error, Result};
pub use evolution::{candidate_distribution, evolve, generate_candidate, Branch, Candidate, EvolutionSpec, Schedule};
pub use hamiltonians::{
    effective_problem_hamiltonian, grover_initial, transverse_field_initial, InitialHamiltonian, ProblemFamily,
    TabuHamiltonian,
};
pub use objective::Objective;
pub use quantum::{eigendecompose, ground_state, EigenSystem, HermitianOperator, StateVector};
pub use search::{run_aqcls, AqclsConfig, AqclsResult, IterationRecord};
pub use spectral::{adiabatic_time_bound, gap_profile, SpectralProfile};
