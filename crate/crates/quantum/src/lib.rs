//! Quantum side of the pipeline: Pauli Hamiltonians, exact
//! diagonalization, statevector and density-matrix circuit simulation,
//! shot sampling with readout errors and mitigation, measurement budgets,
//! VQE and dataset labeling.
//!
//! Pauli strings are read left to right as qubits `0, 1, ...`; qubit `q`
//! is bit `q` of a basis-state index. Energies are in Hartree.

pub mod budget;
pub mod circuit;
pub mod density;
pub mod error;
pub mod exact;
pub mod label;
pub mod measure;
pub mod noise;
pub mod pauli;
pub mod statevector;
pub mod vqe;

pub use budget::{estimate_shot_budget, shot_probability, ShotBudget};
pub use circuit::{build_ansatz, Angle, AnsatzKind, Circuit, Gate};
pub use density::{simulate_density, DensityMatrix};
pub use error::{Error, Result};
pub use exact::exact_ground_state;
pub use label::{label_dataset, BondLengthLibrary, EngineConfig, HamiltonianSource, IndexedDir};
pub use measure::{apply_readout, mitigate_readout, sample_energy, Calibration, EnergyEstimate, ShotPlan};
pub use noise::{NoiseModel, ReadoutError};
pub use pauli::{parse_hamiltonian, PauliHamiltonian, PauliString, C64};
pub use statevector::{expectation, simulate_statevector, variance, VarianceMode};
pub use vqe::{vqe, Backend, InitialPoint, Mitigation, OptimizerConfig, VqeResult};
