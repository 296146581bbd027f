//! Desk-scale emulation of an analog Rydberg quantum processor, with the
//! two hybrid pipelines built on top of it: a slave-spin / cluster-mean-field
//! solver for the half-filled 2D Hubbard model (equilibrium Mott transition
//! and interaction quenches) and a digital-analog variational eigensolver for
//! molecular Pauli Hamiltonians with derandomized energy estimation.
//!
//! Units: linear frequencies in MHz everywhere, time in microseconds,
//! distances in micrometers; propagators multiply by 2*pi. Bit value 1 in a
//! bitstring denotes the excited state |r> and `Z|r> = +|r>`.
//!
//! The numerical core is generic over the floating scalar (`f32`/`f64`)
//! through [`scalar::Scalar`]; the aliases below fix the `f64` instantiation
//! that all shipped tools use.

pub mod derand;
pub mod optimize;
pub mod device;
pub mod dynamics;
pub mod embedding;
pub mod error;
pub mod linalg;
pub mod paulialg;
pub mod rng;
pub mod scalar;
pub mod slavespin;
pub mod spectral;
pub mod vqe;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar used by the command-line tools and tests.
pub type Real = f64;
/// Complex amplitude over [`Real`].
pub type Complex = num_complex::Complex<Real>;

pub type PauliHamiltonian = paulialg::PauliHamiltonian<Real>;
pub type PauliTerm = paulialg::PauliTerm<Real>;
pub type QuantumState = dynamics::QuantumState<Real>;
pub type DensityMatrix = dynamics::DensityMatrix<Real>;
pub type NoiseSpec = dynamics::NoiseSpec<Real>;
pub type EvolutionSettings = dynamics::EvolutionSettings<Real>;
pub type AtomRegister = device::AtomRegister<Real>;
pub type DeviceConstants = device::DeviceConstants<Real>;
pub type Waveform = device::Waveform<Real>;
pub type DriveProgram = device::DriveProgram<Real>;
pub type EmbeddingProblem = embedding::EmbeddingProblem<Real>;
pub type EmbeddingResult = embedding::EmbeddingResult<Real>;
pub type MeasurementPlan = derand::MeasurementPlan;
pub type LatticeSpec = slavespin::LatticeSpec<Real>;
pub type ClusterModel = slavespin::ClusterModel<Real>;
pub type SsmfSettings = slavespin::SsmfSettings<Real>;
pub type SsmfState = slavespin::SsmfState<Real>;
pub type PulseParams = vqe::PulseParams<Real>;
pub type VqeConfig = vqe::VqeConfig<Real>;
pub type VqeRun = vqe::VqeRun<Real>;
