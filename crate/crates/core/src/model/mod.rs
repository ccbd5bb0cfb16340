//! Composite Hilbert space, model operators and the pump kick.

pub mod basis;
pub mod hamiltonian;
pub mod kick;
pub mod operator;
pub mod state;

pub use basis::{BasisState, CompositeBasis, MatterLevel};
pub use hamiltonian::{
    annihilation, build_hamiltonian, build_nonhermitian, excitation_number, jump_operators, level_projector,
    photon_number, trion_number, ModelOperators, Polarization,
};
pub use kick::{apply_coherent_kick, apply_coherent_kick_with_tolerance, kick_density, square_pulse_hamiltonian, KickResult};
pub use operator::Operator;
pub use state::{DensityOperator, PureState};
