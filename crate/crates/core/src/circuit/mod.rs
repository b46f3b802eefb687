//! Linear-optical mesh compilation and imperfection models.

mod characterization;
mod components;
mod mesh;
mod noise;

pub use characterization::{rhom_fringe, rhom_scan, statistical_fidelity, Fringe};
pub use components::{m_bs, m_mzi, m_ps};
pub use mesh::{
    compile_basis, detection_vector, mzi_elimination, network_unitary, projector_from_settings,
    triangular_phases, triangular_phases_with, Elimination, MziPhase, PhaseSettings, PsPlacement,
};
pub use noise::{apply_noise, basis_from_settings, jitter_settings, NoiseModel, NoisyInputs};
