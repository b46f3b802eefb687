//! Simulation and certification toolkit for multidimensional photonic
//! entanglement.

pub mod basis;
pub mod circuit;
pub mod correlations;
pub mod error;
pub mod io;
pub mod linalg;
pub mod nonlocality;
pub mod qkd;
pub mod reference;
pub mod sdp;
pub mod state;
pub mod steering;
pub mod tolerance;
pub mod tomography;
pub mod witness;

pub use basis::{common_eigenbasis, MeasurementBasis};
pub use error::{Error, Result};
pub use state::{
    entangled_state, fidelity, make_pure_state, maximally_entangled, partial_trace, DensityMatrix,
    PureState, Side,
};
pub use tolerance::{Tolerances, TOL};
