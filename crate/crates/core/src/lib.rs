//! Spin-photon interface of a singly charged quantum dot in a birefringent
//! micropillar cavity: model operators, master-equation and trajectory
//! dynamics, semiclassical excitation, emission and entanglement analytics,
//! multiphoton cluster states, transmission spectra and parameter maps.

pub mod dynamics;
pub mod emission;
pub mod error;
pub mod excitation;
pub mod format;
pub mod model;
pub mod multiphoton;
pub mod ode;
pub mod optimize;
pub mod params;
pub mod sweep;
pub mod transmission;

#[cfg(any(test, feature = "oracles"))]
pub mod oracles;

pub use error::{Error, Result};
pub use params::SystemParams;
