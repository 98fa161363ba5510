//! Semiclassical dynamics of an optical cavity coupled to two mechanical
//! resonators with phase-dependent phonon hopping.

pub mod analysis;
pub mod error;
pub mod integrator;
pub mod io;
pub mod model;
pub mod stability;
pub mod steady_state;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{Component, Convention, ParamId, StateVector, SystemParams};
