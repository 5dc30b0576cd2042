//! Simulation, decoding, fitting and resource estimation for rotated surface
//! codes split across processors by Bell-pair seams.

pub mod circuit;
pub mod decoder;
pub mod dem;
pub mod error;
pub mod fit;
pub mod frame;
pub mod patch;
pub mod par;
pub mod pauli;
pub mod resource;
pub mod sampler;
pub mod sv;
pub mod tableau;

pub use error::{Error, Result};
