pub mod cli;
pub mod cone_geometry;
pub mod error;
mod ext_real;
pub mod mixed_norms;
pub mod numerics;
pub mod par;
pub mod spectral_models;
pub mod transforms;
pub mod verification;
pub mod weights;

pub use error::{Error, Result};
