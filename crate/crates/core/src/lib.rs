pub mod codebook;
pub mod error;
pub mod evolution;
pub mod features;
pub mod harness;
pub mod image;
mod io_util;
pub mod linear;

pub use error::{FameError, Result};
