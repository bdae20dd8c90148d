//! Heat-kernel renormalization workbench.

pub mod cli;
pub mod cover;
pub mod error;
pub mod expansion;
pub mod graphs;
pub mod heatkernel;
pub mod linalg;
pub mod poly;
pub mod quad;
pub mod renorm;
pub mod scalar;
pub mod weights;
pub mod wick;

pub use error::{Error, Result};
