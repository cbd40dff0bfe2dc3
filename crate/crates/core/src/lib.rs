//! Differentiable least-squares solving of linear space-time PDEs and sparse
//! discovery of governing equations from gridded data.

pub mod assembly;
pub mod cli;
pub mod datagen;
pub mod dense;
pub mod discovery;
pub mod error;
pub mod fgmres;
pub mod grid;
pub mod multigrid;
pub mod neurlp;
pub mod problem;
pub mod sparse;
pub mod stencil;

pub use error::{Error, Result};
