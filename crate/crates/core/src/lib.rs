//! Discrete Morrey, Hardy-Morrey and localizable Hardy-Morrey analysis on
//! uniform grids in one and two dimensions.

pub mod atoms;
mod diff;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod grid;
pub mod kernels;
pub mod maximal;
pub mod morrey;
pub mod psido;
pub mod stats;
pub(crate) mod spectral;

pub use error::{Error, Result};
pub use grid::{Cube, CubeFamily, DyadicCube, Grid, GridFunction};
pub use morrey::MorreyParams;
