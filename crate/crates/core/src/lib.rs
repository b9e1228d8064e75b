//! Differentiable 2D Gaussian splatting on the CPU.
//!
//! Scenes are sets of oriented elliptical disks (surfels) rendered by exact
//! ray-splat intersection. The crate covers rendering, analytic gradients,
//! training, mesh extraction by TSDF fusion, and the file formats around
//! them.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod gradients;
pub mod imgbuf;
pub mod io;
pub mod losses;
pub mod meshing;
pub mod metrics;
pub mod model;
pub mod rasterizer;
pub mod sh;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
