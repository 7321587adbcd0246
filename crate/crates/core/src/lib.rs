//! Numerical core for constructing and verifying branched minimal graphs
//! built from discrete spherical reflection symmetry.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, configuration
//! and the command-line front end live in the `branchlab` crate.

#![no_std]
extern crate alloc;

pub mod bifurcate;
pub mod branch;
pub mod eigen;
pub mod error;
pub mod fem;
pub mod harmonic;
pub mod math;
pub mod mesh;
pub mod mse;
pub mod sparse;
pub mod spectral;
pub mod tiling;

pub use error::{Error, Result};
